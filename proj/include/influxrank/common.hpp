#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace influxrank {

using UserIndex = std::uint32_t;
using TweetIndex = std::uint32_t;

inline constexpr UserIndex kNoUser = std::numeric_limits<UserIndex>::max();
inline constexpr TweetIndex kNoTweet = std::numeric_limits<TweetIndex>::max();
inline constexpr int kHours = 24;
inline constexpr int kDays = 7;
inline constexpr std::int64_t kSecondsPerDay = 86400;

/// Malformed input record. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver gave up; carries the residual of the last sweep.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

}  // namespace influxrank
