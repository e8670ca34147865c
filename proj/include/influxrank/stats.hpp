#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>

#include "influxrank/dataset.hpp"

namespace influxrank {

/// value -> number of users with that value.
using Histogram = std::map<std::int64_t, std::int64_t>;

struct DistributionReport {
  Histogram followers;
  Histogram friends;
  Histogram tweets;
  /// Pearson correlation of follower vs friend counts; absent on zero variance.
  std::optional<double> follower_friend_correlation;
};

/// Throws ValidationError on an empty dataset.
DistributionReport degree_stats(const Dataset& dataset);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Log-log slope of a histogram estimated on logarithmic (power-of-two) bins:
/// OLS of ln(count / bin width) against ln(geometric bin centre). Zero values
/// are ignored. Absent when fewer than two non-empty bins exist.
std::optional<double> log_log_slope(const Histogram& hist);

}  // namespace influxrank
