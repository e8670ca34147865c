#include "influxrank/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace influxrank::csv {

std::string num(double value) {
  if (value == 0.0) return "0";  // folds -0
  return fmt::format("{:.12g}", value);
}

std::vector<std::string> split(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view field) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw std::invalid_argument("not a number: '" + std::string(field) + "'");
  return v;
}

long long to_int(std::string_view field) {
  long long v = 0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size())
    throw std::invalid_argument("not an integer: '" + std::string(field) + "'");
  return v;
}

}  // namespace influxrank::csv
