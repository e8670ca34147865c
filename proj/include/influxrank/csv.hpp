#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace influxrank::csv {

/// Fixed 12-significant-digit rendering used by every emitted table.
std::string num(double value);

/// Splits one line on commas; fields never contain commas or quotes here.
std::vector<std::string> split(std::string_view line);

double to_double(std::string_view field);
long long to_int(std::string_view field);

}  // namespace influxrank::csv
