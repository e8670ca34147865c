#include "influxrank/stats.hpp"

#include <cmath>
#include <vector>

namespace influxrank {

DistributionReport degree_stats(const Dataset& dataset) {
  const auto n = dataset.num_users();
  if (n == 0) throw ValidationError("degree_stats on an empty dataset");
  const auto& g = dataset.graph();
  DistributionReport report;
  std::vector<double> fol(n), fri(n);
  for (UserIndex u = 0; u < n; ++u) {
    const auto followers = static_cast<std::int64_t>(g.followers(u).size());
    const auto friends = static_cast<std::int64_t>(g.friends(u).size());
    ++report.followers[followers];
    ++report.friends[friends];
    ++report.tweets[static_cast<std::int64_t>(dataset.tweets_by(u).size())];
    fol[u] = static_cast<double>(followers);
    fri[u] = static_cast<double>(friends);
  }
  report.follower_friend_correlation = pearson(fol, fri);
  return report;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> log_log_slope(const Histogram& hist) {
  std::vector<double> xs, ys;
  std::int64_t lo = 1;
  auto it = hist.lower_bound(1);
  while (it != hist.end()) {
    const std::int64_t hi = lo * 2;
    std::int64_t count = 0;
    for (; it != hist.end() && it->first < hi; ++it) count += it->second;
    if (count > 0) {
      xs.push_back(0.5 * std::log(static_cast<double>(lo) * static_cast<double>(hi - 1)));
      ys.push_back(std::log(static_cast<double>(count) / static_cast<double>(hi - lo)));
    }
    lo = hi;
  }
  if (xs.size() < 2) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

}  // namespace influxrank
