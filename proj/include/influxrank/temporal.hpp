#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "influxrank/dataset.hpp"

namespace influxrank {

using HourVector = std::array<double, kHours>;

/// Per-user hour-of-day activity: tweets per day in each hour bin and the
/// normalized activity distribution over bins.
struct HourlyProfile {
  UserIndex user = kNoUser;
  std::array<std::int64_t, kHours> counts{};
  HourVector n_t{};
  HourVector a_t{};
  /// Span between first and last tweet in days, floored at one day.
  double available_days = 1.0;
  /// False for users without tweets; all vectors are then zero.
  bool active = false;
};

HourlyProfile hourly_profile(const Dataset& dataset, UserIndex user);
HourlyProfile hourly_profile(const Dataset& dataset, std::string_view user_id);
std::vector<HourlyProfile> all_profiles(const Dataset& dataset);

enum class Granularity { hour_of_day, day_of_week, hour_by_day };

/// Event counts. hour_of_day: 1x24, day_of_week: 1x7 (Monday first),
/// hour_by_day: 7x24 row-major by day.
struct ActivityTable {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values.at(static_cast<std::size_t>(r * cols + c)); }
};

ActivityTable global_activity(const Dataset& dataset, Granularity granularity);

/// Hour-of-day activity normalized to sum 1 (uniform when there are no tweets).
HourVector global_hour_weights(const Dataset& dataset);

struct ResponseMetric {
  TweetIndex response = kNoTweet;
  TweetKind kind = TweetKind::retweet;
  std::int64_t delay = 0;  // seconds
  std::int64_t trace = 0;
};

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;  // P(X <= value)
};

struct ResponseMetricsReport {
  std::vector<ResponseMetric> metrics;
  std::size_t excluded_unresolved = 0;     // original tweet absent or outside the window
  std::size_t excluded_negative_delay = 0;
  std::vector<CdfPoint> delay_retweet, delay_reply, trace_retweet, trace_reply;
};

/// Delay and trace for every resolvable response. Trace counts tweets posted by
/// the responder's friends strictly between the original and the response.
ResponseMetricsReport response_metrics(const Dataset& dataset);

/// One point per distinct value, ascending.
std::vector<CdfPoint> empirical_cdf(std::vector<std::int64_t> values);

}  // namespace influxrank
