#include "influxrank/temporal.hpp"

#include <algorithm>

namespace influxrank {

HourlyProfile hourly_profile(const Dataset& dataset, UserIndex user) {
  if (user >= dataset.num_users())
    throw NotFoundError("user index " + std::to_string(user) + " out of range");
  HourlyProfile p;
  p.user = user;
  const auto tweets = dataset.tweets_by(user);
  if (tweets.empty()) return p;
  p.active = true;
  const auto& all = dataset.tweets();
  for (TweetIndex i : tweets) ++p.counts[static_cast<std::size_t>(dataset.hour_of(all[i].ts))];
  const double span =
      static_cast<double>(all[tweets.back()].ts - all[tweets.front()].ts) / kSecondsPerDay;
  p.available_days = std::max(1.0, span);
  const double total = static_cast<double>(tweets.size());
  for (int h = 0; h < kHours; ++h) {
    p.n_t[h] = static_cast<double>(p.counts[h]) / p.available_days;
    p.a_t[h] = static_cast<double>(p.counts[h]) / total;
  }
  return p;
}

HourlyProfile hourly_profile(const Dataset& dataset, std::string_view user_id) {
  return hourly_profile(dataset, dataset.user_index(user_id));
}

std::vector<HourlyProfile> all_profiles(const Dataset& dataset) {
  std::vector<HourlyProfile> out;
  out.reserve(dataset.num_users());
  for (UserIndex u = 0; u < dataset.num_users(); ++u) out.push_back(hourly_profile(dataset, u));
  return out;
}

ActivityTable global_activity(const Dataset& dataset, Granularity granularity) {
  ActivityTable t;
  switch (granularity) {
    case Granularity::hour_of_day: t.rows = 1, t.cols = kHours; break;
    case Granularity::day_of_week: t.rows = 1, t.cols = kDays; break;
    case Granularity::hour_by_day: t.rows = kDays, t.cols = kHours; break;
  }
  t.values.assign(static_cast<std::size_t>(t.rows * t.cols), 0.0);
  for (const auto& tw : dataset.tweets()) {
    const int h = dataset.hour_of(tw.ts);
    const int d = dataset.day_of_week(tw.ts);
    switch (granularity) {
      case Granularity::hour_of_day: t.values[h] += 1.0; break;
      case Granularity::day_of_week: t.values[d] += 1.0; break;
      case Granularity::hour_by_day: t.values[d * kHours + h] += 1.0; break;
    }
  }
  return t;
}

HourVector global_hour_weights(const Dataset& dataset) {
  const auto table = global_activity(dataset, Granularity::hour_of_day);
  HourVector w{};
  double total = 0.0;
  for (double x : table.values) total += x;
  for (int h = 0; h < kHours; ++h) w[h] = total > 0.0 ? table.values[h] / total : 1.0 / kHours;
  return w;
}

std::vector<CdfPoint> empirical_cdf(std::vector<std::int64_t> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
    out.push_back({static_cast<double>(values[i]), static_cast<double>(i + 1) / n});
  }
  return out;
}

ResponseMetricsReport response_metrics(const Dataset& dataset) {
  const auto& tweets = dataset.tweets();
  const auto& graph = dataset.graph();

  std::vector<std::vector<std::int64_t>> posted(dataset.num_users());
  for (UserIndex u = 0; u < dataset.num_users(); ++u) {
    auto& ts = posted[u];
    for (TweetIndex i : dataset.tweets_by(u)) ts.push_back(tweets[i].ts);
  }

  ResponseMetricsReport report;
  std::vector<std::int64_t> delay_rt, delay_re, trace_rt, trace_re;
  for (TweetIndex j = 0; j < tweets.size(); ++j) {
    const Tweet& r = tweets[j];
    if (!r.is_response()) continue;
    if (r.to_tweet_index == kNoTweet) {
      ++report.excluded_unresolved;
      continue;
    }
    const std::int64_t ti = tweets[r.to_tweet_index].ts;
    const std::int64_t tj = r.ts;
    if (tj < ti) {
      ++report.excluded_negative_delay;
      continue;
    }
    std::int64_t trace = 0;
    for (UserIndex f : graph.friends(r.author_index)) {
      const auto& ts = posted[f];
      auto lo = std::upper_bound(ts.begin(), ts.end(), ti);
      auto hi = std::lower_bound(lo, ts.end(), tj);
      trace += hi - lo;
    }
    report.metrics.push_back({j, r.kind, tj - ti, trace});
    if (r.kind == TweetKind::retweet) {
      delay_rt.push_back(tj - ti);
      trace_rt.push_back(trace);
    } else {
      delay_re.push_back(tj - ti);
      trace_re.push_back(trace);
    }
  }
  report.delay_retweet = empirical_cdf(std::move(delay_rt));
  report.delay_reply = empirical_cdf(std::move(delay_re));
  report.trace_retweet = empirical_cdf(std::move(trace_rt));
  report.trace_reply = empirical_cdf(std::move(trace_re));
  return report;
}

}  // namespace influxrank
