#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "influxrank/dataset.hpp"
#include "influxrank/features.hpp"
#include "influxrank/response_model.hpp"
#include "influxrank/synthetic.hpp"

namespace fixtures {

using namespace influxrank;

// Monday 2013-12-23 00:00 UTC.
inline constexpr std::int64_t kMonday = 1387756800;
inline constexpr std::int64_t kHour = 3600;
inline constexpr std::int64_t kDay = 86400;

inline UserRecord user(std::string id, std::int64_t listed = 0, std::int64_t favourites = 0,
                       bool verified = false, std::vector<double> topics = {0.5, 0.5}) {
  UserRecord u;
  u.id = std::move(id);
  u.listed = listed;
  u.favourites = favourites;
  u.verified = verified;
  u.topics = std::move(topics);
  return u;
}

inline Tweet original(std::string id, std::string author, std::int64_t ts) {
  Tweet t;
  t.id = std::move(id);
  t.author = std::move(author);
  t.ts = ts;
  return t;
}

inline Tweet response(std::string id, std::string author, std::int64_t ts, std::string to_user,
                      std::optional<std::string> to_tweet, TweetKind kind = TweetKind::retweet) {
  Tweet t;
  t.id = std::move(id);
  t.author = std::move(author);
  t.kind = kind;
  t.ts = ts;
  t.to_user = std::move(to_user);
  t.to_tweet = std::move(to_tweet);
  return t;
}

inline IngestResult build(std::vector<UserRecord> users, std::vector<std::pair<std::string, std::string>> edges,
                          std::vector<Tweet> tweets, std::optional<ObservationWindow> window = std::nullopt,
                          std::size_t min_tweets = 0) {
  std::vector<EdgeRecord> e;
  for (auto& [a, b] : edges) e.push_back({a, b});
  IngestOptions opts;
  opts.window = window;
  opts.min_tweets = min_tweets;
  return assemble(std::move(users), std::move(e), std::move(tweets), opts);
}

/// Small synthetic corpus for oracle tests.
inline GeneratorConfig small_config(std::size_t users, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.n_users = users;
  cfg.seed = seed;
  cfg.follower_min = 1;
  cfg.follower_cap = static_cast<std::int64_t>(std::max<std::size_t>(2, users / 3));
  cfg.tweet_min = 3;
  cfg.tweet_cap = 20;
  cfg.topics = 4;
  cfg.days = 3;
  cfg.intercept = 2.0;
  return cfg;
}

inline double cosine(const std::array<double, 24>& a, const std::array<double, 24>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (int i = 0; i < 24; ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

/// The generator's planted model with a scaler fitted on the context's instances.
inline LogisticModel planted_model(const FeatureContext& context) {
  const auto w = default_planted_weights();
  LogisticModel m(kDefaultPlantedIntercept, std::vector<double>(w.begin(), w.end()));
  const auto set = build_instances(context);
  if (!set.instances.empty()) m.set_scaler(MinMaxScaler::fit(set.instances));
  return m;
}

}  // namespace fixtures
