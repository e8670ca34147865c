#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "influxrank/dataset.hpp"
#include "influxrank/temporal.hpp"

namespace influxrank {

/// Response-prediction inputs for a (follower u, friend v, hour t) triple.
enum class Feature : std::size_t {
  listed,            // LI_v
  favourites_rate,   // FV_v = favourites / |T_v|
  verified,          // VR_v
  retweet_ratio_v,   // RR_v = retweets by v / |T_v|
  retweet_ratio_u,   // RR_u
  ever_responded,    // RE_uv, v is a close friend of u
  tweet_proportion,  // PT_uv = |T_v| / sum over u's friends |T_f|
  tweets_in_hour,    // N_v^t
  activity_u,        // A_u^t
  activity_v,        // A_v^t
  joint_activity,    // JA_uv^t = A_u^t * A_v^t
  topic_distance,    // TS_uv = sqrt(2 * JSD)
};

inline constexpr std::size_t kFeatureCount = 12;

std::string_view feature_name(std::size_t index);
std::string_view feature_name(Feature f);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};

  double& operator[](Feature f) { return values[static_cast<std::size_t>(f)]; }
  double operator[](Feature f) const { return values[static_cast<std::size_t>(f)]; }
  bool operator==(const FeatureVector&) const = default;
};

/// Jensen-Shannon divergence; log_base 2 bounds it by 1.
double jensen_shannon(std::span<const double> p, std::span<const double> q, double log_base = 2.0);

/// Graph-independent per-user quantities reused by every extraction: tweet and
/// retweet counts, hourly profiles and the close-friend relation.
class FeatureContext {
 public:
  explicit FeatureContext(const Dataset& dataset, double jsd_log_base = 2.0);

  const Dataset& dataset() const noexcept { return *dataset_; }

  std::int64_t tweet_count(UserIndex u) const { return tweets_.at(u); }
  std::int64_t retweet_count(UserIndex u) const { return retweets_.at(u); }
  const HourlyProfile& profile(UserIndex u) const { return profiles_.at(u); }

  /// v is in the close-friend set of u: u retweeted or replied to v in the window.
  bool responded(UserIndex u, UserIndex v) const;
  std::size_t close_pair_count() const noexcept { return close_.size(); }

  double favourites_rate(UserIndex v) const;
  double retweet_ratio(UserIndex v) const;
  double topic_distance(UserIndex u, UserIndex v) const;

  /// Sum of tweet counts over u's friends in `graph`.
  std::int64_t friend_tweet_total(const FollowGraph& graph, UserIndex u) const;

  /// Features on the dataset's own graph. Throws NotFoundError if u does not follow v
  /// and std::out_of_range for hour outside [0, 23].
  FeatureVector extract(UserIndex u, UserIndex v, int hour) const;
  FeatureVector extract(const FollowGraph& graph, UserIndex u, UserIndex v, int hour) const;

  /// No edge check; `friend_total` is friend_tweet_total(graph, u).
  FeatureVector extract_unchecked(UserIndex u, UserIndex v, int hour,
                                  std::int64_t friend_total) const;

  /// The hour-independent part of extract_unchecked; fill_hourly completes it.
  FeatureVector static_features(UserIndex u, UserIndex v, std::int64_t friend_total) const;
  void fill_hourly(FeatureVector& features, UserIndex u, UserIndex v, int hour) const;

 private:
  const Dataset* dataset_;
  double log_base_;
  std::vector<std::int64_t> tweets_;
  std::vector<std::int64_t> retweets_;
  std::vector<HourlyProfile> profiles_;
  std::vector<std::uint64_t> close_;  // sorted (u << 32 | v)
};

struct ResponseInstance {
  std::uint64_t key = 0;  // stable hash of (tweet id, follower id)
  TweetIndex tweet = kNoTweet;
  UserIndex follower = kNoUser;
  UserIndex friend_id = kNoUser;
  int hour = 0;
  FeatureVector features;
  bool response = false;
};

std::uint64_t instance_key(std::string_view tweet_id, std::string_view follower_id);

struct InstanceSet {
  std::vector<ResponseInstance> instances;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  double positive_rate() const {
    const auto n = positives + negatives;
    return n == 0 ? 0.0 : static_cast<double>(positives) / static_cast<double>(n);
  }
};

/// One instance per (tweet, follower of its author), ordered by (tweet id,
/// follower id). Positive when that follower retweeted or replied to that tweet.
/// Hour-dependent features are read at the tweet's hour.
InstanceSet build_instances(const FeatureContext& context);

/// Per-feature min-max scaling to [0, 1]; out-of-range inputs are clamped.
class MinMaxScaler {
 public:
  MinMaxScaler();
  static MinMaxScaler fit(std::span<const ResponseInstance> instances);

  FeatureVector transform(const FeatureVector& raw) const;
  /// Scaled and clamped value of one feature.
  double scale(std::size_t feature, double raw) const;
  bool degenerate(std::size_t feature) const { return degenerate_.at(feature); }
  double min(std::size_t feature) const { return min_.at(feature); }
  double max(std::size_t feature) const { return max_.at(feature); }

  nlohmann::json to_json() const;
  static MinMaxScaler from_json(const nlohmann::json& j);

  bool operator==(const MinMaxScaler&) const = default;

 private:
  std::array<double, kFeatureCount> min_{};
  std::array<double, kFeatureCount> max_{};
  std::array<bool, kFeatureCount> degenerate_{};
};

struct TrainSet {
  std::vector<ResponseInstance> instances;  // features scaled to [0, 1]
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

struct BalancedData {
  TrainSet train;
  MinMaxScaler scaler;
};

/// Keeps every positive and a seeded uniform sample of min(positives, negatives)
/// negatives, then fits and applies a min-max scaler. Throws ValidationError
/// unless both classes are present.
BalancedData balance_and_normalize(std::span<const ResponseInstance> instances, std::uint64_t seed);

/// tweet_id,follower_id,friend_id,hour,<12 features>,label
void write_instances_csv(std::span<const ResponseInstance> instances, const Dataset& dataset,
                         std::ostream& out);
/// Reads the format above; dataset indices are left unset.
std::vector<ResponseInstance> read_instances_csv(std::istream& in);

}  // namespace influxrank
