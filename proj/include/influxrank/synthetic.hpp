#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "influxrank/dataset.hpp"
#include "influxrank/features.hpp"
#include "influxrank/response_model.hpp"
#include "influxrank/temporal.hpp"

namespace influxrank {

/// Hour-of-day activity shapes: broad afternoon/evening (14-21h), a narrow
/// burst at 17h, and late night (0-4h). Each sums to 1.
std::vector<HourVector> default_prototypes();
std::vector<double> default_mixture();  // 0.42, 0.13, 0.45

/// Weights over the 12 response features in scaled [0, 1] space, sign
/// convention of response_probability.
std::array<double, kFeatureCount> default_planted_weights();
inline constexpr double kDefaultPlantedIntercept = 5.5;

struct GeneratorConfig {
  std::size_t n_users = 2000;

  double follower_exponent = 2.0;  // P(k) ~ k^-a on [follower_min, follower_cap]
  std::int64_t follower_min = 2;
  std::int64_t follower_cap = 500;  // clamped to n_users - 1
  double friend_weight_exponent = 2.5;  // Pareto tail of follow propensity

  double tweet_exponent = 2.5;
  std::int64_t tweet_min = 20;
  std::int64_t tweet_cap = 300;

  std::vector<HourVector> prototypes = default_prototypes();
  std::vector<double> mixture = default_mixture();
  std::array<double, kDays> day_weights = {1.0, 1.05, 1.05, 1.0, 0.95, 0.85, 0.9};  // Monday first

  double intercept = kDefaultPlantedIntercept;
  std::array<double, kFeatureCount> weights = default_planted_weights();
  double close_fraction = 0.15;  // mean share of latent close edges
  double close_bias = 0.5;       // close probability ~ friend followers^-bias
  double retweet_share = 0.42;   // responses that are retweets, rest replies
  double mean_delay_seconds = 1200.0;

  std::size_t topics = 10;
  double topic_concentration = 0.3;

  std::int64_t start_ts = 1387843200;  // 2013-12-24 00:00 UTC
  int days = 14;
  int max_retries = 10;
  std::uint64_t seed = 7;

  /// Throws ValidationError on inconsistent values.
  void validate() const;
};

struct PairProbability {
  TweetIndex tweet = kNoTweet;  // index in the generated dataset
  UserIndex follower = kNoUser;
  double probability = 0.0;
};

struct GroundTruth {
  std::vector<int> prototype;  // per user index
  double intercept = 0.0;
  std::array<double, kFeatureCount> weights{};
  std::vector<std::pair<UserIndex, UserIndex>> close_edges;  // latent, sorted
  std::vector<PairProbability> pairs;  // every (original tweet, follower of its author)
  double expected_positives = 0.0;     // sum of pair probabilities
  std::size_t total_instances = 0;     // (tweet, follower) pairs over all tweets
  std::size_t prototype_count = 0;
};

struct SyntheticData {
  std::optional<Dataset> dataset;  // absent for zero users
  GroundTruth truth;
};

/// Follow edges from the degree law: exact follower counts by stub matching,
/// followers drawn by propensity, self-loops and duplicates rejected.
/// Infeasible sequences are redrawn up to max_retries times, then ValidationError.
std::vector<std::pair<UserIndex, UserIndex>> generate_follow_edges(const GeneratorConfig& config);

SyntheticData generate(const GeneratorConfig& config);

/// kind,key1,key2,value rows: intercept, weight, prototype, close_edge,
/// pair_probability, summary.
void write_truth_csv(const SyntheticData& data, std::ostream& out);

/// {"window": {"start", "end"}, "users", "topics"}; window is null for zero users.
void write_meta_json(const SyntheticData& data, std::ostream& out);

/// users.jsonl, edges.jsonl, tweets.jsonl, truth.csv and meta.json; returns
/// the file names written.
std::vector<std::string> write_synthetic(const SyntheticData& data, const std::filesystem::path& dir);

/// Feature-space instances with labels drawn from response_probability under
/// (intercept, weights); features uniform on [0, 1], binary ones Bernoulli(0.5).
struct PlantedInstances {
  LabeledData data;
  std::vector<double> probability;
  double bayes_accuracy = 0.0;  // mean of max(p, 1 - p)
};

PlantedInstances generate_instances(double intercept, std::span<const double> weights, std::size_t count,
                                    std::uint64_t seed, std::span<const std::size_t> binary = {});

/// `count` noisy copies of the prototypes: label i % k for prototype i % k,
/// Gaussian noise with standard deviation sigma * |prototype| per hour, clipped at 0.
struct PlantedProfiles {
  std::vector<HourVector> series;
  std::vector<int> label;
};

PlantedProfiles generate_profiles(const std::vector<HourVector>& prototypes, std::size_t count,
                                  double sigma, std::uint64_t seed);

}  // namespace influxrank
