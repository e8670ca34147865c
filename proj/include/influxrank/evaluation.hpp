#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "influxrank/features.hpp"
#include "influxrank/ranking.hpp"
#include "influxrank/response_model.hpp"

namespace influxrank {

/// (concordant - discordant) / (n (n - 1) / 2) over two score vectors on the
/// same users. Ties are broken by user index before counting, so both inputs
/// are total orders (tau-a). Throws ValidationError on size mismatch or n < 2.
double kendall_tau(std::span<const double> scores_a, std::span<const double> scores_b);

/// Same statistic from two permutations listing users best first.
double kendall_tau_orders(std::span<const UserIndex> order_a, std::span<const UserIndex> order_b);

/// Number of pairs i < j with values[i] > values[j], by merge sort.
std::uint64_t count_inversions(std::vector<std::uint32_t> values);

enum class Scenario { fh, fl, th, tl, dh, dl, rr, ur };
inline constexpr std::array<Scenario, 8> kScenarios = {Scenario::fh, Scenario::fl, Scenario::th,
                                                       Scenario::tl, Scenario::dh, Scenario::dl,
                                                       Scenario::rr, Scenario::ur};

std::string_view scenario_tag(Scenario s) noexcept;  // "L_fh", ...
std::optional<Scenario> parse_scenario(std::string_view tag) noexcept;

struct Link {
  UserIndex follower = kNoUser;
  UserIndex friend_id = kNoUser;
  bool operator==(const Link&) const = default;
};

struct LinkSet {
  Scenario scenario = Scenario::fh;
  std::string criterion;  // friend_followers, friend_tweets, js_distance, reciprocity
  std::string selection;  // top_10pct, bottom_10pct, reciprocal, one_way
  std::uint64_t seed = 0;
  std::size_t pool_size = 0;
  bool flagged = false;  // pool smaller than the requested sample
  std::vector<Link> links;
};

struct LinkSetOptions {
  std::size_t sample_size = 30;
  double pool_fraction = 0.1;
};

/// Per-user time-independent attribute vector (listed, favourites rate,
/// verified, retweet ratio), each attribute divided by its maximum over users
/// and the result normalized to a distribution (uniform when all zero).
std::vector<std::array<double, 4>> attribute_distributions(const FeatureContext& context);

/// sqrt(JSD) between the attribute distributions of u and v.
double pair_js_distance(const std::vector<std::array<double, 4>>& attributes, UserIndex u, UserIndex v,
                        double log_base = 2.0);

/// Eight scenario pools over the dataset's edges, each sampled with a seed
/// derived from (seed, tag). Empty pools yield an empty, flagged set.
std::vector<LinkSet> build_link_sets(const FeatureContext& context, std::uint64_t seed,
                                     const LinkSetOptions& options = {});

struct ModelConfig {
  ModelKind kind = ModelKind::tir;
  std::optional<Penalty> penalty = Penalty(0.85);  // TIR only
  double gamma = 0.85;
  double p = 0.05;  // TunkRank

  std::string label() const;
};

/// Shared state for Q evaluations: the trained model and the base TIR weights
/// on the full graph.
class Evaluator {
 public:
  Evaluator(const FeatureContext& context, const LogisticModel& model, bool with_tir = true);

  const FeatureContext& context() const noexcept { return *context_; }
  const FollowGraph& graph() const noexcept { return context_->dataset().graph(); }

  /// 10 users u does not follow (excluding u), drawn with derive_seed(seed, u, v).
  /// Throws ValidationError if fewer than `count` exist.
  std::vector<UserIndex> candidates(Link link, std::uint64_t seed, std::size_t count = 10) const;

  /// Q(l) for several model configurations on one removed link, sharing the
  /// candidate set and the reduced graph.
  std::vector<int> evaluate(Link link, std::span<const ModelConfig> configs, std::uint64_t seed) const;

  /// Personal hour weights of u: its activity distribution, or the global
  /// weights when u has no tweets.
  HourVector personal_hour_weights(UserIndex u) const;
  /// Personal topic weights of u: its own topic distribution.
  std::vector<double> personal_topic_weights(UserIndex u) const;

 private:
  const FeatureContext* context_;
  const LogisticModel* model_;
  std::optional<TirBaseWeights> base_;
  HourVector global_weights_{};
};

/// Number of candidates that v strictly outranks in `scores` (ties by index).
int q_score(std::span<const double> scores, UserIndex v, std::span<const UserIndex> candidates);

int evaluate_link(const Evaluator& evaluator, const ModelConfig& config, Link link, std::uint64_t seed);

struct ScenarioResult {
  Scenario scenario = Scenario::fh;
  ModelConfig model;
  std::vector<int> q;
  double mean_q = 0.0;
};

struct ScenarioReport {
  std::vector<LinkSet> link_sets;
  std::vector<ScenarioResult> results;  // scenario-major, configs in input order
};

/// Default penalty grid: 0.5, 0.6, ..., 1.0 plus 0.95, 0.96, ..., 0.99.
std::vector<double> default_c_grid();

/// Mean Q per (scenario, config). Links are evaluated in parallel; results are
/// collected in link order.
ScenarioReport run_scenarios(const Evaluator& evaluator, std::span<const LinkSet> link_sets,
                             std::span<const ModelConfig> configs, std::uint64_t seed,
                             unsigned threads = 1);

}  // namespace influxrank
