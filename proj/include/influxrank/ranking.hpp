#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "influxrank/features.hpp"
#include "influxrank/response_model.hpp"
#include "influxrank/temporal.hpp"

namespace influxrank {

enum class ModelKind { tir, tunkrank, twitterrank };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;

/// Penalty factor c in [0.5, 1]: close friends get weight c, normal friends 1 - c.
class Penalty {
 public:
  explicit Penalty(double c);
  double value() const noexcept { return c_; }
  double multiplier(bool close_friend) const noexcept { return close_friend ? c_ : 1.0 - c_; }

 private:
  double c_;
};

struct RankParams {
  std::optional<double> c;
  std::optional<double> gamma;
  std::optional<double> p;
};

struct RankVector {
  std::vector<double> scores;
  int hour = -1;  // -1: aggregated
  ModelKind model = ModelKind::tir;
  RankParams params;
  int iterations = 0;
};

/// Users ordered best first: score descending, ties by index (user ids are
/// ordered like indices).
std::vector<UserIndex> rank_order(std::span<const double> scores);
/// Position of every user in rank_order (0 = best).
std::vector<std::size_t> rank_positions(std::span<const double> scores);

/// Column-stochastic transition operator with damping. The follow part is kept
/// sparse by source column: column u holds u's normalized transition weights
/// to its friends. Columns with no weight are dangling and act as uniform 1/|V|.
/// The uniform jump term (1 - gamma)/|V| is never stored.
class TransitionMatrix {
 public:
  /// `columns[u]` lists (friend, raw weight >= 0). Throws ValidationError on
  /// |V| = 0 or gamma outside (0, 1).
  static TransitionMatrix from_columns(
      std::size_t dimension, double gamma, int hour,
      const std::vector<std::vector<std::pair<UserIndex, double>>>& columns);

  std::size_t dimension() const noexcept { return dangling_.size(); }
  double damping() const noexcept { return gamma_; }
  int hour() const noexcept { return hour_; }
  bool dangling(UserIndex u) const { return dangling_.at(u) != 0; }
  /// Raw (pre-normalization) column sums.
  double column_sum(UserIndex u) const { return raw_sums_.at(u); }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  /// out = (gamma M + (1 - gamma)/|V|) r, with dangling columns uniform.
  void multiply(std::span<const double> r, std::span<double> out) const;

  /// The fully materialized damped matrix.
  Eigen::MatrixXd dense() const;

  /// (row = friend, column = follower, normalized weight) for stored entries.
  std::vector<std::tuple<UserIndex, UserIndex, double>> coo() const;

 private:
  double gamma_ = 0.85;
  int hour_ = -1;
  std::vector<std::size_t> offsets_;
  std::vector<UserIndex> rows_;
  std::vector<double> values_;
  std::vector<double> raw_sums_;
  std::vector<std::uint8_t> dangling_;
};

struct PowerOptions {
  double tol = 1e-10;  // L1 change between sweeps
  int max_iters = 200;
};

struct PowerResult {
  std::vector<double> scores;
  int iterations = 0;
  std::vector<double> residuals;
};

/// R <- gamma M R + (1 - gamma)/|V| from the uniform vector. Throws
/// ConvergenceError with the last residual when max_iters is reached.
PowerResult power_iterate(const TransitionMatrix& matrix, const PowerOptions& options = {});

/// R = sum_t w_t R_t over 24 hourly vectors. Throws ValidationError if either
/// input does not have 24 entries or the weights do not sum to 1.
RankVector aggregate(std::span<const RankVector> hourly, std::span<const double> weights);

// ------------------------------------------------------------------------ TIR

/// Transition weight of follower u toward friend v in hour t: the response
/// probability with the ever-responded feature fixed to 1, times N_v^t, times
/// c for close friends or 1 - c otherwise.
double hourly_weight(const FeatureContext& context, const FollowGraph& graph,
                     const LogisticModel& model, UserIndex u, UserIndex v, int hour,
                     const Penalty& penalty);

/// Per-hour N_v^t * P_uv^t for every edge, with the close-friend flag, shared
/// by all penalty settings on one graph.
struct TirBaseWeights {
  std::size_t dimension = 0;
  std::vector<std::size_t> offsets;  // per source column u
  std::vector<UserIndex> friends;
  std::vector<std::uint8_t> close;
  std::array<std::vector<double>, kHours> base;
};

TirBaseWeights tir_base_weights(const FeatureContext& context, const FollowGraph& graph,
                                const LogisticModel& model);

/// Base weights for `graph`, which differs from the graph behind `base` only in
/// the friends of `u`. Other columns are copied.
TirBaseWeights tir_base_weights_replacing(const TirBaseWeights& base, const FeatureContext& context,
                                          const FollowGraph& graph, const LogisticModel& model,
                                          UserIndex u);

/// Without a penalty, close and normal friends share one multiplier.
TransitionMatrix tir_matrix(const TirBaseWeights& base, int hour, std::optional<Penalty> penalty,
                            double gamma);

TransitionMatrix build_matrix(const FeatureContext& context, const FollowGraph& graph,
                              const LogisticModel& model, int hour, const Penalty& penalty,
                              double gamma = 0.85);

struct TirOptions {
  std::optional<Penalty> penalty = Penalty(0.85);
  double gamma = 0.85;
  PowerOptions power;
  unsigned threads = 1;
};

std::vector<RankVector> tir_hourly(const TirBaseWeights& base, const TirOptions& options);

/// Weighted hourly aggregate; hours with zero weight are not computed.
RankVector tir_rank(const TirBaseWeights& base, const TirOptions& options,
                    std::span<const double> hour_weights);

// ------------------------------------------------------------------ baselines

struct TunkRankOptions {
  double p = 0.05;
  double tol = 1e-10;
  int max_iters = 10000;
};

/// Influence(X) = sum over followers Y of (1 + p Influence(Y)) / |friends(Y)|,
/// iterated from zero until the L1 change drops below tol.
RankVector tunkrank(const FollowGraph& graph, const TunkRankOptions& options = {});

struct TwitterRankOptions {
  double gamma = 0.85;
  PowerOptions power;
  unsigned threads = 1;
};

/// Column u: |T_v| / sum over u's friends |T_a| times 1 - |theta_u,t - theta_v,t|.
TransitionMatrix twitterrank_matrix(const FeatureContext& context, const FollowGraph& graph,
                                    std::size_t topic, double gamma = 0.85);

RankVector twitterrank_topic(const FeatureContext& context, const FollowGraph& graph,
                             std::size_t topic, const TwitterRankOptions& options = {});

/// Topic vectors combined with `topic_weights` (size K, summing to 1); topics
/// with zero weight are skipped.
RankVector twitterrank(const FeatureContext& context, const FollowGraph& graph,
                       std::span<const double> topic_weights,
                       const TwitterRankOptions& options = {});

/// Topic shares over all users weighted by their tweet counts.
std::vector<double> global_topic_weights(const FeatureContext& context);

}  // namespace influxrank
