#include "influxrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "influxrank/parallel.hpp"

namespace influxrank {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::tir: return "tir";
    case ModelKind::tunkrank: return "tunkrank";
    case ModelKind::twitterrank: return "twitterrank";
  }
  return "tir";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
  if (text == "tir") return ModelKind::tir;
  if (text == "tunkrank") return ModelKind::tunkrank;
  if (text == "twitterrank") return ModelKind::twitterrank;
  return std::nullopt;
}

Penalty::Penalty(double c) : c_(c) {
  if (!(c >= 0.5 && c <= 1.0))
    throw ValidationError("penalty factor c must lie in [0.5, 1], got " + std::to_string(c));
}

std::vector<UserIndex> rank_order(std::span<const double> scores) {
  std::vector<UserIndex> order(scores.size());
  std::iota(order.begin(), order.end(), UserIndex{0});
  std::sort(order.begin(), order.end(), [&](UserIndex a, UserIndex b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

std::vector<std::size_t> rank_positions(std::span<const double> scores) {
  const auto order = rank_order(scores);
  std::vector<std::size_t> pos(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  return pos;
}

// ----------------------------------------------------------- TransitionMatrix

TransitionMatrix TransitionMatrix::from_columns(
    std::size_t dimension, double gamma, int hour,
    const std::vector<std::vector<std::pair<UserIndex, double>>>& columns) {
  if (dimension == 0) throw ValidationError("transition matrix over an empty user set");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("damping factor must lie in (0, 1)");
  if (columns.size() != dimension) throw ValidationError("column count does not match dimension");

  TransitionMatrix m;
  m.gamma_ = gamma;
  m.hour_ = hour;
  m.offsets_.reserve(dimension + 1);
  m.offsets_.push_back(0);
  m.raw_sums_.assign(dimension, 0.0);
  m.dangling_.assign(dimension, 0);
  for (std::size_t u = 0; u < dimension; ++u) {
    double sum = 0.0;
    for (const auto& [v, w] : columns[u]) {
      if (!(w >= 0.0)) throw ValidationError("negative or NaN transition weight");
      sum += w;
    }
    m.raw_sums_[u] = sum;
    if (sum > 0.0) {
      for (const auto& [v, w] : columns[u]) {
        if (w == 0.0) continue;
        m.rows_.push_back(v);
        m.values_.push_back(w / sum);
      }
    } else {
      m.dangling_[u] = 1;
    }
    m.offsets_.push_back(m.rows_.size());
  }
  return m;
}

void TransitionMatrix::multiply(std::span<const double> r, std::span<double> out) const {
  const std::size_t n = dimension();
  double total = 0.0, dangling_mass = 0.0;
  for (std::size_t u = 0; u < n; ++u) {
    total += r[u];
    if (dangling_[u]) dangling_mass += r[u];
  }
  const double fill = (gamma_ * dangling_mass + (1.0 - gamma_) * total) / static_cast<double>(n);
  std::fill(out.begin(), out.end(), fill);
  for (std::size_t u = 0; u < n; ++u) {
    const double x = gamma_ * r[u];
    if (x == 0.0) continue;
    for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) out[rows_[k]] += values_[k] * x;
  }
}

Eigen::MatrixXd TransitionMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(dimension());
  const double jump = (1.0 - gamma_) / static_cast<double>(n);
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(n, n, jump);
  for (Eigen::Index u = 0; u < n; ++u) {
    if (dangling_[static_cast<std::size_t>(u)]) {
      d.col(u).array() += gamma_ / static_cast<double>(n);
      continue;
    }
    for (std::size_t k = offsets_[static_cast<std::size_t>(u)]; k < offsets_[static_cast<std::size_t>(u) + 1]; ++k)
      d(rows_[k], u) += gamma_ * values_[k];
  }
  return d;
}

std::vector<std::tuple<UserIndex, UserIndex, double>> TransitionMatrix::coo() const {
  std::vector<std::tuple<UserIndex, UserIndex, double>> out;
  out.reserve(values_.size());
  for (UserIndex u = 0; u < dimension(); ++u)
    for (std::size_t k = offsets_[u]; k < offsets_[u + 1]; ++k) out.emplace_back(rows_[k], u, values_[k]);
  return out;
}

PowerResult power_iterate(const TransitionMatrix& matrix, const PowerOptions& options) {
  if (!(options.tol > 0.0)) throw ValidationError("power iteration tolerance must be positive");
  const std::size_t n = matrix.dimension();
  PowerResult result;
  std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 1; it <= options.max_iters; ++it) {
    matrix.multiply(r, next);
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - r[i]);
    r.swap(next);
    result.residuals.push_back(residual);
    result.iterations = it;
    if (residual < options.tol) {
      result.scores = std::move(r);
      return result;
    }
  }
  const double last = result.residuals.empty() ? 0.0 : result.residuals.back();
  throw ConvergenceError("power iteration did not converge in " + std::to_string(options.max_iters) +
                             " iterations (residual " + std::to_string(last) + ")",
                         last, options.max_iters);
}

RankVector aggregate(std::span<const RankVector> hourly, std::span<const double> weights) {
  if (hourly.size() != kHours) throw ValidationError("aggregation needs 24 hourly rank vectors");
  if (weights.size() != kHours) throw ValidationError("aggregation needs 24 hour weights");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("hour weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("hour weights must sum to 1");
  const std::size_t n = hourly.front().scores.size();
  RankVector out;
  out.model = hourly.front().model;
  out.params = hourly.front().params;
  out.scores.assign(n, 0.0);
  for (int t = 0; t < kHours; ++t) {
    if (hourly[t].scores.size() != n) throw ValidationError("hourly rank vectors differ in size");
    if (weights[t] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out.scores[i] += weights[t] * hourly[t].scores[i];
    out.iterations += hourly[t].iterations;
  }
  return out;
}

// ------------------------------------------------------------------------ TIR

namespace {

constexpr std::array<std::size_t, 4> kHourlyFeatures = {
    static_cast<std::size_t>(Feature::tweets_in_hour), static_cast<std::size_t>(Feature::activity_u),
    static_cast<std::size_t>(Feature::activity_v), static_cast<std::size_t>(Feature::joint_activity)};

bool is_hourly(std::size_t j) {
  return std::find(kHourlyFeatures.begin(), kHourlyFeatures.end(), j) != kHourlyFeatures.end();
}

void check_model(const LogisticModel& model) {
  if (model.dim() != kFeatureCount)
    throw ValidationError("TIR needs a model over the " + std::to_string(kFeatureCount) +
                          " response features");
}

}  // namespace

double hourly_weight(const FeatureContext& context, const FollowGraph& graph,
                     const LogisticModel& model, UserIndex u, UserIndex v, int hour,
                     const Penalty& penalty) {
  check_model(model);
  FeatureVector f = context.extract(graph, u, v, hour);
  const double n_vt = f[Feature::tweets_in_hour];
  if (n_vt == 0.0) return 0.0;
  const bool close = f[Feature::ever_responded] != 0.0;
  f[Feature::ever_responded] = 1.0;
  return penalty.multiplier(close) * n_vt * model.predict_raw(f);
}

namespace {

struct BaseColumn {
  std::vector<UserIndex> friends;
  std::vector<std::uint8_t> close;
  std::array<std::vector<double>, kHours> base;
};

BaseColumn base_column(const FeatureContext& context, const FollowGraph& graph,
                       const LogisticModel& model, UserIndex u) {
  const auto& scaler = model.scaler();
  const auto& w = model.weights();
  auto term = [&](Feature f, double raw) {
    const auto j = static_cast<std::size_t>(f);
    return w[j] * scaler.scale(j, raw);
  };

  BaseColumn col;
  const auto total = context.friend_tweet_total(graph, u);
  const auto& pu = context.profile(u);
  for (UserIndex v : graph.friends(u)) {
    FeatureVector f = context.static_features(u, v, total);
    const bool close = f[Feature::ever_responded] != 0.0;
    f[Feature::ever_responded] = 1.0;
    double z_static = model.intercept();
    for (std::size_t j = 0; j < kFeatureCount; ++j)
      if (!is_hourly(j)) z_static += w[j] * scaler.scale(j, f.values[j]);

    const auto& pv = context.profile(v);
    for (int h = 0; h < kHours; ++h) {
      const double n_vt = pv.n_t[h];
      if (n_vt == 0.0) {
        col.base[h].push_back(0.0);
        continue;
      }
      const double au = pu.a_t[h], av = pv.a_t[h];
      const double z = z_static + term(Feature::tweets_in_hour, n_vt) +
                       term(Feature::activity_u, au) + term(Feature::activity_v, av) +
                       term(Feature::joint_activity, au * av);
      col.base[h].push_back(n_vt * response_probability(z, {}, {}));
    }
    col.friends.push_back(v);
    col.close.push_back(close ? 1 : 0);
  }
  return col;
}

void append_column(TirBaseWeights& b, const BaseColumn& col) {
  b.friends.insert(b.friends.end(), col.friends.begin(), col.friends.end());
  b.close.insert(b.close.end(), col.close.begin(), col.close.end());
  for (int h = 0; h < kHours; ++h) b.base[h].insert(b.base[h].end(), col.base[h].begin(), col.base[h].end());
  b.offsets.push_back(b.friends.size());
}

void append_copy(TirBaseWeights& b, const TirBaseWeights& from, std::size_t lo, std::size_t hi) {
  b.friends.insert(b.friends.end(), from.friends.begin() + lo, from.friends.begin() + hi);
  b.close.insert(b.close.end(), from.close.begin() + lo, from.close.begin() + hi);
  for (int h = 0; h < kHours; ++h)
    b.base[h].insert(b.base[h].end(), from.base[h].begin() + lo, from.base[h].begin() + hi);
}

}  // namespace

TirBaseWeights tir_base_weights(const FeatureContext& context, const FollowGraph& graph,
                                const LogisticModel& model) {
  check_model(model);
  const std::size_t n = graph.num_vertices();
  TirBaseWeights b;
  b.dimension = n;
  b.offsets.reserve(n + 1);
  b.offsets.push_back(0);
  b.friends.reserve(graph.num_edges());
  b.close.reserve(graph.num_edges());
  for (auto& h : b.base) h.reserve(graph.num_edges());
  for (UserIndex u = 0; u < n; ++u) append_column(b, base_column(context, graph, model, u));
  return b;
}

TirBaseWeights tir_base_weights_replacing(const TirBaseWeights& base, const FeatureContext& context,
                                          const FollowGraph& graph, const LogisticModel& model,
                                          UserIndex u) {
  check_model(model);
  if (base.dimension != graph.num_vertices()) throw ValidationError("graph size differs from base weights");
  if (u >= base.dimension) throw ValidationError("user index out of range");
  TirBaseWeights b;
  b.dimension = base.dimension;
  b.offsets.reserve(base.dimension + 1);
  b.friends.reserve(graph.num_edges());
  b.close.reserve(graph.num_edges());
  for (auto& h : b.base) h.reserve(graph.num_edges());

  b.offsets.assign(base.offsets.begin(), base.offsets.begin() + u + 1);
  append_copy(b, base, 0, base.offsets[u]);
  append_column(b, base_column(context, graph, model, u));
  const std::size_t tail = base.offsets[u + 1];
  append_copy(b, base, tail, base.friends.size());
  const std::ptrdiff_t delta = static_cast<std::ptrdiff_t>(b.offsets.back()) - static_cast<std::ptrdiff_t>(tail);
  for (std::size_t x = u + 1; x < base.dimension; ++x)
    b.offsets.push_back(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(base.offsets[x + 1]) + delta));
  return b;
}

TransitionMatrix tir_matrix(const TirBaseWeights& base, int hour, std::optional<Penalty> penalty,
                            double gamma) {
  if (hour < 0 || hour >= kHours) throw ValidationError("hour must be in [0, 23]");
  std::vector<std::vector<std::pair<UserIndex, double>>> columns(base.dimension);
  const auto& weights = base.base[static_cast<std::size_t>(hour)];
  for (std::size_t u = 0; u < base.dimension; ++u) {
    auto& col = columns[u];
    col.reserve(base.offsets[u + 1] - base.offsets[u]);
    for (std::size_t k = base.offsets[u]; k < base.offsets[u + 1]; ++k) {
      const double mult = penalty ? penalty->multiplier(base.close[k] != 0) : 1.0;
      col.emplace_back(base.friends[k], mult * weights[k]);
    }
  }
  return TransitionMatrix::from_columns(base.dimension, gamma, hour, columns);
}

TransitionMatrix build_matrix(const FeatureContext& context, const FollowGraph& graph,
                              const LogisticModel& model, int hour, const Penalty& penalty,
                              double gamma) {
  return tir_matrix(tir_base_weights(context, graph, model), hour, penalty, gamma);
}

namespace {

RankParams tir_params(const TirOptions& options) {
  RankParams p;
  if (options.penalty) p.c = options.penalty->value();
  p.gamma = options.gamma;
  return p;
}

RankVector tir_hour(const TirBaseWeights& base, const TirOptions& options, int hour) {
  const auto m = tir_matrix(base, hour, options.penalty, options.gamma);
  auto res = power_iterate(m, options.power);
  RankVector r;
  r.scores = std::move(res.scores);
  r.hour = hour;
  r.model = ModelKind::tir;
  r.params = tir_params(options);
  r.iterations = res.iterations;
  return r;
}

}  // namespace

std::vector<RankVector> tir_hourly(const TirBaseWeights& base, const TirOptions& options) {
  std::vector<RankVector> out(kHours);
  parallel_for(kHours, options.threads, [&](std::size_t h) {
    out[h] = tir_hour(base, options, static_cast<int>(h));
  });
  return out;
}

RankVector tir_rank(const TirBaseWeights& base, const TirOptions& options,
                    std::span<const double> hour_weights) {
  if (hour_weights.size() != kHours) throw ValidationError("aggregation needs 24 hour weights");
  double wsum = 0.0;
  for (double w : hour_weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("hour weights must sum to 1");

  std::vector<RankVector> hourly(kHours);
  parallel_for(kHours, options.threads, [&](std::size_t h) {
    if (hour_weights[h] != 0.0) hourly[h] = tir_hour(base, options, static_cast<int>(h));
  });
  RankVector out;
  out.model = ModelKind::tir;
  out.params = tir_params(options);
  out.scores.assign(base.dimension, 0.0);
  for (int h = 0; h < kHours; ++h) {
    if (hour_weights[h] == 0.0) continue;
    for (std::size_t i = 0; i < base.dimension; ++i) out.scores[i] += hour_weights[h] * hourly[h].scores[i];
    out.iterations += hourly[h].iterations;
  }
  return out;
}

// ------------------------------------------------------------------ baselines

RankVector tunkrank(const FollowGraph& graph, const TunkRankOptions& options) {
  if (!(options.p >= 0.0 && options.p <= 1.0)) throw ValidationError("TunkRank p must lie in [0, 1]");
  const std::size_t n = graph.num_vertices();
  std::vector<double> inf(n, 0.0), next(n, 0.0);
  RankVector out;
  out.model = ModelKind::tunkrank;
  out.params.p = options.p;
  for (int it = 1; it <= options.max_iters; ++it) {
    double change = 0.0;
    for (UserIndex x = 0; x < n; ++x) {
      double s = 0.0;
      for (UserIndex y : graph.followers(x))
        s += (1.0 + options.p * inf[y]) / static_cast<double>(graph.friends(y).size());
      next[x] = s;
      change += std::abs(s - inf[x]);
    }
    inf.swap(next);
    out.iterations = it;
    if (change < options.tol) {
      out.scores = std::move(inf);
      return out;
    }
    if (it == options.max_iters)
      throw ConvergenceError("TunkRank did not converge", change, it);
  }
  out.scores = std::move(inf);  // max_iters == 0
  return out;
}

TransitionMatrix twitterrank_matrix(const FeatureContext& context, const FollowGraph& graph,
                                    std::size_t topic, double gamma) {
  const Dataset& ds = context.dataset();
  if (ds.topic_count() == 0) throw ValidationError("TwitterRank needs topic distributions");
  if (topic >= ds.topic_count()) throw ValidationError("topic index out of range");
  const auto& users = ds.users();
  const std::size_t n = graph.num_vertices();
  std::vector<std::vector<std::pair<UserIndex, double>>> columns(n);
  for (UserIndex u = 0; u < n; ++u) {
    const auto total = context.friend_tweet_total(graph, u);
    if (total == 0) continue;
    const double theta_u = users[u].topics[topic];
    for (UserIndex v : graph.friends(u)) {
      const double share = static_cast<double>(context.tweet_count(v)) / static_cast<double>(total);
      const double sim = 1.0 - std::abs(theta_u - users[v].topics[topic]);
      columns[u].emplace_back(v, share * sim);
    }
  }
  return TransitionMatrix::from_columns(n, gamma, -1, columns);
}

RankVector twitterrank_topic(const FeatureContext& context, const FollowGraph& graph,
                             std::size_t topic, const TwitterRankOptions& options) {
  auto res = power_iterate(twitterrank_matrix(context, graph, topic, options.gamma), options.power);
  RankVector r;
  r.scores = std::move(res.scores);
  r.model = ModelKind::twitterrank;
  r.params.gamma = options.gamma;
  r.iterations = res.iterations;
  return r;
}

RankVector twitterrank(const FeatureContext& context, const FollowGraph& graph,
                       std::span<const double> topic_weights, const TwitterRankOptions& options) {
  const std::size_t k = context.dataset().topic_count();
  if (k == 0) throw ValidationError("TwitterRank needs topic distributions");
  if (topic_weights.size() != k) throw ValidationError("topic weight count does not match K");
  double wsum = 0.0;
  for (double w : topic_weights) wsum += w;
  if (std::abs(wsum - 1.0) > 1e-9) throw ValidationError("topic weights must sum to 1");

  std::vector<RankVector> per_topic(k);
  parallel_for(k, options.threads, [&](std::size_t t) {
    if (topic_weights[t] != 0.0) per_topic[t] = twitterrank_topic(context, graph, t, options);
  });
  RankVector out;
  out.model = ModelKind::twitterrank;
  out.params.gamma = options.gamma;
  out.scores.assign(graph.num_vertices(), 0.0);
  for (std::size_t t = 0; t < k; ++t) {
    if (topic_weights[t] == 0.0) continue;
    for (std::size_t i = 0; i < out.scores.size(); ++i) out.scores[i] += topic_weights[t] * per_topic[t].scores[i];
    out.iterations += per_topic[t].iterations;
  }
  return out;
}

std::vector<double> global_topic_weights(const FeatureContext& context) {
  const Dataset& ds = context.dataset();
  const std::size_t k = ds.topic_count();
  std::vector<double> w(k, 0.0);
  double total = 0.0;
  for (UserIndex u = 0; u < ds.num_users(); ++u) {
    const double t = static_cast<double>(context.tweet_count(u));
    for (std::size_t j = 0; j < k; ++j) w[j] += t * ds.users()[u].topics[j];
    total += t;
  }
  for (double& x : w) x = total > 0.0 ? x / total : 1.0 / static_cast<double>(k);
  return w;
}

}  // namespace influxrank
