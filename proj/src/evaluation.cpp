#include "influxrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "influxrank/hash.hpp"
#include "influxrank/parallel.hpp"

namespace influxrank {

// ---------------------------------------------------------------- Kendall tau

namespace {

std::uint64_t merge_count(std::vector<std::uint32_t>& v, std::vector<std::uint32_t>& buf,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

std::uint64_t count_inversions(std::vector<std::uint32_t> values) {
  std::vector<std::uint32_t> buf(values.size());
  return merge_count(values, buf, 0, values.size());
}

double kendall_tau_orders(std::span<const UserIndex> order_a, std::span<const UserIndex> order_b) {
  const std::size_t n = order_a.size();
  if (order_b.size() != n) throw ValidationError("rankings cover different numbers of users");
  if (n < 2) throw ValidationError("Kendall tau needs at least two users");
  std::vector<std::uint32_t> pos_b(n, std::numeric_limits<std::uint32_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    if (order_b[i] >= n || pos_b[order_b[i]] != std::numeric_limits<std::uint32_t>::max())
      throw ValidationError("ranking is not a permutation of the user set");
    pos_b[order_b[i]] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::uint32_t> seq(n);
  std::vector<std::uint8_t> seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (order_a[i] >= n || seen[order_a[i]]) throw ValidationError("ranking is not a permutation of the user set");
    seen[order_a[i]] = 1;
    seq[i] = pos_b[order_a[i]];
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double discordant = static_cast<double>(count_inversions(std::move(seq)));
  return (pairs - 2.0 * discordant) / pairs;
}

double kendall_tau(std::span<const double> scores_a, std::span<const double> scores_b) {
  if (scores_a.size() != scores_b.size()) throw ValidationError("rankings cover different numbers of users");
  const auto a = rank_order(scores_a);
  const auto b = rank_order(scores_b);
  return kendall_tau_orders(a, b);
}

// ------------------------------------------------------------------ link sets

std::string_view scenario_tag(Scenario s) noexcept {
  switch (s) {
    case Scenario::fh: return "L_fh";
    case Scenario::fl: return "L_fl";
    case Scenario::th: return "L_th";
    case Scenario::tl: return "L_tl";
    case Scenario::dh: return "L_dh";
    case Scenario::dl: return "L_dl";
    case Scenario::rr: return "L_rr";
    case Scenario::ur: return "L_ur";
  }
  return "L_fh";
}

std::optional<Scenario> parse_scenario(std::string_view tag) noexcept {
  for (Scenario s : kScenarios)
    if (scenario_tag(s) == tag) return s;
  return std::nullopt;
}

std::vector<std::array<double, 4>> attribute_distributions(const FeatureContext& context) {
  const Dataset& ds = context.dataset();
  const std::size_t n = ds.num_users();
  std::vector<std::array<double, 4>> raw(n);
  std::array<double, 4> max{};
  for (UserIndex u = 0; u < n; ++u) {
    const auto& rec = ds.users()[u];
    raw[u] = {static_cast<double>(rec.listed), context.favourites_rate(u), rec.verified ? 1.0 : 0.0,
              context.retweet_ratio(u)};
    for (std::size_t j = 0; j < 4; ++j) max[j] = std::max(max[j], raw[u][j]);
  }
  for (auto& r : raw) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      r[j] = max[j] > 0.0 ? r[j] / max[j] : 0.0;
      sum += r[j];
    }
    for (double& x : r) x = sum > 0.0 ? x / sum : 0.25;
  }
  return raw;
}

double pair_js_distance(const std::vector<std::array<double, 4>>& attributes, UserIndex u, UserIndex v,
                        double log_base) {
  return std::sqrt(std::max(0.0, jensen_shannon(attributes.at(u), attributes.at(v), log_base)));
}

namespace {

struct Candidate {
  std::pair<UserIndex, UserIndex> edge;
  double value;
};

LinkSet sample_pool(Scenario s, std::string criterion, std::string selection,
                    const std::vector<std::pair<UserIndex, UserIndex>>& pool, std::uint64_t seed,
                    const LinkSetOptions& options) {
  LinkSet set;
  set.scenario = s;
  set.criterion = std::move(criterion);
  set.selection = std::move(selection);
  set.seed = derive_seed(seed, fmt::format("links:{}", scenario_tag(s)));
  set.pool_size = pool.size();
  set.flagged = pool.size() < options.sample_size;
  std::vector<std::pair<UserIndex, UserIndex>> chosen;
  std::mt19937_64 rng(set.seed);
  std::sample(pool.begin(), pool.end(), std::back_inserter(chosen), options.sample_size, rng);
  for (const auto& [u, v] : chosen) set.links.push_back({u, v});
  return set;
}

std::vector<std::pair<UserIndex, UserIndex>> extreme_pool(std::vector<Candidate> all, bool high,
                                                          double fraction) {
  std::stable_sort(all.begin(), all.end(), [high](const Candidate& a, const Candidate& b) {
    return high ? a.value > b.value : a.value < b.value;
  });
  const auto take = std::min(all.size(), static_cast<std::size_t>(
                                             std::ceil(fraction * static_cast<double>(all.size()))));
  std::vector<std::pair<UserIndex, UserIndex>> pool;
  pool.reserve(take);
  for (std::size_t i = 0; i < take; ++i) pool.push_back(all[i].edge);
  return pool;
}

}  // namespace

std::vector<LinkSet> build_link_sets(const FeatureContext& context, std::uint64_t seed,
                                     const LinkSetOptions& options) {
  if (!(options.pool_fraction > 0.0 && options.pool_fraction <= 1.0))
    throw ValidationError("pool fraction must lie in (0, 1]");
  const Dataset& ds = context.dataset();
  const auto& g = ds.graph();
  const auto edges = g.edges();
  const auto attrs = attribute_distributions(context);

  std::vector<Candidate> by_followers, by_tweets, by_distance;
  std::vector<std::pair<UserIndex, UserIndex>> reciprocal, one_way;
  for (const auto& e : edges) {
    const auto [u, v] = e;
    by_followers.push_back({e, static_cast<double>(g.followers(v).size())});
    by_tweets.push_back({e, static_cast<double>(context.tweet_count(v))});
    by_distance.push_back({e, pair_js_distance(attrs, u, v)});
    (g.follows(v, u) ? reciprocal : one_way).push_back(e);
  }
  const double f = options.pool_fraction;
  std::vector<LinkSet> out;
  out.push_back(sample_pool(Scenario::fh, "friend_followers", "top_10pct", extreme_pool(by_followers, true, f), seed, options));
  out.push_back(sample_pool(Scenario::fl, "friend_followers", "bottom_10pct", extreme_pool(by_followers, false, f), seed, options));
  out.push_back(sample_pool(Scenario::th, "friend_tweets", "top_10pct", extreme_pool(by_tweets, true, f), seed, options));
  out.push_back(sample_pool(Scenario::tl, "friend_tweets", "bottom_10pct", extreme_pool(by_tweets, false, f), seed, options));
  out.push_back(sample_pool(Scenario::dh, "js_distance", "top_10pct", extreme_pool(by_distance, true, f), seed, options));
  out.push_back(sample_pool(Scenario::dl, "js_distance", "bottom_10pct", extreme_pool(by_distance, false, f), seed, options));
  out.push_back(sample_pool(Scenario::rr, "reciprocity", "reciprocal", reciprocal, seed, options));
  out.push_back(sample_pool(Scenario::ur, "reciprocity", "one_way", one_way, seed, options));
  return out;
}

// ---------------------------------------------------------------------- Q(l)

std::string ModelConfig::label() const {
  switch (kind) {
    case ModelKind::tir:
      return penalty ? fmt::format("tir(c={:.12g})", penalty->value()) : std::string("tir(no-penalty)");
    case ModelKind::tunkrank: return fmt::format("tunkrank(p={:.12g})", p);
    case ModelKind::twitterrank: return "twitterrank";
  }
  return "tir";
}

Evaluator::Evaluator(const FeatureContext& context, const LogisticModel& model, bool with_tir)
    : context_(&context), model_(&model), global_weights_(global_hour_weights(context.dataset())) {
  if (with_tir) base_ = tir_base_weights(context, context.dataset().graph(), model);
}

std::vector<UserIndex> Evaluator::candidates(Link link, std::uint64_t seed, std::size_t count) const {
  const auto& g = graph();
  std::vector<UserIndex> eligible;
  for (UserIndex w = 0; w < g.num_vertices(); ++w)
    if (w != link.follower && w != link.friend_id && !g.follows(link.follower, w)) eligible.push_back(w);
  if (eligible.size() < count)
    throw ValidationError(fmt::format("user {} has only {} non-followed users, need {}",
                                      context_->dataset().users()[link.follower].id, eligible.size(), count));
  std::vector<UserIndex> out;
  std::mt19937_64 rng(derive_seed(seed, link.follower, link.friend_id));
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(out), count, rng);
  return out;
}

HourVector Evaluator::personal_hour_weights(UserIndex u) const {
  const auto& prof = context_->profile(u);
  return prof.active ? prof.a_t : global_weights_;
}

std::vector<double> Evaluator::personal_topic_weights(UserIndex u) const {
  return context_->dataset().users().at(u).topics;
}

int q_score(std::span<const double> scores, UserIndex v, std::span<const UserIndex> candidates) {
  int q = 0;
  for (UserIndex c : candidates) {
    const bool better = scores[v] > scores[c] || (scores[v] == scores[c] && v < c);
    q += better ? 1 : 0;
  }
  return q;
}

std::vector<int> Evaluator::evaluate(Link link, std::span<const ModelConfig> configs,
                                     std::uint64_t seed) const {
  const auto& g = graph();
  const auto cand = candidates(link, seed);
  const FollowGraph reduced = g.without_edge(link.follower, link.friend_id);

  std::optional<TirBaseWeights> reduced_base;
  std::optional<RankVector> tunk, twitter;
  std::vector<int> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) {
    std::vector<double> scores;
    switch (cfg.kind) {
      case ModelKind::tir: {
        if (!base_) throw ValidationError("evaluator was built without TIR weights");
        if (!reduced_base)
          reduced_base = tir_base_weights_replacing(*base_, *context_, reduced, *model_, link.follower);
        TirOptions opts;
        opts.penalty = cfg.penalty;
        opts.gamma = cfg.gamma;
        const auto w = personal_hour_weights(link.follower);
        scores = tir_rank(*reduced_base, opts, w).scores;
        break;
      }
      case ModelKind::tunkrank: {
        TunkRankOptions opts;
        opts.p = cfg.p;
        scores = tunkrank(reduced, opts).scores;
        break;
      }
      case ModelKind::twitterrank: {
        TwitterRankOptions opts;
        opts.gamma = cfg.gamma;
        const auto w = personal_topic_weights(link.follower);
        scores = twitterrank(*context_, reduced, w, opts).scores;
        break;
      }
    }
    out.push_back(q_score(scores, link.friend_id, cand));
  }
  return out;
}

int evaluate_link(const Evaluator& evaluator, const ModelConfig& config, Link link, std::uint64_t seed) {
  return evaluator.evaluate(link, std::span<const ModelConfig>(&config, 1), seed).front();
}

std::vector<double> default_c_grid() {
  return {0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0};
}

ScenarioReport run_scenarios(const Evaluator& evaluator, std::span<const LinkSet> link_sets,
                             std::span<const ModelConfig> configs, std::uint64_t seed, unsigned threads) {
  struct Job {
    std::size_t set;
    Link link;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < link_sets.size(); ++s)
    for (const auto& l : link_sets[s].links) jobs.push_back({s, l});

  std::vector<std::vector<int>> q(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) { q[i] = evaluator.evaluate(jobs[i].link, configs, seed); });

  ScenarioReport report;
  report.link_sets.assign(link_sets.begin(), link_sets.end());
  for (std::size_t s = 0; s < link_sets.size(); ++s) {
    for (std::size_t c = 0; c < configs.size(); ++c) {
      ScenarioResult r;
      r.scenario = link_sets[s].scenario;
      r.model = configs[c];
      for (std::size_t i = 0; i < jobs.size(); ++i)
        if (jobs[i].set == s) r.q.push_back(q[i][c]);
      if (!r.q.empty())
        r.mean_q = std::accumulate(r.q.begin(), r.q.end(), 0.0) / static_cast<double>(r.q.size());
      report.results.push_back(std::move(r));
    }
  }
  return report;
}

}  // namespace influxrank
