#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "fixtures.hpp"
#include "influxrank/ranking.hpp"

using namespace influxrank;
using namespace fixtures;

namespace {

using Columns = std::vector<std::vector<std::pair<UserIndex, double>>>;

Columns random_columns(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Columns c(n);
  for (UserIndex i = 0; i < n; ++i)
    for (UserIndex j = 0; j < n; ++j)
      if (i != j && u(rng) < 0.3) c[i].push_back({j, u(rng)});
  return c;
}

// Stationary vector of the dense matrix from its eigenvector for eigenvalue 1.
Eigen::VectorXd eigen_stationary(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[best] - 1.0)) best = i;
  Eigen::VectorXd v = es.eigenvectors().col(best).real();
  return v / v.sum();
}

// TunkRank fixed point solved directly: x = A (1 + p x) with A[x][y] = 1/|friends(y)|.
std::vector<double> tunkrank_solve(const FollowGraph& g, double p) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (UserIndex y = 0; y < g.num_vertices(); ++y)
    for (UserIndex x : g.friends(y)) a(x, y) = 1.0 / static_cast<double>(g.friends(y).size());
  const Eigen::VectorXd rhs = a * Eigen::VectorXd::Ones(n);
  const Eigen::VectorXd sol = (Eigen::MatrixXd::Identity(n, n) - p * a).lu().solve(rhs);
  return {sol.data(), sol.data() + n};
}

struct Corpus {
  SyntheticData data;
  std::unique_ptr<FeatureContext> ctx;
  LogisticModel model;
};

Corpus corpus(std::size_t users, std::uint64_t seed) {
  Corpus c{generate(small_config(users, seed)), nullptr, {}};
  c.ctx = std::make_unique<FeatureContext>(*c.data.dataset);
  c.model = planted_model(*c.ctx);
  return c;
}

}  // namespace

TEST_SUITE("influence-ranking") {
  TEST_CASE("penalty range") {
    CHECK_NOTHROW(Penalty(0.5));
    CHECK_NOTHROW(Penalty(1.0));
    CHECK_THROWS_AS(Penalty(0.49), ValidationError);
    CHECK_THROWS_AS(Penalty(1.2), ValidationError);
    CHECK(Penalty(0.85).multiplier(false) == doctest::Approx(0.15));
    CHECK(parse_model_kind("twitterrank") == ModelKind::twitterrank);
    CHECK_FALSE(parse_model_kind("pagerank").has_value());
  }

  TEST_CASE("rank order breaks ties by index") {
    const std::vector<double> s{0.2, 0.5, 0.2, 0.9};
    CHECK(rank_order(s) == std::vector<UserIndex>{3, 1, 0, 2});
    CHECK(rank_positions(s) == std::vector<std::size_t>{2, 1, 3, 0});
  }

  TEST_CASE("TIR matrices are column stochastic") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      auto c = corpus(40, seed);
      const auto& g = c.data.dataset->graph();
      for (const int hour : {0, 9, 17}) {
        const auto m = build_matrix(*c.ctx, g, c.model, hour, Penalty(0.85));
        const auto d = m.dense();
        for (Eigen::Index j = 0; j < d.cols(); ++j) CHECK(std::abs(d.col(j).sum() - 1.0) <= 1e-9);
        CHECK((d.array() >= 0.0).all());
      }
    }
  }

  TEST_CASE("power iteration agrees with the dense eigenvector") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + trial % 9;
      const auto cols = random_columns(n, rng);
      const auto m = TransitionMatrix::from_columns(n, 0.85, -1, cols);
      const auto r = power_iterate(m);
      const auto oracle = eigen_stationary(m.dense());
      double s = 0;
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(r.scores[i] - oracle[static_cast<Eigen::Index>(i)]) <= 1e-8);
        s += r.scores[i];
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("dangling columns are uniform") {
    const Columns cols{{{1, 2.0}}, {}, {{0, 1.0}, {1, 1.0}}};
    const auto m = TransitionMatrix::from_columns(3, 0.5, -1, cols);
    CHECK(m.dangling(1));
    CHECK_FALSE(m.dangling(0));
    const auto d = m.dense();
    CHECK(d(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(d(1, 0) == doctest::Approx(0.5 + 0.5 / 3.0));
    CHECK(d(0, 2) == doctest::Approx(0.25 + 0.5 / 3.0));
  }

  TEST_CASE("matrix validation") {
    const Columns none;
    CHECK_THROWS_AS(TransitionMatrix::from_columns(0, 0.85, -1, none), ValidationError);
    const Columns one(1);
    CHECK_THROWS_AS(TransitionMatrix::from_columns(1, 1.0, -1, one), ValidationError);
    CHECK_THROWS_AS(TransitionMatrix::from_columns(1, 0.0, -1, one), ValidationError);
    PowerOptions tight;
    tight.max_iters = 1;
    tight.tol = 1e-300;
    std::mt19937_64 rng(2);
    const auto m = TransitionMatrix::from_columns(6, 0.85, -1, random_columns(6, rng));
    CHECK_THROWS_AS(power_iterate(m, tight), ConvergenceError);
  }

  TEST_CASE("aggregate validation") {
    std::vector<RankVector> hourly(24, RankVector{{0.5, 0.5}});
    std::vector<double> w(24, 1.0 / 24);
    const auto r = aggregate(hourly, w);
    CHECK(r.scores[0] == doctest::Approx(0.5));
    w[0] += 0.1;
    CHECK_THROWS_AS(aggregate(hourly, w), ValidationError);
    std::vector<double> short_w(23, 1.0 / 23);
    CHECK_THROWS_AS(aggregate(hourly, short_w), ValidationError);
  }

  TEST_CASE("TunkRank star graph") {
    std::vector<std::pair<UserIndex, UserIndex>> e;
    for (UserIndex i = 1; i <= 5; ++i) e.push_back({i, 0});
    const auto g = FollowGraph::from_edges(6, e);
    const auto r = tunkrank(g);
    CHECK(r.scores[0] == 5.0);
    for (UserIndex i = 1; i <= 5; ++i) CHECK(r.scores[i] == 0.0);
  }

  TEST_CASE("TunkRank matches the linear-system solution") {
    const auto g = FollowGraph::from_edges(
        8, std::vector<std::pair<UserIndex, UserIndex>>{
               {0, 1}, {0, 2}, {1, 2}, {2, 0}, {3, 0}, {3, 1}, {3, 2}, {4, 3}, {5, 3}, {5, 4}, {6, 5}, {7, 6}, {6, 7}, {2, 7}});
    const auto r = tunkrank(g);
    const auto oracle = tunkrank_solve(g, 0.05);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(r.scores[i] - oracle[i]) <= 1e-10);
  }

  TEST_CASE("c = 0.5 ranks like the unpenalized model") {
    auto c = corpus(50, 5);
    const auto base = tir_base_weights(*c.ctx, c.data.dataset->graph(), c.model);
    const auto w = global_hour_weights(*c.data.dataset);
    TirOptions half;
    half.penalty = Penalty(0.5);
    TirOptions none;
    none.penalty = std::nullopt;
    const auto a = tir_rank(base, half, w);
    const auto b = tir_rank(base, none, w);
    CHECK(rank_order(a.scores) == rank_order(b.scores));
    for (std::size_t i = 0; i < a.scores.size(); ++i) CHECK(a.scores[i] == doctest::Approx(b.scores[i]).epsilon(1e-12));
  }

  TEST_CASE("c = 1 gives normal friends zero weight") {
    auto c = corpus(50, 6);
    const auto& g = c.data.dataset->graph();
    const auto m = build_matrix(*c.ctx, g, c.model, 17, Penalty(1.0));
    for (const auto& [v, u, w] : m.coo()) {
      CHECK(w > 0.0);
      CHECK(c.ctx->responded(u, v));
    }
  }

  TEST_CASE("hourly weights agree with the base table") {
    auto c = corpus(30, 7);
    const auto& g = c.data.dataset->graph();
    const auto base = tir_base_weights(*c.ctx, g, c.model);
    const Penalty pen(0.9);
    for (UserIndex u = 0; u < g.num_vertices(); ++u) {
      for (std::size_t k = base.offsets[u]; k < base.offsets[u + 1]; ++k) {
        const UserIndex v = base.friends[k];
        for (const int hour : {2, 17}) {
          const double expected = pen.multiplier(base.close[k] != 0) * base.base[hour][k];
          CHECK(hourly_weight(*c.ctx, g, c.model, u, v, hour, pen) == doctest::Approx(expected).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("incremental base weights equal a full recomputation") {
    auto c = corpus(40, 8);
    const auto& g = c.data.dataset->graph();
    const auto base = tir_base_weights(*c.ctx, g, c.model);
    const auto edges = g.edges();
    REQUIRE(edges.size() > 3);
    for (std::size_t i = 0; i < edges.size(); i += edges.size() / 3) {
      const auto [u, v] = edges[i];
      const auto reduced = g.without_edge(u, v);
      const auto inc = tir_base_weights_replacing(base, *c.ctx, reduced, c.model, u);
      const auto full = tir_base_weights(*c.ctx, reduced, c.model);
      CHECK(inc.offsets == full.offsets);
      CHECK(inc.friends == full.friends);
      CHECK(inc.close == full.close);
      for (int h = 0; h < 24; ++h) CHECK(inc.base[h] == full.base[h]);
    }
  }

  TEST_CASE("hourly and aggregated TIR") {
    auto c = corpus(30, 9);
    const auto base = tir_base_weights(*c.ctx, c.data.dataset->graph(), c.model);
    const auto hourly = tir_hourly(base, {});
    REQUIRE(hourly.size() == 24);
    for (const auto& r : hourly) CHECK(std::accumulate(r.scores.begin(), r.scores.end(), 0.0) == doctest::Approx(1.0));
    const auto w = global_hour_weights(*c.data.dataset);
    const auto agg = tir_rank(base, {}, w);
    const auto manual = aggregate(hourly, w);
    for (std::size_t i = 0; i < agg.scores.size(); ++i) CHECK(agg.scores[i] == doctest::Approx(manual.scores[i]).epsilon(1e-12));
    TirOptions threaded;
    threaded.threads = 4;
    CHECK(tir_rank(base, threaded, w).scores == agg.scores);
  }

  TEST_CASE("TwitterRank") {
    auto c = corpus(40, 10);
    const auto& g = c.data.dataset->graph();
    const auto tw = global_topic_weights(*c.ctx);
    CHECK(tw.size() == 4);
    CHECK(std::accumulate(tw.begin(), tw.end(), 0.0) == doctest::Approx(1.0));
    const auto m = twitterrank_matrix(*c.ctx, g, 0);
    const auto d = m.dense();
    for (Eigen::Index j = 0; j < d.cols(); ++j) CHECK(std::abs(d.col(j).sum() - 1.0) <= 1e-9);
    const auto r = twitterrank(*c.ctx, g, tw);
    CHECK(std::accumulate(r.scores.begin(), r.scores.end(), 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(twitterrank_matrix(*c.ctx, g, 4), ValidationError);
    std::vector<double> bad(4, 0.5);
    CHECK_THROWS_AS(twitterrank(*c.ctx, g, bad), ValidationError);
  }
}
