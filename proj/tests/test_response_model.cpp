#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "influxrank/response_model.hpp"

using namespace influxrank;

namespace {

LabeledData separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LabeledData d;
  d.dim = 2;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    if (std::abs(a - b) < 0.05) continue;
    const std::array<double, 2> x{a, b};
    d.push_back(x, a > b, i);
  }
  return d;
}

}  // namespace

TEST_SUITE("response-model") {
  TEST_CASE("probability sign convention and limits") {
    const std::vector<double> w{0.0, 0.0}, x{0.3, 0.9};
    CHECK(response_probability(0.0, w, x) == 0.5);
    const std::vector<double> pos{2.0, 0.0};
    const std::vector<double> lo{0.1, 0.0}, hi{0.9, 0.0};
    CHECK(response_probability(0.0, pos, hi) < response_probability(0.0, pos, lo));
    CHECK(response_probability(800.0, w, x) > 0.0);
    CHECK(response_probability(800.0, w, x) < 1e-300);
    CHECK(response_probability(-800.0, w, x) < 1.0);
    CHECK(response_probability(-800.0, w, x) == doctest::Approx(1.0));
    CHECK(response_probability(-50.0, w, x) > response_probability(50.0, w, x));
  }

  TEST_CASE("predict stays inside (0, 1) and the negated model complements it") {
    const LogisticModel m(1.5, {3.0, -2.0, 0.5});
    const LogisticModel n = m.negated();
    CHECK(n.intercept() == -1.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const std::vector<double> x{u(rng), u(rng), u(rng)};
      const double p = m.predict(x);
      CHECK(p > 0.0);
      CHECK(p < 1.0);
      CHECK(p + n.predict(x) == doctest::Approx(1.0).epsilon(1e-12));
    }
    const LogisticModel huge(1e6, {0.0});
    const std::vector<double> z{0.0};
    CHECK(huge.predict(z) > 0.0);
    CHECK(LogisticModel(-1e6, {0.0}).predict(z) < 1.0);
    CHECK_THROWS_AS(m.predict(z), std::invalid_argument);
    LogisticModel copy = m;
    CHECK_THROWS_AS(copy.set_parameters(0.0, z), std::invalid_argument);
  }

  TEST_CASE("analytic gradient matches central finite differences") {
    const auto planted = generate_instances(0.5, default_planted_weights(), 500, 9);
    const LogisticModel m(0.3, {0.2, -0.1, 0.4, 0.0, 0.5, -0.7, 0.1, 0.3, -0.2, 0.6, -0.4, 0.05});
    for (const double l2 : {0.0, 0.1}) {
      const auto g = log_loss_gradient(m, planted.data, l2);
      REQUIRE(g.size() == 13);
      const double h = 1e-6;
      for (std::size_t k = 0; k < 13; ++k) {
        std::vector<double> w = m.weights();
        double w0 = m.intercept();
        auto eval = [&](double delta) {
          LogisticModel t = m;
          std::vector<double> ww = w;
          double ww0 = w0;
          if (k == 0) ww0 += delta; else ww[k - 1] += delta;
          t.set_parameters(ww0, ww);
          return log_loss(t, planted.data, l2);
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }

  TEST_CASE("separable toy data trains to high accuracy") {
    const auto d = separable(400, 1);
    TrainOptions o;
    o.epochs = 3000;
    o.learning_rate = 2.0;
    const auto r = train(d, o);
    CHECK(accuracy(r.model, d) >= 0.99);
    CHECK(r.loss_history.size() == 3001);
    CHECK(r.loss_history.back() < r.loss_history.front());
    // Responses sit where feature 0 is larger, so its weight is negative.
    CHECK(r.model.weights()[0] < 0.0);
  }

  TEST_CASE("training errors") {
    LabeledData one;
    one.dim = 1;
    const std::array<double, 1> x{0.5};
    one.push_back(x, true, 1);
    one.push_back(x, true, 2);
    CHECK_THROWS_AS(train(one, {}), ValidationError);
    const auto d = separable(100, 2);
    TrainOptions o;
    o.learning_rate = 1e300;
    o.epochs = 50;
    try {
      train(d, o);
      FAIL("expected divergence");
    } catch (const ConvergenceError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
  }

  TEST_CASE("cross-validation is deterministic and order independent") {
    const auto planted = generate_instances(0.0, default_planted_weights(), 2000, 4);
    TrainOptions o;
    o.epochs = 200;
    o.seed = 11;
    const auto a = cross_validate(planted.data, 5, o);
    const auto b = cross_validate(planted.data, 5, o);
    CHECK(a.fold_accuracy == b.fold_accuracy);
    CHECK(a.fold_accuracy.size() == 5);

    LabeledData shuffled;
    shuffled.dim = planted.data.dim;
    std::vector<std::size_t> idx(planted.data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::reverse(idx.begin(), idx.end());
    for (auto i : idx) shuffled.push_back(planted.data.row(i), planted.data.y[i] != 0, planted.data.keys[i]);
    const auto c = cross_validate(shuffled, 5, o);
    for (std::size_t f = 0; f < 5; ++f) CHECK(c.fold_accuracy[f] == doctest::Approx(a.fold_accuracy[f]).epsilon(1e-12));
    CHECK_THROWS_AS(cross_validate(planted.data, 1, o), ValidationError);
  }

  TEST_CASE("randomized labels sit at chance") {
    auto planted = generate_instances(0.0, default_planted_weights(), 4000, 6);
    std::mt19937_64 rng(12);
    std::bernoulli_distribution coin(0.5);
    for (auto& y : planted.data.y) y = coin(rng) ? 1 : 0;
    TrainOptions o;
    o.epochs = 200;
    const auto cv = cross_validate(planted.data, 5, o);
    CHECK(cv.mean_accuracy == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::abs(cv.mean_accuracy - 0.5) <= 0.05);
  }

  TEST_CASE("model json round-trips exactly") {
    LogisticModel m(0.1234567890123, {1.0 / 3.0, -2.5e-17, 7.0});
    m.feature_names() = {"a", "b", "c"};
    m.metadata().seed = 99;
    m.metadata().cv_accuracy = 0.8125;
    const auto back = LogisticModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    CHECK(back == m);
    CHECK(back.intercept() == m.intercept());
  }

  TEST_CASE("features ranked by magnitude") {
    const LogisticModel m(0.0, std::vector<double>{0.5, -2.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    const auto r = rank_features(m);
    CHECK(r[0].index == 1);
    CHECK(r[1].index == 3);
    CHECK(r[2].index == 0);
    CHECK(r[3].index == 2);
    CHECK(r[0].name == "FV_v");
  }
}
