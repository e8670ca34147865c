#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "influxrank/stats.hpp"
#include "influxrank/temporal.hpp"

using namespace influxrank;
using namespace fixtures;

namespace {

std::string serialize(const SyntheticData& d) {
  std::stringstream s;
  write_users(*d.dataset, s);
  write_edges(*d.dataset, s);
  write_tweets(*d.dataset, s);
  write_truth_csv(d, s);
  write_meta_json(d, s);
  return s.str();
}

}  // namespace

TEST_SUITE("synthetic-data") {
  TEST_CASE("zero users give an empty dataset and truth") {
    GeneratorConfig cfg;
    cfg.n_users = 0;
    const auto d = generate(cfg);
    CHECK_FALSE(d.dataset.has_value());
    CHECK(d.truth.pairs.empty());
    CHECK(d.truth.prototype.empty());
    CHECK(d.truth.total_instances == 0);
    std::stringstream meta;
    write_meta_json(d, meta);
    CHECK(nlohmann::json::parse(meta.str()).at("window").is_null());
  }

  TEST_CASE("a fixed seed reproduces the output byte for byte") {
    const auto a = serialize(generate(small_config(120, 77)));
    const auto b = serialize(generate(small_config(120, 77)));
    CHECK(a == b);
    CHECK(a != serialize(generate(small_config(120, 78))));
  }

  TEST_CASE("default corpus: planted rate, truth rows and structure") {
    const auto d = generate(GeneratorConfig{});
    const auto& ds = *d.dataset;
    const FeatureContext ctx(ds);
    const auto set = build_instances(ctx);
    const double implied = d.truth.expected_positives / static_cast<double>(d.truth.total_instances);
    CHECK(set.instances.size() == d.truth.total_instances);
    CHECK(std::abs(set.positive_rate() - implied) <= 0.2 * implied);

    double sum = 0;
    for (const auto& p : d.truth.pairs) sum += p.probability;
    CHECK(std::abs(sum - d.truth.expected_positives) <= 1e-9);

    std::stringstream csv;
    write_truth_csv(d, csv);
    std::map<std::string, std::size_t> kinds;
    std::set<std::string> labels;
    std::string line;
    std::getline(csv, line);
    CHECK(line == "kind,key1,key2,value");
    while (std::getline(csv, line)) {
      const auto kind = line.substr(0, line.find(','));
      ++kinds[kind];
      if (kind == "prototype") labels.insert(line.substr(line.rfind(',') + 1));
    }
    CHECK(kinds["weight"] == kFeatureCount);
    CHECK(kinds["intercept"] == 1);
    CHECK(kinds["prototype"] == ds.num_users());
    CHECK(labels.size() == d.truth.prototype_count);
    CHECK(d.truth.prototype_count == 3);

    const auto& g = ds.graph();
    std::set<std::pair<UserIndex, UserIndex>> seen;
    for (const auto& [u, v] : g.edges()) {
      CHECK(u != v);
      CHECK(seen.insert({u, v}).second);
    }

    for (const auto& t : ds.tweets()) {
      if (!t.is_response()) continue;
      REQUIRE(t.to_tweet_index != kNoTweet);
      const auto& o = ds.tweets()[t.to_tweet_index];
      CHECK(t.ts >= o.ts);
      CHECK(t.to_tweet_index < static_cast<TweetIndex>(&t - ds.tweets().data()));
      CHECK(g.follows(t.author_index, o.author_index));
    }

    std::size_t checked = 0;
    for (const auto& p : all_profiles(ds)) {
      if (ctx.tweet_count(p.user) < 100) continue;
      ++checked;
      const double cs = cosine(p.a_t, default_prototypes()[static_cast<std::size_t>(d.truth.prototype[p.user])]);
      INFO("user " << p.user << " tweets " << ctx.tweet_count(p.user) << " retweets " << ctx.retweet_count(p.user)
                   << " proto " << d.truth.prototype[p.user] << " cos " << cs);
      CHECK(cs >= 0.8);
    }
    CHECK(checked > 0);
  }

  TEST_CASE("in-degree follows the configured exponent") {
    for (const double a : {1.8, 2.2}) {
      GeneratorConfig cfg;
      cfg.n_users = 3000;
      cfg.follower_exponent = a;
      const auto g = FollowGraph::from_edges(3000, generate_follow_edges(cfg));
      Histogram h;
      for (UserIndex v = 0; v < 3000; ++v) ++h[static_cast<std::int64_t>(g.followers(v).size())];
      const auto slope = log_log_slope(h);
      REQUIRE(slope.has_value());
      CHECK(std::abs(*slope + a) <= 0.3);
    }
  }

  TEST_CASE("invalid configurations") {
    GeneratorConfig cfg;
    cfg.follower_exponent = 1.0;
    CHECK_THROWS_AS(generate(cfg), ValidationError);
    cfg = GeneratorConfig{};
    cfg.mixture = {0.5, 0.4, 0.3};
    CHECK_THROWS_AS(generate(cfg), ValidationError);
    cfg = GeneratorConfig{};
    cfg.n_users = 20;
    cfg.follower_min = 30;
    CHECK_THROWS_AS(generate_follow_edges(cfg), ValidationError);
  }

  TEST_CASE("written files") {
    const auto dir = std::filesystem::temp_directory_path() / "influxrank_synth_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const auto d = generate(small_config(30, 2));
    const auto files = write_synthetic(d, dir);
    CHECK(files.size() == 5);
    for (const auto& f : files) CHECK(std::filesystem::exists(dir / f));
    std::ifstream u(dir / "users.jsonl"), e(dir / "edges.jsonl"), t(dir / "tweets.jsonl");
    IngestOptions opts;
    opts.window = d.dataset->window();
    opts.min_tweets = 0;
    CHECK(ingest(u, e, t, opts).dataset == *d.dataset);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("planted instances and profiles") {
    const auto w = default_planted_weights();
    const auto p = generate_instances(0.0, w, 1000, 3, std::vector<std::size_t>{2, 5});
    CHECK(p.data.size() == 1000);
    CHECK(p.data.dim == kFeatureCount);
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const auto r = p.data.row(i);
      CHECK((r[2] == 0.0 || r[2] == 1.0));
      CHECK(r[0] >= 0.0);
      CHECK(r[0] <= 1.0);
    }
    CHECK(p.bayes_accuracy > 0.5);
    CHECK(p.bayes_accuracy < 1.0);
    const auto prof = generate_profiles(default_prototypes(), 9, 0.1, 1);
    CHECK(prof.series.size() == 9);
    CHECK(prof.label == std::vector<int>{0, 1, 2, 0, 1, 2, 0, 1, 2});
    for (const auto& s : prof.series)
      for (double x : s) CHECK(x >= 0.0);
  }
}
