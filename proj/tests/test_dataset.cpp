#include <doctest.h>

#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "influxrank/stats.hpp"

using namespace influxrank;
using namespace fixtures;

TEST_SUITE("core-model") {
  TEST_CASE("three users, two edges, five tweets pass through") {
    auto r = build({user("a"), user("b"), user("c")}, {{"a", "b"}, {"b", "c"}},
                   {original("t1", "a", kMonday), original("t2", "b", kMonday + 10), original("t3", "c", kMonday + 20),
                    original("t4", "a", kMonday + 30), response("t5", "a", kMonday + 40, "b", "t2")});
    const auto& ds = r.dataset;
    CHECK(ds.num_users() == 3);
    CHECK(ds.graph().num_edges() == 2);
    CHECK(ds.tweets().size() == 5);
    CHECK(ds.tweets()[4].to_tweet_index == *ds.find_tweet("t2"));
    CHECK(ds.tweets()[4].to_user_index == ds.user_index("b"));
  }

  TEST_CASE("tweets by unknown authors are dropped and counted") {
    auto r = build({user("a"), user("b")}, {{"a", "b"}},
                   {original("t1", "a", kMonday), original("t2", "X", kMonday + 1)});
    CHECK(r.dataset.tweets().size() == 1);
    CHECK(r.report.dropped_unknown_author == 1);
  }

  TEST_CASE("validation errors") {
    CHECK_THROWS_AS(build({user("a"), user("b")}, {{"a", "a"}}, {}), ValidationError);
    CHECK_THROWS_AS(build({user("a"), user("a")}, {}, {}), ValidationError);
    CHECK_THROWS_AS(build({}, {}, {}), ValidationError);
    CHECK_THROWS_AS(build({user("a"), user("b")}, {{"a", "b"}, {"a", "b"}}, {}), ValidationError);
    CHECK_THROWS_AS(build({user("a"), user("b")}, {{"a", "z"}}, {}), ValidationError);
    CHECK_THROWS_AS(build({user("a", 0, 0, false, {0.5, 0.6})}, {}, {}), ValidationError);
    CHECK_THROWS_AS(build({user("a", 0, 0, false, {1.0}), user("b", 0, 0, false, {0.5, 0.5})}, {}, {}),
                    ValidationError);
    Tweet bad = original("t1", "a", kMonday);
    bad.kind = TweetKind::reply;
    CHECK_THROWS_AS(build({user("a")}, {}, {bad}), ValidationError);
    CHECK_THROWS_AS(build({user("a")}, {}, {original("t1", "a", 1), original("t1", "a", 2)}), ValidationError);
  }

  TEST_CASE("malformed lines report their line number") {
    std::istringstream users(
        "{\"id\":\"a\",\"listed\":1,\"favourites\":2,\"verified\":false,\"topics\":[1.0]}\n{not json}\n");
    try {
      parse_users(users);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream tweets("{\"id\":\"t\",\"author\":\"a\",\"kind\":\"retweet\",\"ts\":5}\n");
    CHECK_THROWS_AS(parse_tweets(tweets), ParseError);
    std::istringstream edges("\n{\"follower\":\"a\"}\n");
    try {
      parse_edges(edges);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("integer ids are accepted") {
    std::istringstream users("{\"id\":1,\"listed\":0,\"favourites\":0,\"verified\":true,\"topics\":[]}\n");
    const auto u = parse_users(users);
    REQUIRE(u.size() == 1);
    CHECK(u[0].id == "1");
    CHECK(u[0].verified);
  }

  TEST_CASE("responses to users outside V are kept as activity") {
    auto r = build({user("a"), user("b")}, {{"a", "b"}},
                   {original("t1", "b", kMonday), response("t2", "a", kMonday + 5, "ghost", std::nullopt)});
    CHECK(r.dataset.tweets().size() == 2);
    CHECK(r.report.responses_to_unknown_user == 1);
    CHECK(r.dataset.tweets()[1].to_user_index == kNoUser);
  }

  TEST_CASE("min_tweets applies after the window trim") {
    std::vector<Tweet> tweets;
    for (int i = 0; i < 20; ++i) tweets.push_back(original("a" + std::to_string(i), "a", kMonday + i));
    for (int i = 0; i < 20; ++i) tweets.push_back(original("b" + std::to_string(i), "b", kMonday + (i < 5 ? -100 : i)));
    auto r = build({user("a"), user("b"), user("c")}, {{"a", "b"}, {"c", "a"}}, tweets,
                   ObservationWindow{kMonday, kMonday + kDay}, 20);
    CHECK(r.report.dropped_outside_window == 5);
    CHECK(r.dataset.num_users() == 1);
    CHECK(r.dataset.users()[0].id == "a");
    CHECK(r.report.removed_inactive_users == 2);
    CHECK(r.report.removed_edges == 2);
    CHECK(r.dataset.graph().num_edges() == 0);
  }

  TEST_CASE("tweets are time ordered and hours follow the offset") {
    auto r = build({user("a")}, {}, {original("t2", "a", kMonday + 10 * kHour), original("t1", "a", kMonday + 5)});
    const auto& ds = r.dataset;
    CHECK(ds.tweets()[0].id == "t1");
    CHECK(ds.hour_of(kMonday + 10 * kHour) == 10);
    CHECK(ds.day_of_week(kMonday + 10 * kHour) == 0);
    CHECK(ds.day_of_week(kMonday + 6 * kDay) == 6);
    IngestOptions opts;
    opts.tz_offset = -5 * kHour;
    opts.min_tweets = 0;
    const auto shifted = assemble({user("a")}, {}, {original("t", "a", kMonday + 2 * kHour)}, opts).dataset;
    CHECK(shifted.hour_of(kMonday + 2 * kHour) == 21);
    CHECK(shifted.day_of_week(kMonday + 2 * kHour) == 6);
  }

  TEST_CASE("ingest of the serialized form reproduces the dataset") {
    auto data = generate(small_config(40, 3));
    const auto& ds = *data.dataset;
    std::stringstream u, e, t;
    write_users(ds, u);
    write_edges(ds, e);
    write_tweets(ds, t);
    IngestOptions opts;
    opts.window = ds.window();
    opts.min_tweets = 0;
    const auto again = ingest(u, e, t, opts).dataset;
    CHECK(again == ds);
  }

  TEST_CASE("adjacencies are transposes") {
    GeneratorConfig cfg;
    cfg.n_users = 500;
    const auto edges = generate_follow_edges(cfg);
    const auto g = FollowGraph::from_edges(500, edges);
    std::size_t total = 0;
    std::vector<std::size_t> indeg(500, 0);
    for (UserIndex u = 0; u < 500; ++u)
      for (UserIndex v : g.friends(u)) {
        ++indeg[v];
        CHECK(g.follows(u, v));
      }
    for (UserIndex v = 0; v < 500; ++v) {
      CHECK(g.followers(v).size() == indeg[v]);
      total += g.followers(v).size();
    }
    CHECK(total == g.num_edges());
    CHECK(g.edges().size() == g.num_edges());
  }

  TEST_CASE("without_edge copies and leaves the original intact") {
    const auto g = FollowGraph::from_edges(3, std::vector<std::pair<UserIndex, UserIndex>>{{0, 1}, {1, 2}});
    const auto before = g.fingerprint();
    const auto h = g.without_edge(0, 1);
    CHECK_FALSE(h.follows(0, 1));
    CHECK(h.num_edges() == 1);
    CHECK(h.num_vertices() == 3);
    CHECK(g.fingerprint() == before);
    CHECK(g.follows(0, 1));
    CHECK_THROWS_AS(g.without_edge(2, 0), NotFoundError);
  }

  TEST_CASE("degree_stats histograms") {
    auto r = build({user("a"), user("b")}, {{"a", "b"}, {"b", "a"}}, {});
    const auto rep = degree_stats(r.dataset);
    CHECK(rep.followers == Histogram{{1, 2}});
    CHECK_FALSE(r.dataset.graph().num_edges() == 0);

    auto lonely = build({user("a"), user("b"), user("c")}, {}, {original("t", "a", kMonday)});
    const auto rep2 = degree_stats(lonely.dataset);
    CHECK_FALSE(rep2.follower_friend_correlation.has_value());
    CHECK(rep2.friends == Histogram{{0, 3}});
    CHECK(rep2.tweets == Histogram{{0, 2}, {1, 1}});
  }

  TEST_CASE("degree_stats histograms sum to |V|") {
    const auto data = generate(small_config(60, 5));
    const auto rep = degree_stats(*data.dataset);
    for (const auto* h : {&rep.followers, &rep.friends, &rep.tweets}) {
      std::int64_t s = 0;
      for (const auto& [v, c] : *h) s += c;
      CHECK(s == 60);
    }
    CHECK(rep.follower_friend_correlation.has_value());
  }

  TEST_CASE("log-log slope recovers a Pareto exponent") {
    GeneratorConfig cfg;
    cfg.n_users = 5000;
    cfg.follower_exponent = 2.0;
    const auto edges = generate_follow_edges(cfg);
    const auto g = FollowGraph::from_edges(5000, edges);
    Histogram h;
    for (UserIndex v = 0; v < 5000; ++v) ++h[static_cast<std::int64_t>(g.followers(v).size())];
    const auto slope = log_log_slope(h);
    REQUIRE(slope.has_value());
    CHECK(*slope == doctest::Approx(-2.0).epsilon(0.15));
  }

  TEST_CASE("pearson") {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{1, 1, 1, 1};
    CHECK(*pearson(x, y) == doctest::Approx(1.0));
    CHECK(*pearson(x, z) == doctest::Approx(-1.0));
    CHECK_FALSE(pearson(x, c).has_value());
  }
}
