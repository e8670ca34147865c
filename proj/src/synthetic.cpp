#include "influxrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "influxrank/csv.hpp"
#include "influxrank/hash.hpp"

namespace influxrank {

namespace {

HourVector normalized(HourVector v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

std::discrete_distribution<std::int64_t> power_law(double exponent, std::int64_t lo, std::int64_t hi) {
  std::vector<double> w;
  for (std::int64_t k = lo; k <= hi; ++k) w.push_back(std::pow(static_cast<double>(k), -exponent));
  return std::discrete_distribution<std::int64_t>(w.begin(), w.end());
}

std::string padded(char prefix, std::size_t value, int width) {
  return fmt::format("{}{:0{}d}", prefix, value, width);
}

int id_width(std::size_t count, int floor) {
  int w = 1;
  for (std::size_t x = count > 0 ? count - 1 : 0; x >= 10; x /= 10) ++w;
  return std::max(w, floor);
}

}  // namespace

std::vector<HourVector> default_prototypes() {
  HourVector broad, burst, night;
  broad.fill(0.1);
  burst.fill(0.1);
  night.fill(0.1);
  for (int h = 14; h <= 21; ++h) broad[h] = 1.0;
  broad[12] = broad[13] = broad[22] = 0.5;
  burst[17] = 1.0;
  burst[16] = burst[18] = 0.3;
  for (int h = 0; h <= 4; ++h) night[h] = 1.0;
  night[23] = night[5] = 0.5;
  return {normalized(broad), normalized(burst), normalized(night)};
}

std::vector<double> default_mixture() { return {0.42, 0.13, 0.45}; }

std::array<double, kFeatureCount> default_planted_weights() {
  // listed, favourites, verified, rr_v, rr_u, responded, proportion,
  // tweets in hour, activity u, activity v, joint activity, topic distance
  return {-0.5, 0.0, -0.2, -0.3, -0.1, -2.5, -1.0, 3.0, -3.0, -0.5, -1.0, 0.8};
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("generator config: " + what); };
  if (!(follower_exponent > 1.0) || !(friend_weight_exponent > 1.0) || !(tweet_exponent > 1.0))
    fail("power-law exponents must exceed 1");
  if (follower_min < 1 || follower_cap < follower_min) fail("follower range must satisfy 1 <= min <= cap");
  if (tweet_min < 0 || tweet_cap < tweet_min) fail("tweet range must satisfy 0 <= min <= cap");
  if (prototypes.empty() || prototypes.size() != mixture.size()) fail("one mixture weight per prototype");
  double msum = 0.0;
  for (double m : mixture) {
    if (!(m >= 0.0)) fail("mixture weights must be non-negative");
    msum += m;
  }
  if (std::abs(msum - 1.0) > 1e-9) fail("mixture weights must sum to 1");
  for (const auto& p : prototypes) {
    double s = 0.0;
    for (double x : p) {
      if (!(x >= 0.0)) fail("prototype entries must be non-negative");
      s += x;
    }
    if (!(s > 0.0)) fail("prototype without activity");
  }
  for (double d : day_weights)
    if (!(d >= 0.0)) fail("day weights must be non-negative");
  if (!(close_fraction >= 0.0 && close_fraction <= 1.0)) fail("close fraction must lie in [0, 1]");
  if (!(close_bias >= 0.0)) fail("close bias must be non-negative");
  if (!(retweet_share >= 0.0 && retweet_share <= 1.0)) fail("retweet share must lie in [0, 1]");
  if (!(mean_delay_seconds > 0.0)) fail("mean delay must be positive");
  if (!(topic_concentration > 0.0)) fail("topic concentration must be positive");
  if (days < 1) fail("observation must span at least one day");
  if (max_retries < 1) fail("max_retries must be positive");
}

// ------------------------------------------------------------------- graph

std::vector<std::pair<UserIndex, UserIndex>> generate_follow_edges(const GeneratorConfig& config) {
  config.validate();
  const std::size_t n = config.n_users;
  if (n == 0) return {};
  const auto cap = std::min<std::int64_t>(config.follower_cap, static_cast<std::int64_t>(n) - 1);
  if (cap < config.follower_min)
    throw ValidationError(fmt::format("degree sequence infeasible: {} users cannot give each {} followers", n,
                                      config.follower_min));

  std::mt19937_64 rng(derive_seed(config.seed, "graph"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < config.max_retries; ++attempt) {
    auto degree = power_law(config.follower_exponent, config.follower_min, cap);
    std::vector<std::int64_t> followers(n);
    for (auto& k : followers) k = config.follower_min + degree(rng);

    std::vector<double> propensity(n);
    for (auto& p : propensity) p = std::pow(1.0 - unit(rng), -1.0 / (config.friend_weight_exponent - 1.0));
    std::discrete_distribution<std::size_t> pick(propensity.begin(), propensity.end());

    std::vector<std::pair<UserIndex, UserIndex>> edges;
    std::unordered_set<std::uint64_t> seen;
    bool ok = true;
    for (UserIndex v = 0; v < n && ok; ++v) {
      for (std::int64_t s = 0; s < followers[v]; ++s) {
        bool placed = false;
        for (int tries = 0; tries < 200 && !placed; ++tries) {
          const auto u = static_cast<UserIndex>(pick(rng));
          if (u == v) continue;
          const std::uint64_t key = (std::uint64_t{u} << 32) | v;
          if (!seen.insert(key).second) continue;
          edges.emplace_back(u, v);
          placed = true;
        }
        if (!placed) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      std::sort(edges.begin(), edges.end());
      return edges;
    }
  }
  throw ValidationError(fmt::format("could not realize a simple follow graph in {} attempts", config.max_retries));
}

// ---------------------------------------------------------------- generate

SyntheticData generate(const GeneratorConfig& config) {
  config.validate();
  SyntheticData out;
  auto& truth = out.truth;
  truth.intercept = config.intercept;
  truth.weights = config.weights;
  truth.prototype_count = config.prototypes.size();
  const std::size_t n = config.n_users;
  if (n == 0) return out;

  const auto edges = generate_follow_edges(config);
  std::vector<std::int64_t> follower_count(n, 0);
  for (const auto& e : edges) ++follower_count[e.second];

  // Per-user attributes.
  std::mt19937_64 rng_attr(derive_seed(config.seed, "attributes"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto tweet_law = power_law(config.tweet_exponent, config.tweet_min, config.tweet_cap);
  std::discrete_distribution<int> proto_pick(config.mixture.begin(), config.mixture.end());
  std::gamma_distribution<double> topic_gamma(config.topic_concentration, 1.0);
  const auto cap = static_cast<double>(std::max<std::int64_t>(
      1, std::min<std::int64_t>(config.follower_cap, static_cast<std::int64_t>(n) - 1)));

  const int width = id_width(n, 4);
  std::vector<UserRecord> users(n);
  std::vector<std::int64_t> originals(n);
  std::vector<double> rho(n);
  truth.prototype.resize(n);
  for (UserIndex u = 0; u < n; ++u) {
    auto& rec = users[u];
    rec.id = padded('u', u, width);
    originals[u] = config.tweet_min + tweet_law(rng_attr);
    truth.prototype[u] = proto_pick(rng_attr);
    rho[u] = 0.6 * unit(rng_attr);
    const double fc = static_cast<double>(follower_count[u]);
    rec.listed = std::poisson_distribution<std::int64_t>(0.05 * fc)(rng_attr);
    rec.favourites = std::poisson_distribution<std::int64_t>(
        0.5 * static_cast<double>(originals[u]) * (1.0 + std::log1p(fc)))(rng_attr);
    rec.verified = unit(rng_attr) < std::min(0.8, fc / cap);
    if (config.topics > 0) {
      rec.topics.resize(config.topics);
      double s = 0.0;
      for (double& t : rec.topics) s += (t = topic_gamma(rng_attr));
      for (double& t : rec.topics) t = s > 0.0 ? t / s : 1.0 / static_cast<double>(config.topics);
    }
  }

  // Original tweets.
  struct Draft {
    std::int64_t ts;
    UserIndex author;
    std::int64_t seq;
  };
  std::mt19937_64 rng_tweets(derive_seed(config.seed, "tweets"));
  const std::int64_t start_dow = ((config.start_ts / kSecondsPerDay) % 7 + 3) % 7;
  std::vector<double> day_w(static_cast<std::size_t>(config.days));
  for (int d = 0; d < config.days; ++d) day_w[d] = config.day_weights[(start_dow + d) % 7];
  std::discrete_distribution<int> day_pick(day_w.begin(), day_w.end());
  std::vector<std::discrete_distribution<int>> hour_pick;
  for (const auto& p : config.prototypes) hour_pick.emplace_back(p.begin(), p.end());
  std::uniform_int_distribution<std::int64_t> second_pick(0, 3599);

  std::vector<Draft> drafts;
  for (UserIndex u = 0; u < n; ++u)
    for (std::int64_t i = 0; i < originals[u]; ++i) {
      const int d = day_pick(rng_tweets);
      const int h = hour_pick[truth.prototype[u]](rng_tweets);
      drafts.push_back({config.start_ts + d * kSecondsPerDay + h * 3600 + second_pick(rng_tweets), u, i});
    }
  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tie(a.ts, a.author, a.seq) < std::tie(b.ts, b.author, b.seq);
  });

  const ObservationWindow window{config.start_ts, config.start_ts + config.days * kSecondsPerDay - 1};
  // Responses at most double the tweet count in practice; reserve id width for it.
  const int tweet_width = id_width(3 * drafts.size(), 7);
  std::vector<Tweet> tweets;
  tweets.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    Tweet t;
    t.id = padded('t', i, tweet_width);
    t.author = users[drafts[i].author].id;
    t.ts = drafts[i].ts;
    tweets.push_back(std::move(t));
  }

  std::vector<EdgeRecord> edge_records;
  edge_records.reserve(edges.size());
  for (const auto& [u, v] : edges) edge_records.push_back({users[u].id, users[v].id});

  IngestOptions opts;
  opts.window = window;
  opts.min_tweets = 0;
  const Dataset base = assemble(users, edge_records, tweets, opts).dataset;
  const FeatureContext ctx(base);
  const auto& g = base.graph();

  // Latent close edges, more likely toward friends with few followers.
  std::mt19937_64 rng_close(derive_seed(config.seed, "close"));
  double raw_total = 0.0;
  for (const auto& e : edges) raw_total += std::pow(static_cast<double>(follower_count[e.second]), -config.close_bias);
  const double scale = raw_total > 0.0 ? config.close_fraction * static_cast<double>(edges.size()) / raw_total : 0.0;
  std::vector<std::uint64_t> close_keys;
  for (const auto& e : edges) {
    const double p = std::min(0.95, scale * std::pow(static_cast<double>(follower_count[e.second]), -config.close_bias));
    if (unit(rng_close) < p) {
      truth.close_edges.push_back(e);
      close_keys.push_back((std::uint64_t{e.first} << 32) | e.second);
    }
  }
  auto is_close = [&](UserIndex u, UserIndex v) {
    return std::binary_search(close_keys.begin(), close_keys.end(), (std::uint64_t{u} << 32) | v);
  };

  std::vector<std::int64_t> friend_total(n);
  for (UserIndex u = 0; u < n; ++u) friend_total[u] = ctx.friend_tweet_total(g, u);

  // Latent online propensity of each user: its prototype relative to the prototype's peak.
  std::vector<HourVector> online(n);
  for (UserIndex u = 0; u < n; ++u) {
    const auto& shape = config.prototypes[static_cast<std::size_t>(truth.prototype[u])];
    const double peak = *std::max_element(shape.begin(), shape.end());
    for (int h = 0; h < kHours; ++h) online[u][h] = peak > 0.0 ? shape[h] / peak : 0.0;
  }

  auto true_features = [&](UserIndex u, UserIndex v, int hour) {
    FeatureVector f = ctx.extract_unchecked(u, v, hour, friend_total[u]);
    f[Feature::retweet_ratio_v] = rho[v];
    f[Feature::retweet_ratio_u] = rho[u];
    f[Feature::ever_responded] = is_close(u, v) ? 1.0 : 0.0;
    f[Feature::activity_u] = online[u][static_cast<std::size_t>(hour)];
    return f;
  };

  // Planted probabilities use min-max scaling over every pair.
  std::array<double, kFeatureCount> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (const auto& t : base.tweets()) {
    const UserIndex v = t.author_index;
    const int h = base.hour_of(t.ts);
    for (UserIndex u : g.followers(v)) {
      const auto f = true_features(u, v, h);
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        lo[j] = std::min(lo[j], f.values[j]);
        hi[j] = std::max(hi[j], f.values[j]);
      }
    }
  }

  struct Planned {
    std::size_t base_tweet;
    UserIndex follower;
    double p;
  };
  std::vector<Planned> planned;
  std::mt19937_64 rng_resp(derive_seed(config.seed, "responses"));
  std::size_t next_id = base.tweets().size();
  std::vector<Tweet> all = base.tweets();
  for (std::size_t i = 0; i < base.tweets().size(); ++i) {
    const auto& t = base.tweets()[i];
    const UserIndex v = t.author_index;
    const int h = base.hour_of(t.ts);
    for (UserIndex u : g.followers(v)) {
      const auto f = true_features(u, v, h);
      std::array<double, kFeatureCount> x;
      for (std::size_t j = 0; j < kFeatureCount; ++j)
        x[j] = hi[j] > lo[j] ? (f.values[j] - lo[j]) / (hi[j] - lo[j]) : 0.0;
      const double p = response_probability(config.intercept, config.weights, x);
      planned.push_back({i, u, p});
      if (unit(rng_resp) >= p) continue;

      Tweet r;
      r.id = padded('t', next_id++, tweet_width);
      r.author = users[u].id;
      r.kind = unit(rng_resp) < config.retweet_share ? TweetKind::retweet : TweetKind::reply;
      const double remaining = static_cast<double>(window.end - t.ts);
      const double mu = config.mean_delay_seconds;
      const double q = unit(rng_resp) * (1.0 - std::exp(-remaining / mu));
      const double delay = std::min(remaining, std::floor(-mu * std::log1p(-q)));
      r.ts = t.ts + static_cast<std::int64_t>(delay);
      r.to_user = users[v].id;
      r.to_tweet = t.id;
      all.push_back(std::move(r));
    }
  }
  for (auto& t : all) {
    t.author_index = kNoUser;
    t.to_user_index = kNoUser;
    t.to_tweet_index = kNoTweet;
  }

  out.dataset = assemble(std::move(users), std::move(edge_records), std::move(all), opts).dataset;
  const Dataset& ds = *out.dataset;

  truth.pairs.reserve(planned.size());
  for (const auto& pl : planned) {
    const auto idx = ds.find_tweet(base.tweets()[pl.base_tweet].id);
    truth.pairs.push_back({*idx, pl.follower, pl.p});
  }
  std::sort(truth.pairs.begin(), truth.pairs.end(), [](const PairProbability& a, const PairProbability& b) {
    return std::tie(a.tweet, a.follower) < std::tie(b.tweet, b.follower);
  });
  for (const auto& pp : truth.pairs) truth.expected_positives += pp.probability;
  for (const auto& t : ds.tweets()) truth.total_instances += ds.graph().followers(t.author_index).size();
  return out;
}

// ------------------------------------------------------------------- output

void write_truth_csv(const SyntheticData& data, std::ostream& out) {
  const auto& truth = data.truth;
  out << "kind,key1,key2,value\n";
  out << "intercept,w0,," << csv::num(truth.intercept) << '\n';
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    out << "weight," << feature_name(j) << ",," << csv::num(truth.weights[j]) << '\n';
  if (!data.dataset) {
    out << "summary,expected_positives,,0\nsummary,total_instances,,0\n";
    return;
  }
  const Dataset& ds = *data.dataset;
  const auto& users = ds.users();
  for (std::size_t u = 0; u < truth.prototype.size(); ++u)
    out << "prototype," << users[u].id << ",C" << truth.prototype[u] + 1 << ',' << truth.prototype[u] << '\n';
  for (const auto& [u, v] : truth.close_edges) out << "close_edge," << users[u].id << ',' << users[v].id << ",1\n";
  for (const auto& p : truth.pairs)
    out << "pair_probability," << ds.tweets()[p.tweet].id << ',' << users[p.follower].id << ','
        << csv::num(p.probability) << '\n';
  out << "summary,expected_positives,," << csv::num(truth.expected_positives) << '\n';
  out << "summary,total_instances,," << truth.total_instances << '\n';
}

void write_meta_json(const SyntheticData& data, std::ostream& out) {
  nlohmann::json j;
  if (data.dataset) {
    j["window"] = {{"start", data.dataset->window().start}, {"end", data.dataset->window().end}};
    j["users"] = data.dataset->num_users();
    j["topics"] = data.dataset->topic_count();
  } else {
    j["window"] = nullptr;
    j["users"] = 0;
    j["topics"] = 0;
  }
  out << j.dump(2) << '\n';
}

std::vector<std::string> write_synthetic(const SyntheticData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
    return f;
  };
  {
    auto users = open("users.jsonl");
    auto edges = open("edges.jsonl");
    auto tweets = open("tweets.jsonl");
    if (data.dataset) {
      write_users(*data.dataset, users);
      write_edges(*data.dataset, edges);
      write_tweets(*data.dataset, tweets);
    }
  }
  {
    auto truth = open("truth.csv");
    write_truth_csv(data, truth);
  }
  {
    auto meta = open("meta.json");
    write_meta_json(data, meta);
  }
  return {"users.jsonl", "edges.jsonl", "tweets.jsonl", "truth.csv", "meta.json"};
}

// ----------------------------------------------------------- test fixtures

PlantedInstances generate_instances(double intercept, std::span<const double> weights, std::size_t count,
                                    std::uint64_t seed, std::span<const std::size_t> binary) {
  PlantedInstances out;
  out.data.dim = weights.size();
  std::mt19937_64 rng(derive_seed(seed, "instances"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(weights.size());
  double bayes = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = unit(rng);
    for (std::size_t j : binary) x.at(j) = x[j] < 0.5 ? 0.0 : 1.0;
    const double p = response_probability(intercept, weights, x);
    const bool y = unit(rng) < p;
    out.data.push_back(x, y, splitmix64(seed + i));
    out.probability.push_back(p);
    bayes += std::max(p, 1.0 - p);
  }
  out.bayes_accuracy = count > 0 ? bayes / static_cast<double>(count) : 0.0;
  return out;
}

PlantedProfiles generate_profiles(const std::vector<HourVector>& prototypes, std::size_t count, double sigma,
                                  std::uint64_t seed) {
  PlantedProfiles out;
  if (prototypes.empty()) return out;
  std::mt19937_64 rng(derive_seed(seed, "profiles"));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % prototypes.size());
    const auto& p = prototypes[label];
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    HourVector s;
    for (int h = 0; h < kHours; ++h) s[h] = std::max(0.0, p[h] + sigma * norm * noise(rng));
    out.series.push_back(s);
    out.label.push_back(label);
  }
  return out;
}

}  // namespace influxrank
