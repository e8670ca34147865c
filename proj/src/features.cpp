#include "influxrank/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "influxrank/csv.hpp"
#include "influxrank/hash.hpp"

namespace influxrank {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "LI_v", "FV_v", "VR_v", "RR_v", "RR_u", "RE_uv",
    "PT_uv", "N_v_t", "A_u_t", "A_v_t", "JA_uv_t", "TS_uv"};

std::uint64_t pair_key(UserIndex u, UserIndex v) { return (std::uint64_t{u} << 32) | v; }

}  // namespace

std::string_view feature_name(std::size_t index) { return kNames.at(index); }
std::string_view feature_name(Feature f) { return kNames.at(static_cast<std::size_t>(f)); }

double jensen_shannon(std::span<const double> p, std::span<const double> q, double log_base) {
  if (p.size() != q.size()) throw std::invalid_argument("jensen_shannon: size mismatch");
  const double scale = 1.0 / std::log(log_base);
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) d += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) d += 0.5 * q[i] * std::log(q[i] / m);
  }
  return std::max(0.0, d * scale);
}

// ------------------------------------------------------------- FeatureContext

FeatureContext::FeatureContext(const Dataset& dataset, double jsd_log_base)
    : dataset_(&dataset), log_base_(jsd_log_base) {
  const auto n = dataset.num_users();
  tweets_.assign(n, 0);
  retweets_.assign(n, 0);
  profiles_ = all_profiles(dataset);
  for (const Tweet& t : dataset.tweets()) {
    ++tweets_[t.author_index];
    if (t.kind == TweetKind::retweet) ++retweets_[t.author_index];
    if (t.is_response() && t.to_user_index != kNoUser && t.to_user_index != t.author_index)
      close_.push_back(pair_key(t.author_index, t.to_user_index));
  }
  std::sort(close_.begin(), close_.end());
  close_.erase(std::unique(close_.begin(), close_.end()), close_.end());
}

bool FeatureContext::responded(UserIndex u, UserIndex v) const {
  return std::binary_search(close_.begin(), close_.end(), pair_key(u, v));
}

double FeatureContext::favourites_rate(UserIndex v) const {
  const auto t = tweets_.at(v);
  return t == 0 ? 0.0 : static_cast<double>(dataset_->users()[v].favourites) / static_cast<double>(t);
}

double FeatureContext::retweet_ratio(UserIndex v) const {
  const auto t = tweets_.at(v);
  return t == 0 ? 0.0 : static_cast<double>(retweets_[v]) / static_cast<double>(t);
}

double FeatureContext::topic_distance(UserIndex u, UserIndex v) const {
  const auto& users = dataset_->users();
  if (users.at(u).topics.empty()) return 0.0;
  return std::sqrt(2.0 * jensen_shannon(users[u].topics, users.at(v).topics, log_base_));
}

std::int64_t FeatureContext::friend_tweet_total(const FollowGraph& graph, UserIndex u) const {
  std::int64_t total = 0;
  for (UserIndex f : graph.friends(u)) total += tweets_[f];
  return total;
}

FeatureVector FeatureContext::static_features(UserIndex u, UserIndex v,
                                              std::int64_t friend_total) const {
  FeatureVector f;
  const auto& user_v = dataset_->users().at(v);
  f[Feature::listed] = static_cast<double>(user_v.listed);
  f[Feature::favourites_rate] = favourites_rate(v);
  f[Feature::verified] = user_v.verified ? 1.0 : 0.0;
  f[Feature::retweet_ratio_v] = retweet_ratio(v);
  f[Feature::retweet_ratio_u] = retweet_ratio(u);
  f[Feature::ever_responded] = responded(u, v) ? 1.0 : 0.0;
  f[Feature::tweet_proportion] =
      friend_total > 0 ? static_cast<double>(tweets_[v]) / static_cast<double>(friend_total) : 0.0;
  f[Feature::topic_distance] = topic_distance(u, v);
  return f;
}

void FeatureContext::fill_hourly(FeatureVector& f, UserIndex u, UserIndex v, int hour) const {
  if (hour < 0 || hour >= kHours) throw std::out_of_range("hour must be in [0, 23]");
  const double au = profiles_[u].a_t[hour];
  const double av = profiles_[v].a_t[hour];
  f[Feature::tweets_in_hour] = profiles_[v].n_t[hour];
  f[Feature::activity_u] = au;
  f[Feature::activity_v] = av;
  f[Feature::joint_activity] = au * av;
}

FeatureVector FeatureContext::extract_unchecked(UserIndex u, UserIndex v, int hour,
                                                std::int64_t friend_total) const {
  FeatureVector f = static_features(u, v, friend_total);
  fill_hourly(f, u, v, hour);
  return f;
}

FeatureVector FeatureContext::extract(const FollowGraph& graph, UserIndex u, UserIndex v,
                                      int hour) const {
  if (!graph.follows(u, v))
    throw NotFoundError("no follow edge " + dataset_->users().at(u).id + " -> " +
                        dataset_->users().at(v).id);
  return extract_unchecked(u, v, hour, friend_tweet_total(graph, u));
}

FeatureVector FeatureContext::extract(UserIndex u, UserIndex v, int hour) const {
  return extract(dataset_->graph(), u, v, hour);
}

// ------------------------------------------------------------------ instances

std::uint64_t instance_key(std::string_view tweet_id, std::string_view follower_id) {
  return fnv1a64(follower_id, fnv1a64("\x1f", fnv1a64(tweet_id)));
}

InstanceSet build_instances(const FeatureContext& context) {
  const Dataset& ds = context.dataset();
  const auto& tweets = ds.tweets();
  const auto& graph = ds.graph();

  // (original tweet, responder) pairs that count as positives.
  std::vector<std::uint64_t> responded;
  for (const Tweet& t : tweets)
    if (t.is_response() && t.to_tweet_index != kNoTweet && t.to_user_index != kNoUser)
      responded.push_back((std::uint64_t{t.to_tweet_index} << 32) | t.author_index);
  std::sort(responded.begin(), responded.end());

  std::vector<TweetIndex> by_id(tweets.size());
  for (TweetIndex i = 0; i < tweets.size(); ++i) by_id[i] = i;
  std::sort(by_id.begin(), by_id.end(),
            [&](TweetIndex a, TweetIndex b) { return tweets[a].id < tweets[b].id; });

  std::vector<std::int64_t> friend_totals(ds.num_users());
  for (UserIndex u = 0; u < ds.num_users(); ++u)
    friend_totals[u] = context.friend_tweet_total(graph, u);

  InstanceSet out;
  std::size_t total = 0;
  for (const Tweet& t : tweets) total += graph.followers(t.author_index).size();
  out.instances.reserve(total);

  for (TweetIndex i : by_id) {
    const Tweet& t = tweets[i];
    const UserIndex v = t.author_index;
    const int hour = ds.hour_of(t.ts);
    for (UserIndex u : graph.followers(v)) {
      ResponseInstance inst;
      inst.key = instance_key(t.id, ds.users()[u].id);
      inst.tweet = i;
      inst.follower = u;
      inst.friend_id = v;
      inst.hour = hour;
      inst.features = context.extract_unchecked(u, v, hour, friend_totals[u]);
      inst.response =
          std::binary_search(responded.begin(), responded.end(), (std::uint64_t{i} << 32) | u);
      (inst.response ? out.positives : out.negatives) += 1;
      out.instances.push_back(inst);
    }
  }
  return out;
}

// --------------------------------------------------------------------- scaler

MinMaxScaler::MinMaxScaler() {
  min_.fill(0.0);
  max_.fill(1.0);
  degenerate_.fill(false);
}

MinMaxScaler MinMaxScaler::fit(std::span<const ResponseInstance> instances) {
  if (instances.empty()) throw ValidationError("cannot fit a scaler on zero instances");
  MinMaxScaler s;
  s.min_.fill(std::numeric_limits<double>::infinity());
  s.max_.fill(-std::numeric_limits<double>::infinity());
  for (const auto& inst : instances)
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      s.min_[j] = std::min(s.min_[j], inst.features.values[j]);
      s.max_[j] = std::max(s.max_[j], inst.features.values[j]);
    }
  for (std::size_t j = 0; j < kFeatureCount; ++j) s.degenerate_[j] = !(s.max_[j] > s.min_[j]);
  return s;
}

double MinMaxScaler::scale(std::size_t j, double raw) const {
  if (degenerate_[j]) return 0.0;
  return std::clamp((raw - min_[j]) / (max_[j] - min_[j]), 0.0, 1.0);
}

FeatureVector MinMaxScaler::transform(const FeatureVector& raw) const {
  FeatureVector out;
  for (std::size_t j = 0; j < kFeatureCount; ++j) out.values[j] = scale(j, raw.values[j]);
  return out;
}

nlohmann::json MinMaxScaler::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    features.push_back({{"name", kNames[j]}, {"min", min_[j]}, {"max", max_[j]},
                        {"degenerate", static_cast<bool>(degenerate_[j])}});
  return {{"features", features}};
}

MinMaxScaler MinMaxScaler::from_json(const nlohmann::json& j) {
  const auto& features = j.at("features");
  if (features.size() != kFeatureCount)
    throw ValidationError("scaler must describe " + std::to_string(kFeatureCount) + " features");
  MinMaxScaler s;
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    s.min_[i] = features[i].at("min").get<double>();
    s.max_[i] = features[i].at("max").get<double>();
    s.degenerate_[i] = features[i].at("degenerate").get<bool>();
  }
  return s;
}

BalancedData balance_and_normalize(std::span<const ResponseInstance> instances, std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < instances.size(); ++i)
    (instances[i].response ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    throw ValidationError("balancing needs both response and non-response instances");

  std::vector<std::size_t> kept_neg;
  const std::size_t take = std::min(pos.size(), neg.size());
  std::mt19937_64 rng(seed);
  std::sample(neg.begin(), neg.end(), std::back_inserter(kept_neg), take, rng);

  std::vector<std::size_t> keep;
  keep.reserve(pos.size() + kept_neg.size());
  std::merge(pos.begin(), pos.end(), kept_neg.begin(), kept_neg.end(), std::back_inserter(keep));

  BalancedData out;
  out.train.instances.reserve(keep.size());
  for (std::size_t i : keep) out.train.instances.push_back(instances[i]);
  out.scaler = MinMaxScaler::fit(out.train.instances);
  for (auto& inst : out.train.instances) inst.features = out.scaler.transform(inst.features);
  out.train.positives = pos.size();
  out.train.negatives = kept_neg.size();
  return out;
}

// ------------------------------------------------------------------------ csv

void write_instances_csv(std::span<const ResponseInstance> instances, const Dataset& dataset,
                         std::ostream& out) {
  out << "tweet_id,follower_id,friend_id,hour";
  for (auto name : kNames) out << ',' << name;
  out << ",label\n";
  for (const auto& inst : instances) {
    out << dataset.tweets().at(inst.tweet).id << ',' << dataset.users().at(inst.follower).id << ','
        << dataset.users().at(inst.friend_id).id << ',' << inst.hour;
    for (double x : inst.features.values) out << ',' << csv::num(x);
    out << ',' << (inst.response ? 1 : 0) << '\n';
  }
}

std::vector<ResponseInstance> read_instances_csv(std::istream& in) {
  std::vector<ResponseInstance> out;
  std::string line;
  std::size_t lineno = 0;
  const std::size_t columns = 4 + kFeatureCount + 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != columns)
      throw ParseError("instances.csv", lineno,
                       "expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(fields.size()));
    try {
      ResponseInstance inst;
      inst.key = instance_key(fields[0], fields[1]);
      inst.hour = static_cast<int>(csv::to_int(fields[3]));
      for (std::size_t j = 0; j < kFeatureCount; ++j)
        inst.features.values[j] = csv::to_double(fields[4 + j]);
      const auto label = csv::to_int(fields.back());
      if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
      inst.response = label == 1;
      out.push_back(inst);
    } catch (const std::invalid_argument& e) {
      throw ParseError("instances.csv", lineno, e.what());
    }
  }
  return out;
}

}  // namespace influxrank
