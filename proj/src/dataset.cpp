#include "influxrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "influxrank/hash.hpp"

namespace influxrank {

using nlohmann::json;

std::string_view to_string(TweetKind kind) noexcept {
  switch (kind) {
    case TweetKind::original: return "original";
    case TweetKind::retweet: return "retweet";
    case TweetKind::reply: return "reply";
  }
  return "original";
}

std::optional<TweetKind> parse_tweet_kind(std::string_view text) noexcept {
  if (text == "original") return TweetKind::original;
  if (text == "retweet") return TweetKind::retweet;
  if (text == "reply") return TweetKind::reply;
  return std::nullopt;
}

// ---------------------------------------------------------------- FollowGraph

FollowGraph::FollowGraph(std::size_t vertices) : friends_(vertices), followers_(vertices) {}

FollowGraph FollowGraph::from_edges(std::size_t vertices,
                                    std::span<const std::pair<UserIndex, UserIndex>> edges) {
  FollowGraph g(vertices);
  for (auto [u, v] : edges) {
    if (u >= vertices || v >= vertices) throw ValidationError("edge endpoint out of range");
    if (u == v) throw ValidationError("self-loop on user index " + std::to_string(u));
    g.friends_[u].push_back(v);
  }
  for (UserIndex u = 0; u < vertices; ++u) {
    auto& f = g.friends_[u];
    std::sort(f.begin(), f.end());
    if (std::adjacent_find(f.begin(), f.end()) != f.end())
      throw ValidationError("duplicate edge from user index " + std::to_string(u));
    for (UserIndex v : f) g.followers_[v].push_back(u);
    g.edges_ += f.size();
  }
  return g;
}

bool FollowGraph::follows(UserIndex u, UserIndex v) const {
  const auto& f = friends_.at(u);
  return std::binary_search(f.begin(), f.end(), v);
}

FollowGraph FollowGraph::without_edge(UserIndex u, UserIndex v) const {
  if (!follows(u, v)) throw NotFoundError("edge not in graph");
  FollowGraph g = *this;
  auto& f = g.friends_[u];
  f.erase(std::lower_bound(f.begin(), f.end(), v));
  auto& fl = g.followers_[v];
  fl.erase(std::lower_bound(fl.begin(), fl.end(), u));
  --g.edges_;
  return g;
}

std::vector<std::pair<UserIndex, UserIndex>> FollowGraph::edges() const {
  std::vector<std::pair<UserIndex, UserIndex>> out;
  out.reserve(edges_);
  for (UserIndex u = 0; u < friends_.size(); ++u)
    for (UserIndex v : friends_[u]) out.emplace_back(u, v);
  return out;
}

std::uint64_t FollowGraph::fingerprint() const noexcept {
  std::uint64_t h = splitmix64(friends_.size());
  for (UserIndex u = 0; u < friends_.size(); ++u) {
    for (UserIndex v : friends_[u]) h = splitmix64(h ^ ((std::uint64_t{u} << 32) | v));
    h = splitmix64(h ^ 0xfeedULL);
  }
  return h;
}

// -------------------------------------------------------------------- Dataset

std::optional<UserIndex> Dataset::find_user(std::string_view id) const {
  auto it = user_lookup_.find(std::string(id));
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<TweetIndex> Dataset::find_tweet(std::string_view id) const {
  auto it = tweet_lookup_.find(std::string(id));
  if (it == tweet_lookup_.end()) return std::nullopt;
  return it->second;
}

UserIndex Dataset::user_index(std::string_view id) const {
  auto u = find_user(id);
  if (!u) throw NotFoundError("unknown user '" + std::string(id) + "'");
  return *u;
}

int Dataset::hour_of(std::int64_t ts) const noexcept {
  std::int64_t s = (ts + tz_offset_) % kSecondsPerDay;
  if (s < 0) s += kSecondsPerDay;
  return static_cast<int>(s / 3600);
}

int Dataset::day_of_week(std::int64_t ts) const noexcept {
  std::int64_t t = ts + tz_offset_;
  std::int64_t day = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --day;
  // 1970-01-01 was a Thursday.
  std::int64_t dow = (day + 3) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow);
}

bool Dataset::operator==(const Dataset& other) const {
  return users_ == other.users_ && graph_ == other.graph_ && tweets_ == other.tweets_ &&
         window_ == other.window_ && tz_offset_ == other.tz_offset_;
}

// ------------------------------------------------------------------- assembly

struct DatasetAssembler {
  static IngestResult run(std::vector<UserRecord> users, std::vector<EdgeRecord> edges,
                          std::vector<Tweet> tweets, const IngestOptions& options);
};

namespace {

void validate_users(const std::vector<UserRecord>& users) {
  if (users.empty()) throw ValidationError("empty user set");
  const std::size_t k = users.front().topics.size();
  std::unordered_set<std::string_view> seen;
  for (const auto& u : users) {
    if (!seen.insert(u.id).second) throw ValidationError("duplicate user id '" + u.id + "'");
    if (u.listed < 0 || u.favourites < 0)
      throw ValidationError("negative count on user '" + u.id + "'");
    if (u.topics.size() != k)
      throw ValidationError("user '" + u.id + "' has " + std::to_string(u.topics.size()) +
                            " topics, expected " + std::to_string(k));
    if (k == 0) continue;
    double sum = 0.0;
    for (double p : u.topics) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ValidationError("negative or non-finite topic weight on user '" + u.id + "'");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ValidationError("topic distribution of user '" + u.id + "' does not sum to 1");
  }
}

bool tweet_order(const Tweet& a, const Tweet& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  return a.id < b.id;
}

}  // namespace

IngestResult DatasetAssembler::run(std::vector<UserRecord> users, std::vector<EdgeRecord> edges,
                                   std::vector<Tweet> tweets, const IngestOptions& options) {
  validate_users(users);
  IngestReport report;

  std::unordered_set<std::string_view> known;
  for (const auto& u : users) known.insert(u.id);

  for (const auto& e : edges) {
    if (!known.count(e.follower) || !known.count(e.friend_id))
      throw ValidationError("edge " + e.follower + " -> " + e.friend_id +
                            " references an unknown user");
    if (e.follower == e.friend_id) throw ValidationError("self-loop on user '" + e.follower + "'");
  }

  {
    std::unordered_set<std::string_view> tweet_ids;
    for (const auto& t : tweets) {
      if (!tweet_ids.insert(t.id).second)
        throw ValidationError("duplicate tweet id '" + t.id + "'");
      if (t.is_response() && !t.to_user)
        throw ValidationError("response tweet '" + t.id + "' has no target user");
    }
  }

  // Unknown authors, then the window trim.
  std::erase_if(tweets, [&](const Tweet& t) {
    if (known.count(t.author)) return false;
    ++report.dropped_unknown_author;
    return true;
  });
  ObservationWindow window;
  if (options.window) {
    window = *options.window;
    if (window.end < window.start) throw ValidationError("observation window ends before it starts");
    std::erase_if(tweets, [&](const Tweet& t) {
      if (window.contains(t.ts)) return false;
      ++report.dropped_outside_window;
      return true;
    });
  } else if (!tweets.empty()) {
    auto [lo, hi] = std::minmax_element(tweets.begin(), tweets.end(), tweet_order);
    window = {lo->ts, hi->ts};
  }

  // Activity threshold, applied after windowing.
  if (options.min_tweets > 0) {
    std::unordered_map<std::string_view, std::size_t> counts;
    for (const auto& t : tweets) ++counts[t.author];
    std::unordered_set<std::string> inactive;
    for (const auto& u : users)
      if (counts[u.id] < options.min_tweets) inactive.insert(u.id);
    if (!inactive.empty()) {
      report.removed_inactive_users = inactive.size();
      std::erase_if(users, [&](const UserRecord& u) { return inactive.count(u.id) > 0; });
      std::erase_if(edges, [&](const EdgeRecord& e) {
        if (!inactive.count(e.follower) && !inactive.count(e.friend_id)) return false;
        ++report.removed_edges;
        return true;
      });
      std::erase_if(tweets, [&](const Tweet& t) {
        if (!inactive.count(t.author)) return false;
        ++report.removed_tweets_of_inactive;
        return true;
      });
    }
    if (users.empty()) throw ValidationError("empty user set after min_tweets filter");
  }

  Dataset ds;
  ds.tz_offset_ = options.tz_offset;
  ds.window_ = window;

  std::sort(users.begin(), users.end(),
            [](const UserRecord& a, const UserRecord& b) { return a.id < b.id; });
  ds.users_ = std::move(users);
  ds.user_lookup_.reserve(ds.users_.size());
  for (UserIndex i = 0; i < ds.users_.size(); ++i) ds.user_lookup_.emplace(ds.users_[i].id, i);

  std::vector<std::pair<UserIndex, UserIndex>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges)
    pairs.emplace_back(ds.user_lookup_.at(e.follower), ds.user_lookup_.at(e.friend_id));
  ds.graph_ = FollowGraph::from_edges(ds.users_.size(), pairs);

  std::sort(tweets.begin(), tweets.end(), tweet_order);
  ds.tweets_ = std::move(tweets);
  ds.tweet_lookup_.reserve(ds.tweets_.size());
  for (TweetIndex i = 0; i < ds.tweets_.size(); ++i) ds.tweet_lookup_.emplace(ds.tweets_[i].id, i);

  ds.by_author_.assign(ds.users_.size(), {});
  for (TweetIndex i = 0; i < ds.tweets_.size(); ++i) {
    Tweet& t = ds.tweets_[i];
    t.author_index = ds.user_lookup_.at(t.author);
    t.to_user_index = kNoUser;
    t.to_tweet_index = kNoTweet;
    if (t.to_user) {
      if (auto it = ds.user_lookup_.find(*t.to_user); it != ds.user_lookup_.end())
        t.to_user_index = it->second;
      else if (t.is_response())
        ++report.responses_to_unknown_user;
    }
    if (t.to_tweet) {
      if (auto it = ds.tweet_lookup_.find(*t.to_tweet); it != ds.tweet_lookup_.end())
        t.to_tweet_index = it->second;
    }
    ds.by_author_[t.author_index].push_back(i);
  }

  return {std::move(ds), report};
}

IngestResult assemble(std::vector<UserRecord> users, std::vector<EdgeRecord> edges,
                      std::vector<Tweet> tweets, const IngestOptions& options) {
  return DatasetAssembler::run(std::move(users), std::move(edges), std::move(tweets), options);
}

// -------------------------------------------------------------------- parsing

namespace {

template <class Fn>
void for_each_record(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(source), lineno, e.what());
    }
    if (!obj.is_object()) throw ParseError(std::string(source), lineno, "expected a JSON object");
    try {
      fn(obj);
    } catch (const json::exception& e) {
      throw ParseError(std::string(source), lineno, e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string(source), lineno, e.what());
    }
  }
}

std::string id_field(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw std::invalid_argument(std::string("field '") + key + "' must be a string or integer");
}

std::optional<std::string> optional_id(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return id_field(obj, key);
}

}  // namespace

std::vector<UserRecord> parse_users(std::istream& in, std::string_view source) {
  std::vector<UserRecord> out;
  for_each_record(in, source, [&](const json& obj) {
    UserRecord u;
    u.id = id_field(obj, "id");
    u.listed = obj.at("listed").get<std::int64_t>();
    u.favourites = obj.at("favourites").get<std::int64_t>();
    u.verified = obj.at("verified").get<bool>();
    if (auto it = obj.find("topics"); it != obj.end() && !it->is_null())
      u.topics = it->get<std::vector<double>>();
    out.push_back(std::move(u));
  });
  return out;
}

std::vector<EdgeRecord> parse_edges(std::istream& in, std::string_view source) {
  std::vector<EdgeRecord> out;
  for_each_record(in, source, [&](const json& obj) {
    out.push_back({id_field(obj, "follower"), id_field(obj, "friend")});
  });
  return out;
}

std::vector<Tweet> parse_tweets(std::istream& in, std::string_view source) {
  std::vector<Tweet> out;
  for_each_record(in, source, [&](const json& obj) {
    Tweet t;
    t.id = id_field(obj, "id");
    t.author = id_field(obj, "author");
    auto kind = parse_tweet_kind(obj.at("kind").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown tweet kind");
    t.kind = *kind;
    t.ts = obj.at("ts").get<std::int64_t>();
    t.to_user = optional_id(obj, "to_user");
    t.to_tweet = optional_id(obj, "to_tweet");
    if (t.is_response() && !t.to_user)
      throw std::invalid_argument("retweet/reply requires to_user");
    out.push_back(std::move(t));
  });
  return out;
}

IngestResult ingest(std::istream& users, std::istream& edges, std::istream& tweets,
                    const IngestOptions& options) {
  auto u = parse_users(users);
  auto e = parse_edges(edges);
  auto t = parse_tweets(tweets);
  return assemble(std::move(u), std::move(e), std::move(t), options);
}

// ---------------------------------------------------------------- serializing

void write_users(const Dataset& dataset, std::ostream& out) {
  for (const auto& u : dataset.users()) {
    json obj = {{"id", u.id},
                {"listed", u.listed},
                {"favourites", u.favourites},
                {"verified", u.verified},
                {"topics", u.topics}};
    out << obj.dump() << '\n';
  }
}

void write_edges(const Dataset& dataset, std::ostream& out) {
  const auto& users = dataset.users();
  for (auto [u, v] : dataset.graph().edges()) {
    json obj = {{"follower", users[u].id}, {"friend", users[v].id}};
    out << obj.dump() << '\n';
  }
}

void write_tweets(const Dataset& dataset, std::ostream& out) {
  for (const auto& t : dataset.tweets()) {
    json obj = {{"id", t.id}, {"author", t.author}, {"kind", to_string(t.kind)}, {"ts", t.ts}};
    if (t.to_user) obj["to_user"] = *t.to_user;
    if (t.to_tweet) obj["to_tweet"] = *t.to_tweet;
    out << obj.dump() << '\n';
  }
}

}  // namespace influxrank
