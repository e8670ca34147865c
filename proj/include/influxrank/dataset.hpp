#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "influxrank/common.hpp"

namespace influxrank {

enum class TweetKind : std::uint8_t { original, retweet, reply };

std::string_view to_string(TweetKind kind) noexcept;
std::optional<TweetKind> parse_tweet_kind(std::string_view text) noexcept;

struct UserRecord {
  std::string id;
  std::int64_t listed = 0;
  std::int64_t favourites = 0;  // favourites received
  bool verified = false;
  std::vector<double> topics;

  bool operator==(const UserRecord&) const = default;
};

struct EdgeRecord {
  std::string follower;
  std::string friend_id;
};

struct Tweet {
  std::string id;
  std::string author;
  TweetKind kind = TweetKind::original;
  std::int64_t ts = 0;
  std::optional<std::string> to_user;
  std::optional<std::string> to_tweet;

  // Resolved by ingestion.
  UserIndex author_index = kNoUser;
  UserIndex to_user_index = kNoUser;   // kNoUser when absent or outside V
  TweetIndex to_tweet_index = kNoTweet;  // kNoTweet when absent or outside the window

  bool is_response() const noexcept { return kind != TweetKind::original; }
  bool operator==(const Tweet&) const = default;
};

struct ObservationWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t ts) const noexcept { return ts >= start && ts <= end; }
  bool operator==(const ObservationWindow&) const = default;
};

/// Directed follow graph. Edge (u, v) means u follows v: v is in friends(u) and
/// u is in followers(v). Both adjacency lists are kept sorted.
class FollowGraph {
 public:
  FollowGraph() = default;
  explicit FollowGraph(std::size_t vertices);

  /// Throws ValidationError on self-loops, duplicates or out-of-range endpoints.
  static FollowGraph from_edges(std::size_t vertices,
                                std::span<const std::pair<UserIndex, UserIndex>> edges);

  std::size_t num_vertices() const noexcept { return friends_.size(); }
  std::size_t num_edges() const noexcept { return edges_; }

  std::span<const UserIndex> friends(UserIndex u) const { return friends_.at(u); }
  std::span<const UserIndex> followers(UserIndex v) const { return followers_.at(v); }
  bool follows(UserIndex u, UserIndex v) const;

  /// Copy with (u, v) removed; throws NotFoundError if the edge is absent.
  FollowGraph without_edge(UserIndex u, UserIndex v) const;

  /// All edges ordered by (follower, friend).
  std::vector<std::pair<UserIndex, UserIndex>> edges() const;

  std::uint64_t fingerprint() const noexcept;

  bool operator==(const FollowGraph&) const = default;

 private:
  std::vector<std::vector<UserIndex>> friends_;
  std::vector<std::vector<UserIndex>> followers_;
  std::size_t edges_ = 0;
};

struct IngestOptions {
  /// Tweets outside the window are trimmed. Absent: spans the first to last tweet.
  std::optional<ObservationWindow> window;
  /// Users with fewer tweets inside the window are removed with their edges and tweets.
  std::size_t min_tweets = 20;
  /// Seconds added to UTC before hour-of-day / day-of-week binning.
  std::int64_t tz_offset = 0;
};

struct IngestReport {
  std::size_t dropped_unknown_author = 0;
  std::size_t dropped_outside_window = 0;
  std::size_t removed_inactive_users = 0;
  std::size_t removed_edges = 0;
  std::size_t removed_tweets_of_inactive = 0;
  std::size_t responses_to_unknown_user = 0;
};

/// Immutable social-graph corpus. Users are ordered by id, tweets by (ts, id).
class Dataset {
 public:
  Dataset() = default;

  const std::vector<UserRecord>& users() const noexcept { return users_; }
  const FollowGraph& graph() const noexcept { return graph_; }
  const std::vector<Tweet>& tweets() const noexcept { return tweets_; }
  ObservationWindow window() const noexcept { return window_; }
  std::int64_t tz_offset() const noexcept { return tz_offset_; }

  std::size_t num_users() const noexcept { return users_.size(); }
  std::size_t topic_count() const noexcept {
    return users_.empty() ? 0 : users_.front().topics.size();
  }

  std::optional<UserIndex> find_user(std::string_view id) const;
  std::optional<TweetIndex> find_tweet(std::string_view id) const;
  UserIndex user_index(std::string_view id) const;  // throws NotFoundError

  /// Indices into tweets(), chronological.
  std::span<const TweetIndex> tweets_by(UserIndex u) const { return by_author_.at(u); }

  int hour_of(std::int64_t ts) const noexcept;
  int day_of_week(std::int64_t ts) const noexcept;  // 0 = Monday

  bool operator==(const Dataset& other) const;

 private:
  friend struct DatasetAssembler;

  std::vector<UserRecord> users_;
  FollowGraph graph_;
  std::vector<Tweet> tweets_;
  ObservationWindow window_;
  std::int64_t tz_offset_ = 0;
  std::unordered_map<std::string, UserIndex> user_lookup_;
  std::unordered_map<std::string, TweetIndex> tweet_lookup_;
  std::vector<std::vector<TweetIndex>> by_author_;
};

struct IngestResult {
  Dataset dataset;
  IngestReport report;
};

/// Validates records and builds a Dataset. Throws ValidationError on duplicate
/// user ids, inconsistent topic vectors, unknown edge endpoints, self-loops,
/// duplicate edges, duplicate tweet ids, responses without a target user, or an
/// empty user set.
IngestResult assemble(std::vector<UserRecord> users, std::vector<EdgeRecord> edges,
                      std::vector<Tweet> tweets, const IngestOptions& options);

/// Parses the three line-delimited JSON streams. Malformed lines throw
/// ParseError carrying the stream name and line number.
IngestResult ingest(std::istream& users, std::istream& edges, std::istream& tweets,
                    const IngestOptions& options);

std::vector<UserRecord> parse_users(std::istream& in, std::string_view source = "users.jsonl");
std::vector<EdgeRecord> parse_edges(std::istream& in, std::string_view source = "edges.jsonl");
std::vector<Tweet> parse_tweets(std::istream& in, std::string_view source = "tweets.jsonl");

void write_users(const Dataset& dataset, std::ostream& out);
void write_edges(const Dataset& dataset, std::ostream& out);
void write_tweets(const Dataset& dataset, std::ostream& out);

}  // namespace influxrank
