#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "influxrank/csv.hpp"
#include "influxrank/dataset.hpp"
#include "influxrank/evaluation.hpp"
#include "influxrank/features.hpp"
#include "influxrank/hash.hpp"
#include "influxrank/ksc.hpp"
#include "influxrank/ranking.hpp"
#include "influxrank/response_model.hpp"
#include "influxrank/stats.hpp"
#include "influxrank/synthetic.hpp"
#include "influxrank/temporal.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace influxrank::cli {

namespace {

using csv::num;

struct Common {
  std::uint64_t seed = 7;
  unsigned threads = 0;
  bool quiet = false;
};

struct DataArgs {
  std::string in;
  std::size_t min_tweets = 20;
  std::int64_t tz_offset = 0;
  std::optional<std::int64_t> window_start;
  std::optional<std::int64_t> window_end;
};

struct Env {
  std::ostream& out;
  std::ostream& err;
  const Common& common;

  void info(const std::string& msg) const {
    if (!common.quiet) err << msg << '\n';
  }
  void warn(const std::string& msg) const { err << "warning: " << msg << '\n'; }
};

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("INFLUXRANK_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return in;
}

IngestResult load_dataset(const DataArgs& args) {
  const fs::path dir(args.in);
  IngestOptions opts;
  opts.min_tweets = args.min_tweets;
  opts.tz_offset = args.tz_offset;
  if (args.window_start || args.window_end) {
    if (!args.window_start || !args.window_end)
      throw ValidationError("--window-start and --window-end must be given together");
    opts.window = ObservationWindow{*args.window_start, *args.window_end};
  } else if (fs::exists(dir / "meta.json")) {
    auto in = open_input(dir / "meta.json");
    const auto meta = nlohmann::json::parse(in);
    if (auto it = meta.find("window"); it != meta.end() && it->is_object())
      opts.window = ObservationWindow{it->at("start").get<std::int64_t>(), it->at("end").get<std::int64_t>()};
  }
  auto users = open_input(dir / "users.jsonl");
  auto edges = open_input(dir / "edges.jsonl");
  auto tweets = open_input(dir / "tweets.jsonl");
  return ingest(users, edges, tweets, opts);
}

LogisticModel load_model(const fs::path& path) {
  auto in = open_input(path);
  return LogisticModel::from_json(nlohmann::json::parse(in));
}

std::string user_id(const Dataset& ds, UserIndex u) { return ds.users()[u].id; }

void write_histogram(std::ostream& o, const Histogram& h) {
  o << "value,count\n";
  for (const auto& [v, c] : h) o << v << ',' << c << '\n';
}

std::string params_string(const RankVector& r) {
  std::vector<std::string> parts;
  if (r.params.c) parts.push_back("c=" + num(*r.params.c));
  if (r.params.gamma) parts.push_back("gamma=" + num(*r.params.gamma));
  if (r.params.p) parts.push_back("p=" + num(*r.params.p));
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? ";" : "") + parts[i];
  return s;
}

void write_ranks(std::ostream& o, const Dataset& ds, const RankVector& r) {
  o << "user_id,score,rank,model,params\n";
  const auto order = rank_order(r.scores);
  const auto params = params_string(r);
  for (std::size_t i = 0; i < order.size(); ++i)
    o << user_id(ds, order[i]) << ',' << num(r.scores[order[i]]) << ',' << i + 1 << ',' << to_string(r.model)
      << ',' << params << '\n';
}

void write_coo(std::ostream& o, const Dataset& ds, const TransitionMatrix& m) {
  o << "friend_id,follower_id,weight\n";
  for (const auto& [row, col, w] : m.coo()) o << user_id(ds, row) << ',' << user_id(ds, col) << ',' << num(w) << '\n';
}

std::string fmt_hour(int h) { return fmt::format("{:02d}", h); }

// Parameter validators -------------------------------------------------------

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          const double v = std::stod(s);
          if (v > 0.0 && v < 1.0) return {};
        } catch (const std::exception&) {
        }
        return "Value " + s + " not in open range (0, 1)";
      },
      "(0,1)");
}

CLI::Validator hour_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        if (s == "all") return {};
        try {
          std::size_t pos = 0;
          const int h = std::stoi(s, &pos);
          if (pos == s.size() && h >= 0 && h < kHours) return {};
        } catch (const std::exception&) {
        }
        return "Value " + s + " is not 'all' or an hour in [0, 23]";
      },
      "all|0..23");
}

CLI::Validator aggregate_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        if (s == "global") return {};
        if (s.rfind("personal:", 0) == 0 && s.size() > 9) return {};
        return "Value " + s + " is not 'global' or 'personal:<user id>'";
      },
      "global|personal:<id>");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

CLI::Validator grid_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          const auto grid = parse_grid(s);
          if (grid.empty()) return "empty c grid";
          for (double c : grid)
            if (!(c >= 0.5 && c <= 1.0)) return "c grid value " + num(c) + " not in range [0.5, 1]";
          return {};
        } catch (const std::exception&) {
          return "c grid must be a comma-separated list of numbers";
        }
      },
      "c1,c2,...");
}

void add_common(CLI::App* sub, Common& common) {
  sub->add_option("--seed", common.seed, "Run seed; every stage derives a named sub-seed from it");
  sub->add_option("--threads", common.threads,
                  "Worker thread cap (0: INFLUXRANK_THREADS or hardware concurrency)");
  sub->add_flag("-q,--quiet", common.quiet, "Suppress progress messages");
}

void add_data(CLI::App* sub, DataArgs& data) {
  sub->add_option("--in", data.in, "Dataset directory with users/edges/tweets .jsonl")->required();
  sub->add_option("--min-tweets", data.min_tweets, "Drop users with fewer tweets in the window");
  sub->add_option("--tz-offset", data.tz_offset, "Seconds added to UTC before hour binning");
  sub->add_option("--window-start", data.window_start, "Observation window start (UTC seconds)");
  sub->add_option("--window-end", data.window_end, "Observation window end (UTC seconds)");
}

// Subcommands ---------------------------------------------------------------

struct SynthArgs {
  std::size_t users = 2000;
  std::size_t topics = 10;
  int days = 14;
  double close_fraction = 0.15;
  double follower_exponent = 2.0;
  std::string out;
};

void run_synth(const Env& env, const SynthArgs& a) {
  GeneratorConfig cfg;
  cfg.n_users = a.users;
  cfg.topics = a.topics;
  cfg.days = a.days;
  cfg.close_fraction = a.close_fraction;
  cfg.follower_exponent = a.follower_exponent;
  cfg.seed = derive_seed(env.common.seed, "synth");
  env.info(fmt::format("generating {} users", a.users));
  const auto data = generate(cfg);
  OutputDir out(a.out);
  out.write("users.jsonl", [&](std::ostream& o) {
    if (data.dataset) write_users(*data.dataset, o);
  });
  out.write("edges.jsonl", [&](std::ostream& o) {
    if (data.dataset) write_edges(*data.dataset, o);
  });
  out.write("tweets.jsonl", [&](std::ostream& o) {
    if (data.dataset) write_tweets(*data.dataset, o);
  });
  out.write("truth.csv", [&](std::ostream& o) { write_truth_csv(data, o); });
  out.write("meta.json", [&](std::ostream& o) { write_meta_json(data, o); });
  out.commit();
  if (data.dataset)
    env.info(fmt::format("{} users, {} edges, {} tweets", data.dataset->num_users(),
                         data.dataset->graph().num_edges(), data.dataset->tweets().size()));
}

void run_ingest(const Env& env, const DataArgs& data, const std::string& out_dir) {
  const auto result = load_dataset(data);
  const auto& ds = result.dataset;
  const auto& r = result.report;
  OutputDir out(out_dir);
  out.write("users.jsonl", [&](std::ostream& o) { write_users(ds, o); });
  out.write("edges.jsonl", [&](std::ostream& o) { write_edges(ds, o); });
  out.write("tweets.jsonl", [&](std::ostream& o) { write_tweets(ds, o); });
  out.write("meta.json", [&](std::ostream& o) {
    nlohmann::json j;
    j["window"] = {{"start", ds.window().start}, {"end", ds.window().end}};
    j["users"] = ds.num_users();
    j["topics"] = ds.topic_count();
    o << j.dump(2) << '\n';
  });
  out.write("ingest_report.json", [&](std::ostream& o) {
    nlohmann::json j = {{"users", ds.num_users()},
                        {"edges", ds.graph().num_edges()},
                        {"tweets", ds.tweets().size()},
                        {"dropped_unknown_author", r.dropped_unknown_author},
                        {"dropped_outside_window", r.dropped_outside_window},
                        {"removed_inactive_users", r.removed_inactive_users},
                        {"removed_edges", r.removed_edges},
                        {"removed_tweets_of_inactive", r.removed_tweets_of_inactive},
                        {"responses_to_unknown_user", r.responses_to_unknown_user}};
    o << j.dump(2) << '\n';
  });
  out.commit();
  env.info(fmt::format("{} users, {} edges, {} tweets", ds.num_users(), ds.graph().num_edges(), ds.tweets().size()));
}

void run_stats(const Env&, const DataArgs& data, const std::string& out_dir) {
  const auto ds = load_dataset(data).dataset;
  const auto rep = degree_stats(ds);
  OutputDir out(out_dir);
  out.write("followers_hist.csv", [&](std::ostream& o) { write_histogram(o, rep.followers); });
  out.write("friends_hist.csv", [&](std::ostream& o) { write_histogram(o, rep.friends); });
  out.write("tweets_hist.csv", [&](std::ostream& o) { write_histogram(o, rep.tweets); });
  out.write("stats_summary.csv", [&](std::ostream& o) {
    o << "metric,value\n";
    o << "users," << ds.num_users() << '\n';
    o << "edges," << ds.graph().num_edges() << '\n';
    o << "tweets," << ds.tweets().size() << '\n';
    const auto corr = rep.follower_friend_correlation;
    o << "follower_friend_correlation," << (corr ? num(*corr) : "") << '\n';
    const auto slope = log_log_slope(rep.followers);
    o << "follower_log_log_slope," << (slope ? num(*slope) : "") << '\n';
  });
  out.commit();
}

void run_activity(const Env&, const DataArgs& data, const std::string& out_dir) {
  const auto ds = load_dataset(data).dataset;
  static constexpr std::array<const char*, 7> kDayNames = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
  const auto hourly = global_activity(ds, Granularity::hour_of_day);
  const auto weekly = global_activity(ds, Granularity::day_of_week);
  const auto heat = global_activity(ds, Granularity::hour_by_day);
  OutputDir out(out_dir);
  out.write("activity_hourly.csv", [&](std::ostream& o) {
    o << "hour,events\n";
    for (int h = 0; h < kHours; ++h) o << h << ',' << num(hourly.at(0, h)) << '\n';
  });
  out.write("activity_weekly.csv", [&](std::ostream& o) {
    o << "day,events\n";
    for (int d = 0; d < kDays; ++d) o << kDayNames[d] << ',' << num(weekly.at(0, d)) << '\n';
  });
  out.write("activity_heatmap.csv", [&](std::ostream& o) {
    o << "day";
    for (int h = 0; h < kHours; ++h) o << ",h" << fmt_hour(h);
    o << '\n';
    for (int d = 0; d < kDays; ++d) {
      o << kDayNames[d];
      for (int h = 0; h < kHours; ++h) o << ',' << num(heat.at(d, h));
      o << '\n';
    }
  });
  out.commit();
}

struct ClusterArgs {
  int k = 0;
  int k_min = 2;
  int k_max = 10;
  int max_shift = 0;
  int max_iters = 100;
};

void run_cluster(const Env& env, const DataArgs& data, const ClusterArgs& a, const std::string& out_dir) {
  if (a.k == 0 && a.k_min > a.k_max) throw ValidationError("--k-min must not exceed --k-max");
  const auto ds = load_dataset(data).dataset;
  const auto profiles = all_profiles(ds);
  std::vector<HourVector> series;
  std::vector<UserIndex> who;
  for (const auto& p : profiles) {
    if (!p.active) {
      env.warn("user " + user_id(ds, p.user) + " has no tweets; excluded from clustering");
      continue;
    }
    series.push_back(p.a_t);
    who.push_back(p.user);
  }
  KscOptions opts;
  opts.max_shift = a.max_shift;
  opts.max_iters = a.max_iters;
  opts.seed = derive_seed(env.common.seed, "cluster");
  std::vector<std::pair<int, double>> asc_curve;
  if (a.k == 0) {
    const auto sel = select_k(series, a.k_min, a.k_max, opts);
    opts.k = sel.best_k;
    asc_curve = sel.asc_per_k;
    env.info(fmt::format("selected k = {}", sel.best_k));
  } else {
    opts.k = a.k;
  }
  const auto result = ksc_cluster(series, opts);
  if (a.k != 0 && result.asc) asc_curve.emplace_back(result.k, *result.asc);

  OutputDir out(out_dir);
  out.write("clusters.csv", [&](std::ostream& o) {
    o << "cluster,proportion";
    for (int h = 0; h < kHours; ++h) o << ",h" << fmt_hour(h);
    o << '\n';
    for (int c = 0; c < result.k; ++c) {
      o << c << ',' << num(result.proportions[c]);
      for (int h = 0; h < kHours; ++h) o << ',' << num(result.centroids[c][h]);
      o << '\n';
    }
  });
  out.write("cluster_asc.csv", [&](std::ostream& o) {
    o << "k,asc\n";
    for (const auto& [k, v] : asc_curve) o << k << ',' << num(v) << '\n';
  });
  out.write("cluster_assignments.csv", [&](std::ostream& o) {
    o << "user_id,cluster\n";
    for (std::size_t i = 0; i < who.size(); ++i) o << user_id(ds, who[i]) << ',' << result.assignment[i] << '\n';
  });
  out.commit();
}

void run_respstats(const Env& env, const DataArgs& data, const std::string& out_dir) {
  const auto ds = load_dataset(data).dataset;
  const auto rep = response_metrics(ds);
  if (rep.excluded_unresolved + rep.excluded_negative_delay > 0)
    env.warn(fmt::format("{} responses without a resolvable original, {} with negative delay excluded",
                         rep.excluded_unresolved, rep.excluded_negative_delay));
  auto write_cdf = [](std::ostream& o, const char* column, const std::vector<CdfPoint>& rt,
                      const std::vector<CdfPoint>& re) {
    o << "kind," << column << ",fraction\n";
    for (const auto& p : rt) o << "retweet," << num(p.value) << ',' << num(p.fraction) << '\n';
    for (const auto& p : re) o << "reply," << num(p.value) << ',' << num(p.fraction) << '\n';
  };
  OutputDir out(out_dir);
  out.write("delay_cdf.csv", [&](std::ostream& o) { write_cdf(o, "delay_seconds", rep.delay_retweet, rep.delay_reply); });
  out.write("trace_cdf.csv", [&](std::ostream& o) { write_cdf(o, "trace", rep.trace_retweet, rep.trace_reply); });
  out.write("response_summary.csv", [&](std::ostream& o) {
    o << "metric,value\n";
    o << "responses," << rep.metrics.size() << '\n';
    o << "excluded_unresolved," << rep.excluded_unresolved << '\n';
    o << "excluded_negative_delay," << rep.excluded_negative_delay << '\n';
  });
  out.commit();
}

void run_features(const Env& env, const DataArgs& data, const std::string& out_dir) {
  const auto ds = load_dataset(data).dataset;
  const FeatureContext ctx(ds);
  const auto all = build_instances(ctx);
  env.info(fmt::format("{} instances, {} positive", all.instances.size(), all.positives));
  const auto balanced = balance_and_normalize(all.instances, derive_seed(env.common.seed, "balance"));
  OutputDir out(out_dir);
  out.write("instances.csv", [&](std::ostream& o) { write_instances_csv(balanced.train.instances, ds, o); });
  out.write("scaler.json", [&](std::ostream& o) { o << balanced.scaler.to_json().dump(2) << '\n'; });
  out.write("instance_summary.csv", [&](std::ostream& o) {
    o << "metric,value\n";
    o << "instances," << all.instances.size() << '\n';
    o << "positives," << all.positives << '\n';
    o << "negatives," << all.negatives << '\n';
    o << "positive_rate," << num(all.positive_rate()) << '\n';
    o << "balanced_positives," << balanced.train.positives << '\n';
    o << "balanced_negatives," << balanced.train.negatives << '\n';
  });
  out.commit();
}

struct TrainArgs {
  std::string instances;
  std::string scaler;
  std::string out;
  int folds = 5;
  double lr = 0.5;
  int epochs = 1000;
  double l2 = 0.0;
};

void run_train(const Env& env, const TrainArgs& a) {
  auto in = open_input(a.instances);
  const auto instances = read_instances_csv(in);
  const auto data = LabeledData::from_instances(instances);
  const fs::path scaler_path =
      a.scaler.empty() ? fs::path(a.instances).parent_path() / "scaler.json" : fs::path(a.scaler);
  MinMaxScaler scaler;
  {
    auto s = open_input(scaler_path);
    scaler = MinMaxScaler::from_json(nlohmann::json::parse(s));
  }
  TrainOptions opts;
  opts.learning_rate = a.lr;
  opts.epochs = a.epochs;
  opts.l2 = a.l2;
  opts.seed = derive_seed(env.common.seed, "cv");
  const auto cv = cross_validate(data, a.folds, opts);
  env.info(fmt::format("cross-validated accuracy {:.4f}", cv.mean_accuracy));
  auto result = train(data, opts);
  auto& model = result.model;
  model.set_scaler(scaler);
  model.metadata().folds = a.folds;
  model.metadata().cv_accuracy = cv.mean_accuracy;

  OutputDir out(a.out);
  out.write("model.json", [&](std::ostream& o) { o << model.to_json().dump(2) << '\n'; });
  out.write("cv_report.csv", [&](std::ostream& o) {
    o << "fold,accuracy\n";
    for (std::size_t f = 0; f < cv.fold_accuracy.size(); ++f) o << f << ',' << num(cv.fold_accuracy[f]) << '\n';
    o << "mean," << num(cv.mean_accuracy) << '\n';
  });
  out.write("feature_ranks.csv", [&](std::ostream& o) {
    o << "rank,feature,weight\n";
    const auto ranks = rank_features(model);
    for (std::size_t i = 0; i < ranks.size(); ++i) o << i + 1 << ',' << ranks[i].name << ',' << num(ranks[i].weight) << '\n';
  });
  out.commit();
}

struct RankArgs {
  std::string model = "tir";
  std::string model_file;
  double c = 0.85;
  double gamma = 0.85;
  double p = 0.05;
  std::string aggregate = "global";
  std::string hour = "all";
  bool dump_matrix = false;
  std::string name = "ranks.csv";
  std::string out;
};

fs::path model_path(const DataArgs& data, const std::string& flag) {
  return flag.empty() ? fs::path(data.in) / "model.json" : fs::path(flag);
}

std::optional<UserIndex> personal_user(const Dataset& ds, const std::string& aggregate) {
  if (aggregate == "global") return std::nullopt;
  return ds.user_index(aggregate.substr(9));
}

void run_rank(const Env& env, const DataArgs& data, const RankArgs& a) {
  const auto kind = *parse_model_kind(a.model);
  const auto ds = load_dataset(data).dataset;
  const FeatureContext ctx(ds);
  const auto who = personal_user(ds, a.aggregate);
  const unsigned threads = resolve_threads(env.common.threads);
  OutputDir out(a.out);
  RankVector result;

  switch (kind) {
    case ModelKind::tir: {
      const auto model = load_model(model_path(data, a.model_file));
      const auto base = tir_base_weights(ctx, ds.graph(), model);
      TirOptions opts;
      opts.penalty = Penalty(a.c);
      opts.gamma = a.gamma;
      opts.threads = threads;
      std::vector<int> hours;
      if (a.hour == "all") {
        HourVector w = global_hour_weights(ds);
        if (who && ctx.profile(*who).active) w = ctx.profile(*who).a_t;
        result = tir_rank(base, opts, w);
        for (int h = 0; h < kHours; ++h)
          if (w[h] != 0.0) hours.push_back(h);
      } else {
        const int h = std::stoi(a.hour);
        auto pr = power_iterate(tir_matrix(base, h, opts.penalty, opts.gamma), opts.power);
        result.scores = std::move(pr.scores);
        result.hour = h;
        result.iterations = pr.iterations;
        result.params.c = a.c;
        result.params.gamma = a.gamma;
        hours.push_back(h);
      }
      if (a.dump_matrix)
        for (int h : hours)
          out.write(fmt::format("matrix_tir_h{}.csv", fmt_hour(h)),
                    [&](std::ostream& o) { write_coo(o, ds, tir_matrix(base, h, opts.penalty, opts.gamma)); });
      break;
    }
    case ModelKind::tunkrank: {
      TunkRankOptions opts;
      opts.p = a.p;
      result = tunkrank(ds.graph(), opts);
      break;
    }
    case ModelKind::twitterrank: {
      TwitterRankOptions opts;
      opts.gamma = a.gamma;
      opts.threads = threads;
      const auto w = who ? ds.users()[*who].topics : global_topic_weights(ctx);
      result = twitterrank(ctx, ds.graph(), w, opts);
      if (a.dump_matrix)
        for (std::size_t t = 0; t < ds.topic_count(); ++t)
          out.write(fmt::format("matrix_twitterrank_k{:02d}.csv", t),
                    [&](std::ostream& o) { write_coo(o, ds, twitterrank_matrix(ctx, ds.graph(), t, a.gamma)); });
      break;
    }
  }
  out.write(a.name, [&](std::ostream& o) { write_ranks(o, ds, result); });
  out.commit();
  env.info(fmt::format("ranked {} users with {}", ds.num_users(), a.model));
}

struct CompareArgs {
  std::string model_file;
  double gamma = 0.85;
  double p = 0.05;
  std::size_t top = 10;
  std::string out;
};

void run_compare(const Env& env, const DataArgs& data, const CompareArgs& a) {
  const auto ds = load_dataset(data).dataset;
  const FeatureContext ctx(ds);
  const auto model = load_model(model_path(data, a.model_file));
  const unsigned threads = resolve_threads(env.common.threads);
  const auto base = tir_base_weights(ctx, ds.graph(), model);
  const auto hour_w = global_hour_weights(ds);

  std::vector<std::pair<std::string, RankVector>> models;
  for (double c : {0.5, 0.85, 1.0}) {
    TirOptions opts;
    opts.penalty = Penalty(c);
    opts.gamma = a.gamma;
    opts.threads = threads;
    models.emplace_back("tir_c" + num(c), tir_rank(base, opts, hour_w));
  }
  TwitterRankOptions tw;
  tw.gamma = a.gamma;
  tw.threads = threads;
  models.emplace_back("twitterrank", twitterrank(ctx, ds.graph(), global_topic_weights(ctx), tw));
  TunkRankOptions tk;
  tk.p = a.p;
  models.emplace_back("tunkrank", tunkrank(ds.graph(), tk));

  OutputDir out(a.out);
  out.write("tau_matrix.csv", [&](std::ostream& o) {
    o << "model";
    for (const auto& m : models) o << ',' << m.first;
    o << '\n';
    for (const auto& row : models) {
      o << row.first;
      for (const auto& col : models) o << ',' << num(kendall_tau(row.second.scores, col.second.scores));
      o << '\n';
    }
  });
  out.write("top_k.csv", [&](std::ostream& o) {
    o << "rank";
    for (const auto& m : models) o << ',' << m.first;
    o << '\n';
    std::vector<std::vector<UserIndex>> orders;
    for (const auto& m : models) orders.push_back(rank_order(m.second.scores));
    const std::size_t k = std::min(a.top, ds.num_users());
    for (std::size_t i = 0; i < k; ++i) {
      o << i + 1;
      for (const auto& ord : orders) o << ',' << user_id(ds, ord[i]);
      o << '\n';
    }
  });
  out.commit();
}

struct RecommendArgs {
  std::string model_file;
  std::string c_grid;
  double gamma = 0.85;
  double p = 0.05;
  std::size_t sample = 30;
  std::string scenarios;
  std::string out;
};

void run_recommend(const Env& env, const DataArgs& data, const RecommendArgs& a) {
  const auto grid = a.c_grid.empty() ? default_c_grid() : parse_grid(a.c_grid);
  const auto ds = load_dataset(data).dataset;
  const FeatureContext ctx(ds);
  const auto model = load_model(model_path(data, a.model_file));
  const unsigned threads = resolve_threads(env.common.threads);

  LinkSetOptions lopts;
  lopts.sample_size = a.sample;
  auto sets = build_link_sets(ctx, derive_seed(env.common.seed, "links"), lopts);
  if (!a.scenarios.empty()) {
    std::vector<LinkSet> keep;
    std::stringstream ss(a.scenarios);
    std::string tag;
    while (std::getline(ss, tag, ',')) {
      const auto s = parse_scenario(tag);
      if (!s) throw ValidationError("unknown scenario " + tag);
      for (const auto& set : sets)
        if (set.scenario == *s) keep.push_back(set);
    }
    sets = std::move(keep);
  }
  for (const auto& set : sets) {
    if (set.links.empty())
      env.warn(fmt::format("{}: empty pool, scenario skipped", scenario_tag(set.scenario)));
    else if (set.flagged)
      env.warn(fmt::format("{}: only {} eligible links", scenario_tag(set.scenario), set.pool_size));
  }

  std::vector<ModelConfig> configs;
  for (double c : grid) {
    ModelConfig m;
    m.kind = ModelKind::tir;
    m.penalty = Penalty(c);
    m.gamma = a.gamma;
    configs.push_back(m);
  }
  ModelConfig tw;
  tw.kind = ModelKind::twitterrank;
  tw.gamma = a.gamma;
  configs.push_back(tw);
  ModelConfig tk;
  tk.kind = ModelKind::tunkrank;
  tk.p = a.p;
  configs.push_back(tk);

  const Evaluator evaluator(ctx, model);
  env.info(fmt::format("evaluating {} link sets on {} thread(s)", sets.size(), threads));
  const auto report = run_scenarios(evaluator, sets, configs, derive_seed(env.common.seed, "candidates"), threads);

  auto c_field = [](const ModelConfig& m) {
    return m.kind == ModelKind::tir && m.penalty ? num(m.penalty->value()) : std::string();
  };
  OutputDir out(a.out);
  out.write("scenarios.csv", [&](std::ostream& o) {
    o << "scenario,model,c,mean_Q,n_links\n";
    for (const auto& r : report.results) {
      if (r.q.empty()) continue;
      o << scenario_tag(r.scenario) << ',' << to_string(r.model.kind) << ',' << c_field(r.model) << ','
        << num(r.mean_q) << ',' << r.q.size() << '\n';
    }
  });
  out.write("link_sets.csv", [&](std::ostream& o) {
    o << "scenario,criterion,selection,pool_size,flagged,follower_id,friend_id\n";
    for (const auto& set : report.link_sets)
      for (const auto& l : set.links)
        o << scenario_tag(set.scenario) << ',' << set.criterion << ',' << set.selection << ',' << set.pool_size
          << ',' << (set.flagged ? 1 : 0) << ',' << user_id(ds, l.follower) << ',' << user_id(ds, l.friend_id)
          << '\n';
  });
  out.write("q_values.csv", [&](std::ostream& o) {
    o << "scenario,model,c,follower_id,friend_id,Q\n";
    for (const auto& r : report.results) {
      const auto& links = std::find_if(report.link_sets.begin(), report.link_sets.end(),
                                       [&](const LinkSet& s) { return s.scenario == r.scenario; })
                              ->links;
      for (std::size_t i = 0; i < r.q.size(); ++i)
        o << scenario_tag(r.scenario) << ',' << to_string(r.model.kind) << ',' << c_field(r.model) << ','
          << user_id(ds, links[i].follower) << ',' << user_id(ds, links[i].friend_id) << ',' << r.q[i] << '\n';
    }
  });
  out.commit();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal influence ranking toolkit: synthetic data, activity analysis, response "
               "prediction, influence ranking and recommendation evaluation."};
  app.name("influxrank");
  app.require_subcommand(1);

  Common common;
  DataArgs data;
  std::string out_dir;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with planted ground truth");
  synth_cmd->add_option("--users", synth.users, "Number of users")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--topics", synth.topics, "Topic count K");
  synth_cmd->add_option("--days", synth.days, "Observation days")->check(CLI::Range(1, 3650));
  synth_cmd->add_option("--close-fraction", synth.close_fraction, "Mean share of latent close edges")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--follower-exponent", synth.follower_exponent, "Follower-count power-law exponent")
      ->check(CLI::Range(1.0001, 10.0));
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  add_common(synth_cmd, common);

  auto* ingest_cmd = app.add_subcommand("ingest", "Validate a dataset and write its normalized form");
  add_data(ingest_cmd, data);
  ingest_cmd->add_option("--out", out_dir, "Output directory (must differ from --in)")->required();
  add_common(ingest_cmd, common);

  auto* stats_cmd = app.add_subcommand("stats", "Degree and tweet-count distributions");
  auto* activity_cmd = app.add_subcommand("activity", "Global hourly, weekly and day-by-hour activity");
  auto* respstats_cmd = app.add_subcommand("respstats", "Delay and trace distributions of responses");
  auto* features_cmd = app.add_subcommand("features", "Balanced, normalized response instances");
  for (auto* sub : {stats_cmd, activity_cmd, respstats_cmd, features_cmd}) {
    add_data(sub, data);
    sub->add_option("--out", out_dir, "Output directory")->required();
    add_common(sub, common);
  }

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "K-SC clustering of user activity shapes");
  add_data(cluster_cmd, data);
  cluster_cmd->add_option("--k", cluster.k, "Cluster count (0 selects by silhouette)")->check(CLI::Range(0, 1000));
  cluster_cmd->add_option("--k-min", cluster.k_min, "Smallest k tried")->check(CLI::Range(2, 10));
  cluster_cmd->add_option("--k-max", cluster.k_max, "Largest k tried")->check(CLI::Range(2, 10));
  cluster_cmd->add_option("--max-shift", cluster.max_shift, "Largest cyclic shift in hours")->check(CLI::Range(0, 23));
  cluster_cmd->add_option("--max-iters", cluster.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_common(cluster_cmd, common);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Fit the logistic response model with cross-validation");
  train_cmd->add_option("--instances", train_args.instances, "instances.csv from the features step")->required();
  train_cmd->add_option("--scaler", train_args.scaler, "scaler.json (default: next to the instances)");
  train_cmd->add_option("--folds", train_args.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  train_cmd->add_option("--lr", train_args.lr, "Learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_args.epochs, "Gradient-descent epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--l2", train_args.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  add_common(train_cmd, common);

  RankArgs rank;
  auto* rank_cmd = app.add_subcommand("rank", "Influence ranking with TIR, TunkRank or TwitterRank");
  add_data(rank_cmd, data);
  rank_cmd->add_option("--model", rank.model, "tir, tunkrank or twitterrank")
      ->check(CLI::IsMember({"tir", "tunkrank", "twitterrank"}));
  rank_cmd->add_option("--model-file", rank.model_file, "model.json for TIR (default: <in>/model.json)");
  rank_cmd->add_option("--c", rank.c, "Penalty factor for close friends")->check(CLI::Range(0.5, 1.0));
  rank_cmd->add_option("--gamma", rank.gamma, "Damping factor")->check(open_unit_interval());
  rank_cmd->add_option("--p", rank.p, "TunkRank retweet probability")->check(CLI::Range(0.0, 1.0));
  rank_cmd->add_option("--aggregate", rank.aggregate, "global or personal:<user id>")->check(aggregate_validator());
  rank_cmd->add_option("--hour", rank.hour, "Hour 0..23 or all (aggregated)")->check(hour_validator());
  rank_cmd->add_flag("--dump-matrix", rank.dump_matrix, "Write transition matrices as COO CSV");
  rank_cmd->add_option("--name", rank.name, "Rank file name");
  rank_cmd->add_option("--out", rank.out, "Output directory")->required();
  add_common(rank_cmd, common);

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Kendall tau and top-k tables across models");
  add_data(compare_cmd, data);
  compare_cmd->add_option("--model-file", compare.model_file, "model.json (default: <in>/model.json)");
  compare_cmd->add_option("--gamma", compare.gamma, "Damping factor")->check(open_unit_interval());
  compare_cmd->add_option("--p", compare.p, "TunkRank retweet probability")->check(CLI::Range(0.0, 1.0));
  compare_cmd->add_option("--top", compare.top, "Rows in top_k.csv")->check(CLI::PositiveNumber);
  compare_cmd->add_option("--out", compare.out, "Output directory")->required();
  add_common(compare_cmd, common);

  RecommendArgs rec;
  auto* rec_cmd = app.add_subcommand("recommend", "Friend-recommendation evaluation over the eight link scenarios");
  add_data(rec_cmd, data);
  rec_cmd->add_option("--model-file", rec.model_file, "model.json (default: <in>/model.json)");
  rec_cmd->add_option("--c-grid", rec.c_grid, "Penalty factors for TIR (default 0.5,0.6,...,1.0 and 0.95..0.99)")
      ->check(grid_validator());
  rec_cmd->add_option("--gamma", rec.gamma, "Damping factor")->check(open_unit_interval());
  rec_cmd->add_option("--p", rec.p, "TunkRank retweet probability")->check(CLI::Range(0.0, 1.0));
  rec_cmd->add_option("--sample", rec.sample, "Links sampled per scenario")->check(CLI::PositiveNumber);
  rec_cmd->add_option("--scenarios", rec.scenarios, "Comma-separated subset, e.g. L_fh,L_fl");
  rec_cmd->add_option("--out", rec.out, "Output directory")->required();
  add_common(rec_cmd, common);

  std::vector<std::string> argv_store{"influxrank"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (ingest_cmd->parsed()) {
      std::error_code ec;
      if (fs::exists(out_dir) && fs::equivalent(fs::path(data.in), fs::path(out_dir), ec))
        throw CLI::ValidationError("--out", "ingest output directory must differ from --in");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const Env env{out, err, common};
  try {
    if (synth_cmd->parsed()) run_synth(env, synth);
    else if (ingest_cmd->parsed()) run_ingest(env, data, out_dir);
    else if (stats_cmd->parsed()) run_stats(env, data, out_dir);
    else if (activity_cmd->parsed()) run_activity(env, data, out_dir);
    else if (cluster_cmd->parsed()) run_cluster(env, data, cluster, out_dir);
    else if (respstats_cmd->parsed()) run_respstats(env, data, out_dir);
    else if (features_cmd->parsed()) run_features(env, data, out_dir);
    else if (train_cmd->parsed()) run_train(env, train_args);
    else if (rank_cmd->parsed()) run_rank(env, data, rank);
    else if (compare_cmd->parsed()) run_compare(env, data, compare);
    else if (rec_cmd->parsed()) run_recommend(env, data, rec);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace influxrank::cli
