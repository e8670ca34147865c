#include "influxrank/response_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "influxrank/hash.hpp"

namespace influxrank {

namespace {

double linear_term(double w0, std::span<const double> w, std::span<const double> x) {
  double z = w0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
  return z;
}

double probability_from_z(double z) {
  // 1 / (1 + e^z), evaluated without overflow and kept inside (0, 1).
  double p;
  if (z > 0.0) {
    const double e = std::exp(-z);
    p = e / (1.0 + e);
  } else {
    p = 1.0 / (1.0 + std::exp(z));
  }
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

void LabeledData::push_back(std::span<const double> features, bool label, std::uint64_t key) {
  if (dim == 0 && y.empty()) dim = features.size();
  if (features.size() != dim) throw std::invalid_argument("LabeledData: dimension mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label ? 1 : 0);
  keys.push_back(key);
}

LabeledData LabeledData::from_instances(std::span<const ResponseInstance> instances) {
  LabeledData d;
  d.dim = kFeatureCount;
  d.x.reserve(instances.size() * kFeatureCount);
  for (const auto& inst : instances) d.push_back(inst.features.values, inst.response, inst.key);
  return d;
}

double response_probability(double w0, std::span<const double> w, std::span<const double> x) {
  if (w.size() != x.size())
    throw std::invalid_argument("feature vector has " + std::to_string(x.size()) +
                                " entries, model expects " + std::to_string(w.size()));
  return probability_from_z(linear_term(w0, w, x));
}

LogisticModel::LogisticModel(double w0, std::vector<double> w) : w0_(w0), w_(std::move(w)) {
  if (w_.size() == kFeatureCount)
    for (std::size_t i = 0; i < kFeatureCount; ++i) names_.emplace_back(feature_name(i));
  else
    for (std::size_t i = 0; i < w_.size(); ++i) names_.push_back("f" + std::to_string(i + 1));
}

void LogisticModel::set_parameters(double w0, std::span<const double> w) {
  if (w.size() != w_.size()) throw std::invalid_argument("set_parameters: dimension mismatch");
  w0_ = w0;
  std::copy(w.begin(), w.end(), w_.begin());
}

double LogisticModel::predict(std::span<const double> normalized) const {
  return response_probability(w0_, w_, normalized);
}

double LogisticModel::predict_raw(const FeatureVector& raw) const {
  return predict(scaler_.transform(raw));
}

LogisticModel LogisticModel::negated() const {
  LogisticModel m = *this;
  m.w0_ = -w0_;
  for (double& v : m.w_) v = -v;
  return m;
}

nlohmann::json LogisticModel::to_json() const {
  nlohmann::json meta = {{"seed", meta_.seed},
                         {"epochs", meta_.epochs},
                         {"learning_rate", meta_.learning_rate},
                         {"l2", meta_.l2},
                         {"folds", meta_.folds},
                         {"train_accuracy", meta_.train_accuracy}};
  meta["cv_accuracy"] = meta_.cv_accuracy ? nlohmann::json(*meta_.cv_accuracy) : nlohmann::json();
  return {{"w0", w0_},
          {"w", w_},
          {"features", names_},
          {"scaler", scaler_.to_json()},
          {"metadata", meta}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  LogisticModel m(j.at("w0").get<double>(), j.at("w").get<std::vector<double>>());
  if (auto it = j.find("features"); it != j.end()) m.names_ = it->get<std::vector<std::string>>();
  if (m.names_.size() != m.w_.size()) throw ValidationError("model.json: feature name count mismatch");
  if (auto it = j.find("scaler"); it != j.end()) m.scaler_ = MinMaxScaler::from_json(*it);
  if (auto it = j.find("metadata"); it != j.end()) {
    const auto& meta = *it;
    m.meta_.seed = meta.value("seed", std::uint64_t{0});
    m.meta_.epochs = meta.value("epochs", 0);
    m.meta_.learning_rate = meta.value("learning_rate", 0.0);
    m.meta_.l2 = meta.value("l2", 0.0);
    m.meta_.folds = meta.value("folds", 0);
    m.meta_.train_accuracy = meta.value("train_accuracy", 0.0);
    if (auto cv = meta.find("cv_accuracy"); cv != meta.end() && !cv->is_null())
      m.meta_.cv_accuracy = cv->get<double>();
  }
  return m;
}

double log_loss(const LogisticModel& model, const LabeledData& data, double l2) {
  if (data.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = linear_term(model.intercept(), model.weights(), data.row(i));
    total += data.y[i] ? softplus(z) : softplus(-z);
  }
  double reg = 0.0;
  for (double w : model.weights()) reg += w * w;
  return total / static_cast<double>(data.size()) + 0.5 * l2 * reg;
}

std::vector<double> log_loss_gradient(const LogisticModel& model, const LabeledData& data,
                                      double l2) {
  const std::size_t d = model.dim();
  std::vector<double> g(d + 1, 0.0);
  if (data.size() == 0) return g;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    const double p = probability_from_z(linear_term(model.intercept(), model.weights(), x));
    // d(loss)/dz = y - p under P = 1 / (1 + e^z).
    const double r = static_cast<double>(data.y[i]) - p;
    g[0] += r;
    for (std::size_t j = 0; j < d; ++j) g[j + 1] += r * x[j];
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  for (double& v : g) v *= inv;
  for (std::size_t j = 0; j < d; ++j) g[j + 1] += l2 * model.weights()[j];
  return g;
}

double accuracy(const LogisticModel& model, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool predicted = model.predict(data.row(i)) >= 0.5;
    correct += predicted == (data.y[i] != 0);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const LabeledData& data, const TrainOptions& options) {
  const auto positives = std::count(data.y.begin(), data.y.end(), std::uint8_t{1});
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(data.size()))
    throw ValidationError("training data must contain both classes");
  if (!(options.learning_rate > 0.0) || options.epochs < 0)
    throw ValidationError("learning rate must be positive and epochs non-negative");

  TrainResult out;
  out.model = LogisticModel(0.0, std::vector<double>(data.dim, 0.0));
  std::vector<double> w(data.dim, 0.0);
  double w0 = 0.0;
  for (int epoch = 0; epoch <= options.epochs; ++epoch) {
    const double loss = log_loss(out.model, data, options.l2);
    if (!std::isfinite(loss))
      throw ConvergenceError("training loss became non-finite at epoch " + std::to_string(epoch),
                             loss, epoch);
    out.loss_history.push_back(loss);
    if (epoch == options.epochs) break;
    const auto g = log_loss_gradient(out.model, data, options.l2);
    w0 -= options.learning_rate * g[0];
    for (std::size_t j = 0; j < data.dim; ++j) w[j] -= options.learning_rate * g[j + 1];
    if (!std::isfinite(w0) || !std::all_of(w.begin(), w.end(), [](double v) { return std::isfinite(v); }))
      throw ConvergenceError("weights became non-finite at epoch " + std::to_string(epoch + 1),
                             loss, epoch + 1);
    out.model.set_parameters(w0, w);
  }
  auto& meta = out.model.metadata();
  meta.seed = options.seed;
  meta.epochs = options.epochs;
  meta.learning_rate = options.learning_rate;
  meta.l2 = options.l2;
  meta.train_accuracy = accuracy(out.model, data);
  return out;
}

CvReport cross_validate(const LabeledData& data, int folds, const TrainOptions& options) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  const std::size_t n = data.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto mixed = [&](std::size_t i) { return splitmix64(data.keys[i] ^ options.seed); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = mixed(a), hb = mixed(b);
    if (ha != hb) return ha < hb;
    return data.keys[a] < data.keys[b];
  });

  std::vector<int> fold_of(n, 0);
  std::size_t seen_pos = 0, seen_neg = 0;
  for (std::size_t i : order) {
    auto& counter = data.y[i] ? seen_pos : seen_neg;
    fold_of[i] = static_cast<int>(counter % static_cast<std::size_t>(folds));
    ++counter;
  }

  CvReport report;
  for (int f = 0; f < folds; ++f) {
    LabeledData train_part, test_part;
    train_part.dim = test_part.dim = data.dim;
    for (std::size_t i : order) {
      auto& target = fold_of[i] == f ? test_part : train_part;
      target.push_back(data.row(i), data.y[i] != 0, data.keys[i]);
    }
    const auto test_pos = std::count(test_part.y.begin(), test_part.y.end(), std::uint8_t{1});
    if (test_pos == 0 || test_pos == static_cast<std::ptrdiff_t>(test_part.size()))
      throw ValidationError("fold " + std::to_string(f) + " lacks one of the classes");
    const auto model = train(train_part, options).model;
    report.fold_accuracy.push_back(accuracy(model, test_part));
  }
  report.mean_accuracy =
      std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / folds;
  return report;
}

std::vector<FeatureWeight> rank_features(const LogisticModel& model) {
  std::vector<FeatureWeight> out;
  for (std::size_t i = 0; i < model.dim(); ++i)
    out.push_back({i, model.feature_names().at(i), model.weights()[i]});
  std::stable_sort(out.begin(), out.end(), [](const FeatureWeight& a, const FeatureWeight& b) {
    return std::abs(a.weight) > std::abs(b.weight);
  });
  return out;
}

}  // namespace influxrank
