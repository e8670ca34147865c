#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "influxrank/features.hpp"

namespace influxrank {

/// Dense labeled design matrix (row-major) with a stable key per row.
struct LabeledData {
  std::size_t dim = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> y;  // 1 = response
  std::vector<std::uint64_t> keys;

  std::size_t size() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * dim, dim}; }
  void push_back(std::span<const double> features, bool label, std::uint64_t key);

  static LabeledData from_instances(std::span<const ResponseInstance> instances);
};

/// P(response) = 1 / (1 + exp(w0 + sum_i w_i x_i)).
/// Larger w.x means a lower probability; weights keep that sign convention.
/// Finite inputs map strictly inside (0, 1).
double response_probability(double w0, std::span<const double> w, std::span<const double> x);

struct TrainOptions {
  double learning_rate = 0.5;
  int epochs = 1000;
  std::uint64_t seed = 0;
  double l2 = 0.0;
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  int folds = 0;
  double train_accuracy = 0.0;
  std::optional<double> cv_accuracy;

  bool operator==(const TrainingMetadata&) const = default;
};

class LogisticModel {
 public:
  LogisticModel() = default;
  LogisticModel(double w0, std::vector<double> w);

  double intercept() const noexcept { return w0_; }
  const std::vector<double>& weights() const noexcept { return w_; }
  std::size_t dim() const noexcept { return w_.size(); }
  /// Throws std::invalid_argument if w has a different dimension.
  void set_parameters(double w0, std::span<const double> w);

  /// Throws std::invalid_argument on dimension mismatch.
  double predict(std::span<const double> normalized) const;
  double predict(const FeatureVector& normalized) const { return predict(normalized.values); }
  /// Scales (and clamps) raw features with the attached scaler first.
  double predict_raw(const FeatureVector& raw) const;

  /// Opposite signs on every weight: predict(x) + negated().predict(x) == 1.
  LogisticModel negated() const;

  const MinMaxScaler& scaler() const noexcept { return scaler_; }
  void set_scaler(const MinMaxScaler& s) { scaler_ = s; }
  std::vector<std::string>& feature_names() noexcept { return names_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }
  TrainingMetadata& metadata() noexcept { return meta_; }
  const TrainingMetadata& metadata() const noexcept { return meta_; }

  nlohmann::json to_json() const;
  static LogisticModel from_json(const nlohmann::json& j);

  bool operator==(const LogisticModel&) const = default;

 private:
  double w0_ = 0.0;
  std::vector<double> w_;
  MinMaxScaler scaler_;
  std::vector<std::string> names_;
  TrainingMetadata meta_;
};

/// Mean log loss plus 0.5 * l2 * ||w||^2.
double log_loss(const LogisticModel& model, const LabeledData& data, double l2 = 0.0);

/// Gradient of log_loss; element 0 is d/dw0, then d/dw_i.
std::vector<double> log_loss_gradient(const LogisticModel& model, const LabeledData& data,
                                      double l2 = 0.0);

double accuracy(const LogisticModel& model, const LabeledData& data);

struct TrainResult {
  LogisticModel model;
  std::vector<double> loss_history;  // loss before each epoch, then the final loss
};

/// Full-batch gradient descent from zero weights. Throws ConvergenceError naming
/// the epoch when the loss becomes non-finite, ValidationError on one-class data.
TrainResult train(const LabeledData& data, const TrainOptions& options);

struct CvReport {
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

/// Stratified k-fold cross-validation. Folds are derived from (seed, row key),
/// so the result is independent of row order. Throws ValidationError if
/// folds < 2 or a test fold lacks either class.
CvReport cross_validate(const LabeledData& data, int folds, const TrainOptions& options);

struct FeatureWeight {
  std::size_t index = 0;
  std::string name;
  double weight = 0.0;
};

/// Descending |weight|; equal magnitudes keep feature-index order.
std::vector<FeatureWeight> rank_features(const LogisticModel& model);

}  // namespace influxrank
