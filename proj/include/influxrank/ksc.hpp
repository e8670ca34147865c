#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "influxrank/temporal.hpp"

namespace influxrank {

/// K-Spectral Centroid clustering of 24-bin activity shapes.
///
/// The distance between a series x and a centroid c is
///   d(x, c) = min_{q, a} ||x - a * shift(c, q)|| / ||x||
/// over cyclic shifts |q| <= max_shift and real scale a (closed form
/// a = <x, c_q> / ||c_q||^2). Centroids are unit vectors: the eigenvector with
/// the smallest eigenvalue of sum_i (I - x_i x_i^T / ||x_i||^2) over the
/// members, each aligned by its best shift.
struct KscOptions {
  int k = 3;
  int max_shift = 0;  // 0 keeps clock hours absolute; >= 12 means every cyclic shift
  std::uint64_t seed = 0;
  int max_iters = 100;
};

struct ShapeDistance {
  double distance = 0.0;
  int shift = 0;  // applied to the second argument
  double scale = 0.0;
};

/// Cyclic shift: out[h] = x[(h - q) mod 24].
HourVector cyclic_shift(const HourVector& x, int q);

/// Throws std::invalid_argument when x is all zero.
ShapeDistance ksc_distance(const HourVector& x, const HourVector& c, int max_shift);

struct ClusterResult {
  int k = 0;
  std::vector<HourVector> centroids;
  /// Per input series; -1 for excluded all-zero series.
  std::vector<int> assignment;
  std::vector<double> proportions;
  /// Average silhouette coefficient; absent for k = 1.
  std::optional<double> asc;
  /// Sum of squared distances after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
  std::vector<std::size_t> excluded;
};

/// Throws ValidationError if k < 1, max_shift outside [0, 23] or k exceeds the
/// number of non-zero series.
ClusterResult ksc_cluster(std::span<const HourVector> series, const KscOptions& options);

/// Clusters the a_t vectors of the profiles; inactive profiles are excluded.
ClusterResult ksc_cluster(std::span<const HourlyProfile> profiles, const KscOptions& options);

/// Average silhouette over the assigned series using the K-SC distance.
/// Clusters with one member score 0; fewer than two non-empty clusters give 0.
double average_silhouette(std::span<const HourVector> series, std::span<const int> assignment,
                          int k, int max_shift);

struct KSelection {
  int best_k = 0;
  std::vector<std::pair<int, double>> asc_per_k;
};

/// Runs ksc_cluster for every k in [k_min, k_max] (within [2, 10]) and keeps the
/// highest ASC; ties go to the smaller k.
KSelection select_k(std::span<const HourVector> series, int k_min, int k_max,
                    const KscOptions& base);

}  // namespace influxrank
