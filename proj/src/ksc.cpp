#include "influxrank/ksc.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace influxrank {

namespace {

double dot(const HourVector& a, const HourVector& b) {
  double s = 0.0;
  for (int h = 0; h < kHours; ++h) s += a[h] * b[h];
  return s;
}

double norm(const HourVector& a) { return std::sqrt(dot(a, a)); }

bool is_zero(const HourVector& a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; });
}

// Shift offsets in search order 0, 1, -1, 2, -2, ... without repeating residues.
std::vector<int> shift_candidates(int max_shift) {
  std::vector<int> out{0};
  if (max_shift >= kHours / 2) {
    for (int q = 1; q < kHours; ++q) out.push_back(q);
    return out;
  }
  for (int s = 1; s <= max_shift; ++s) {
    out.push_back(s);
    out.push_back(-s);
  }
  return out;
}

HourVector normalized(const HourVector& x) {
  HourVector out = x;
  const double n = norm(x);
  for (double& v : out) v /= n;
  return out;
}

}  // namespace

HourVector cyclic_shift(const HourVector& x, int q) {
  HourVector out{};
  for (int h = 0; h < kHours; ++h) {
    int src = (h - q) % kHours;
    if (src < 0) src += kHours;
    out[h] = x[src];
  }
  return out;
}

ShapeDistance ksc_distance(const HourVector& x, const HourVector& c, int max_shift) {
  const double xn = norm(x);
  if (xn == 0.0) throw std::invalid_argument("ksc_distance: zero series");
  ShapeDistance best{std::numeric_limits<double>::infinity(), 0, 0.0};
  for (int q : shift_candidates(max_shift)) {
    const HourVector cq = cyclic_shift(c, q);
    const double cc = dot(cq, cq);
    const double a = cc > 0.0 ? dot(x, cq) / cc : 0.0;
    double r = 0.0;
    for (int h = 0; h < kHours; ++h) {
      const double e = x[h] - a * cq[h];
      r += e * e;
    }
    const double d = std::sqrt(r) / xn;
    if (d < best.distance) best = {d, q, a};
  }
  return best;
}

double average_silhouette(std::span<const HourVector> series, std::span<const int> assignment,
                          int k, int max_shift) {
  std::vector<std::size_t> members;
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (assignment[i] < 0) continue;
    members.push_back(i);
    ++sizes[static_cast<std::size_t>(assignment[i])];
  }
  const auto nonempty = std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; });
  if (nonempty < 2 || members.empty()) return 0.0;

  const std::size_t m = members.size();
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      const double d = ksc_distance(series[members[a]], series[members[b]], max_shift).distance;
      dist[a * m + b] = dist[b * m + a] = d;
    }

  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (std::size_t a = 0; a < m; ++a) {
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t b = 0; b < m; ++b)
      sums[static_cast<std::size_t>(assignment[members[b]])] += dist[a * m + b];
    const auto own = static_cast<std::size_t>(assignment[members[a]]);
    if (sizes[own] <= 1) continue;  // singleton scores 0
    const double intra = sums[own] / static_cast<double>(sizes[own] - 1);
    double inter = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own && sizes[c] > 0) inter = std::min(inter, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(intra, inter);
    if (denom > 0.0) total += (inter - intra) / denom;
  }
  return total / static_cast<double>(m);
}

ClusterResult ksc_cluster(std::span<const HourVector> series, const KscOptions& options) {
  if (options.k < 1) throw ValidationError("k must be >= 1");
  if (options.max_shift < 0 || options.max_shift > 23)
    throw ValidationError("max_shift must be in [0, 23]");

  ClusterResult result;
  result.k = options.k;
  result.assignment.assign(series.size(), -1);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (is_zero(series[i]))
      result.excluded.push_back(i);
    else
      active.push_back(i);
  }
  const auto k = static_cast<std::size_t>(options.k);
  if (k > active.size())
    throw ValidationError("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(active.size()) + " non-zero profiles");

  // Seeded farthest-point initialization.
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng() % active.size())};
  std::vector<double> nearest(active.size(), std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const HourVector& last = series[active[chosen.back()]];
    for (std::size_t a = 0; a < active.size(); ++a)
      nearest[a] = std::min(nearest[a], ksc_distance(series[active[a]], last, options.max_shift).distance);
    std::size_t pick = active.size();
    double best = -1.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (std::find(chosen.begin(), chosen.end(), a) != chosen.end()) continue;
      if (nearest[a] > best) {
        best = nearest[a];
        pick = a;
      }
    }
    chosen.push_back(pick);
  }
  for (std::size_t c : chosen) result.centroids.push_back(normalized(series[active[c]]));

  std::vector<int> assign(active.size(), -1);
  std::vector<int> shifts(active.size(), 0);
  for (int iter = 0; iter < options.max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      int best_c = 0;
      ShapeDistance best{std::numeric_limits<double>::infinity(), 0, 0.0};
      for (std::size_t c = 0; c < k; ++c) {
        const auto d = ksc_distance(series[active[a]], result.centroids[c], options.max_shift);
        if (d.distance < best.distance) {
          best = d;
          best_c = static_cast<int>(c);
        }
      }
      if (assign[a] != best_c) changed = true;
      assign[a] = best_c;
      shifts[a] = best.shift;
      objective += best.distance * best.distance;
    }
    result.objective_history.push_back(objective);
    result.iterations = iter + 1;
    if (!changed && iter > 0) {
      result.converged = true;
      break;
    }

    for (std::size_t c = 0; c < k; ++c) {
      Eigen::Matrix<double, kHours, kHours> scatter = Eigen::Matrix<double, kHours, kHours>::Zero();
      std::size_t members = 0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (assign[a] != static_cast<int>(c)) continue;
        ++members;
        const HourVector aligned = cyclic_shift(series[active[a]], -shifts[a]);
        Eigen::Map<const Eigen::Matrix<double, kHours, 1>> x(aligned.data());
        scatter += Eigen::Matrix<double, kHours, kHours>::Identity() - x * x.transpose() / x.squaredNorm();
      }
      if (members == 0) continue;  // empty cluster keeps its centroid
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, kHours, kHours>> solver(scatter);
      Eigen::Matrix<double, kHours, 1> v = solver.eigenvectors().col(0);
      if (v.sum() < 0.0) v = -v;
      v.normalize();
      for (int h = 0; h < kHours; ++h) result.centroids[c][h] = v(h);
    }
  }

  std::vector<std::size_t> counts(k, 0);
  for (std::size_t a = 0; a < active.size(); ++a) {
    result.assignment[active[a]] = assign[a];
    ++counts[static_cast<std::size_t>(assign[a])];
  }
  for (std::size_t c = 0; c < k; ++c)
    result.proportions.push_back(static_cast<double>(counts[c]) / static_cast<double>(active.size()));
  if (k >= 2)
    result.asc = average_silhouette(series, result.assignment, options.k, options.max_shift);
  return result;
}

ClusterResult ksc_cluster(std::span<const HourlyProfile> profiles, const KscOptions& options) {
  std::vector<HourVector> series;
  series.reserve(profiles.size());
  for (const auto& p : profiles) series.push_back(p.a_t);
  return ksc_cluster(std::span<const HourVector>(series), options);
}

KSelection select_k(std::span<const HourVector> series, int k_min, int k_max,
                    const KscOptions& base) {
  if (k_min < 2 || k_max > 10 || k_min > k_max)
    throw ValidationError("k range must lie within [2, 10]");
  KSelection out;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    KscOptions opt = base;
    opt.k = k;
    const auto r = ksc_cluster(series, opt);
    const double asc = r.asc.value_or(0.0);
    out.asc_per_k.emplace_back(k, asc);
    if (asc > best) {
      best = asc;
      out.best_k = k;
    }
  }
  return out;
}

}  // namespace influxrank
