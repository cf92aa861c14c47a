#pragma once

// Scattered-data geometry on the torus, greedy ball-packing pruning and
// moving-least-squares reconstruction.

#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hjnet/torus.hpp"

namespace hjnet {

struct PointSet {
  std::size_t d = 1;
  std::vector<TorusPoint> points;

  PointSet() = default;
  PointSet(std::size_t d, std::vector<TorusPoint> points);

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const TorusPoint& operator[](std::size_t i) const { return points[i]; }
};

struct FillDistance {
  double value = 0.0;
  /// Upper bound on (true fill distance - value); zero when exact.
  double probe_error = 0.0;
};

inline constexpr std::size_t kDefaultFillResolution = 256;

/// Exact in d = 1 (half the largest circular gap). In d >= 2 the supremum is
/// taken over a probe lattice of resolution^d points, which underestimates by
/// at most probe_error = pi sqrt(d) / resolution.
FillDistance fill_distance_estimate(const PointSet& q,
                                    std::size_t resolution = kDefaultFillResolution);
double fill_distance(const PointSet& q, std::size_t resolution = kDefaultFillResolution);

/// Half the minimal pairwise periodic distance.
double separation_distance(const PointSet& q);

struct PruneResult {
  std::vector<std::size_t> indices;  // ascending, 0-based
  PointSet points;
};

/// Greedy disjoint-ball selection: walks the points in input order and keeps
/// q^k when B_h(q^k) misses every ball B_h around the points kept so far
/// (open balls, so centres at distance exactly 2h are disjoint).
PruneResult prune(const PointSet& q, double h);

/// exp(1 - 1/(1 - s^2)) for s < 1, else 0.
double bump_weight(double s);

struct MlsConfig {
  int degree = 3;
  double gamma = 5.0;

  /// gamma = n + 2.
  static double default_gamma(int degree) { return degree + 2.0; }
  void validate() const;
};

class InsufficientStencilError : public std::runtime_error {
 public:
  InsufficientStencilError(const std::string& what, TorusPoint query)
      : std::runtime_error(what), query_(std::move(query)) {}
  const TorusPoint& query() const { return query_; }

 private:
  TorusPoint query_;
};

/// Number of monomials of total degree <= n in d variables.
std::size_t polynomial_space_dim(std::size_t d, int n);

/// Weighted least-squares polynomial fit of degree cfg.degree around query,
/// evaluated at the query. Weights are bump_weight(|x| / delta) with x the
/// displacement of each periodic image of a data point from the query, so the
/// local chart is the universal cover of the torus.
double mls_evaluate(const PointSet& qp, std::span<const double> values, const TorusPoint& query,
                    const MlsConfig& cfg, double delta);

/// Immutable MLS evaluator over fixed data; safe to call concurrently.
class MlsEvaluator {
 public:
  MlsEvaluator(PointSet points, std::vector<double> values, MlsConfig cfg, double delta);
  ~MlsEvaluator();
  MlsEvaluator(MlsEvaluator&&) noexcept;
  MlsEvaluator& operator=(MlsEvaluator&&) noexcept;

  double operator()(const TorusPoint& query) const;

  const PointSet& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }
  const MlsConfig& config() const { return cfg_; }
  double delta() const { return delta_; }

 private:
  struct Index;
  PointSet points_;
  std::vector<double> values_;
  MlsConfig cfg_;
  double delta_;
  std::unique_ptr<Index> index_;
};

/// Prune-then-fit reconstruction. Keeps only the pruned data.
class Reconstruction {
 public:
  Reconstruction(MlsEvaluator evaluator, std::vector<std::size_t> kept, double source_fill,
                 double pruned_fill);

  double operator()(const TorusPoint& query) const { return evaluator_(query); }

  const MlsEvaluator& evaluator() const { return evaluator_; }
  const std::vector<std::size_t>& kept_indices() const { return kept_; }
  double source_fill_distance() const { return source_fill_; }
  double pruned_fill_distance() const { return pruned_fill_; }

 private:
  MlsEvaluator evaluator_;
  std::vector<std::size_t> kept_;
  double source_fill_;
  double pruned_fill_;
};

/// prune with h = fill_distance(q), then MLS of degree r - 1 with
/// delta = gamma * fill_distance(pruned).
Reconstruction reconstruct(const PointSet& q, std::span<const double> values, int r, double gamma,
                           std::size_t fill_resolution = kDefaultFillResolution);

/// One row per point: q1..qd, value (with a header row).
void write_points_csv(std::ostream& os, const PointSet& q, std::span<const double> values);

struct PointData {
  PointSet points;
  std::vector<double> values;
};
PointData read_points_csv(std::istream& is);

}  // namespace hjnet
