#include "hjnet/mls.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hjnet/csv.hpp"

namespace hjnet {

namespace {

// Uniform periodic bucket grid for radius and nearest-neighbour queries.
class CellGrid {
 public:
  CellGrid(const PointSet& pts, std::size_t cells_per_axis) : d_(pts.d), pts_(&pts) {
    n_ = std::max<std::size_t>(1, cells_per_axis);
    cell_ = kTwoPi / double(n_);
    std::size_t total = 1;
    for (std::size_t i = 0; i < d_; ++i) total *= n_;
    buckets_.resize(total);
    for (std::size_t j = 0; j < pts.size(); ++j) buckets_[flat(pts[j].span())].push_back(j);
  }

  // Visits every point whose periodic distance to q may be <= radius.
  template <typename Fn>
  void for_each_candidate(std::span<const double> q, double radius, Fn&& fn) const {
    const auto k = std::size_t(std::floor(radius / cell_)) + 1;
    const bool full = 2 * k + 1 >= n_;
    std::vector<std::ptrdiff_t> lo(d_), cur(d_);
    const std::ptrdiff_t span = full ? std::ptrdiff_t(n_) : std::ptrdiff_t(2 * k + 1);
    for (std::size_t i = 0; i < d_; ++i) {
      lo[i] = full ? 0 : std::ptrdiff_t(cell_index(q[i])) - std::ptrdiff_t(k);
      cur[i] = 0;
    }
    while (true) {
      std::size_t f = 0;
      for (std::size_t i = 0; i < d_; ++i) {
        std::ptrdiff_t c = (lo[i] + cur[i]) % std::ptrdiff_t(n_);
        if (c < 0) c += std::ptrdiff_t(n_);
        f = f * n_ + std::size_t(c);
      }
      for (std::size_t j : buckets_[f]) fn(j);
      std::size_t i = d_;
      while (i-- > 0) {
        if (++cur[i] < span) break;
        cur[i] = 0;
      }
      if (i == std::size_t(-1)) break;
    }
  }

  double nearest_distance(std::span<const double> q) const {
    double radius = cell_;
    while (true) {
      double best = std::numeric_limits<double>::infinity();
      for_each_candidate(q, radius, [&](std::size_t j) {
        best = std::min(best, periodic_distance(q, (*pts_)[j].span()));
      });
      const bool covers_all = 2 * (std::size_t(std::floor(radius / cell_)) + 1) + 1 >= n_;
      if (best <= radius || covers_all) return best;
      radius *= 2.0;
    }
  }

 private:
  std::size_t cell_index(double x) const {
    return std::min(n_ - 1, std::size_t(std::floor(wrap_angle(x) / cell_)));
  }
  std::size_t flat(std::span<const double> q) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < d_; ++i) f = f * n_ + cell_index(q[i]);
    return f;
  }

  std::size_t d_;
  const PointSet* pts_;
  std::size_t n_ = 1;
  double cell_ = kTwoPi;
  std::vector<std::vector<std::size_t>> buckets_;
};

std::size_t cells_for_count(std::size_t d, std::size_t count) {
  const double per_axis = std::pow(double(std::max<std::size_t>(1, count)), 1.0 / double(d));
  return std::max<std::size_t>(1, std::min<std::size_t>(256, std::size_t(per_axis)));
}

std::size_t cells_for_radius(double radius) {
  if (!(radius > 0.0)) return 1;
  return std::max<std::size_t>(1, std::min<std::size_t>(256, std::size_t(kTwoPi / radius)));
}

// Exponent tuples of total degree <= n, lowest degree first.
std::vector<std::vector<int>> monomial_exponents(std::size_t d, int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(d, 0);
  for (int total = 0; total <= n; ++total) {
    // enumerate compositions of `total` into d parts, lexicographically descending
    std::vector<std::vector<int>> level;
    auto rec = [&](auto&& self, std::size_t i, int left) -> void {
      if (i + 1 == d) {
        e[i] = left;
        level.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[i] = v;
        self(self, i + 1, left - v);
      }
    };
    rec(rec, 0, total);
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

struct StencilEntry {
  Vec y;  // displacement / delta
  double weight;
  double value;
};

double fit_at_origin(const std::vector<StencilEntry>& stencil,
                     const std::vector<std::vector<int>>& exps, const TorusPoint& query) {
  const std::size_t m = exps.size();
  std::size_t positive = 0;
  for (const auto& s : stencil)
    if (s.weight > 0.0) ++positive;
  if (positive < m) {
    throw InsufficientStencilError("insufficient MLS stencil at " + to_string(query) + ": " +
                                       std::to_string(positive) + " weighted points, need " +
                                       std::to_string(m),
                                   query);
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(Eigen::Index(m), Eigen::Index(m));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(Eigen::Index(m));
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(Eigen::Index(m));
  for (const auto& s : stencil) {
    for (std::size_t a = 0; a < m; ++a) {
      double b = 1.0;
      for (std::size_t i = 0; i < s.y.size(); ++i)
        for (int p = 0; p < exps[a][i]; ++p) b *= s.y[i];
      basis[Eigen::Index(a)] = b;
    }
    gram.noalias() += s.weight * basis * basis.transpose();
    rhs.noalias() += s.weight * s.value * basis;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const auto& lam = eig.eigenvalues();
  const double cutoff = 1e-10 * lam.cwiseAbs().maxCoeff();
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  Eigen::VectorXd proj = vecs.transpose() * rhs;
  for (Eigen::Index i = 0; i < proj.size(); ++i) proj[i] = lam[i] > cutoff ? proj[i] / lam[i] : 0.0;
  const Eigen::VectorXd coeffs = vecs * proj;
  // the constant monomial comes first and every other basis function vanishes at the query
  return coeffs[0];
}

// Appends every periodic image of point j lying strictly inside the support.
void collect_images(const TorusPoint& query, const TorusPoint& point, double value, double delta,
                    std::vector<StencilEntry>& stencil) {
  const std::size_t d = query.dim();
  const Vec base = periodic_displacement(query.span(), point.span());
  const int k = delta >= std::numbers::pi ? int(std::ceil(delta / kTwoPi)) : 0;
  std::vector<int> shift(d, -k);
  while (true) {
    Vec x(d);
    double r2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = base[i] + kTwoPi * shift[i];
      r2 += x[i] * x[i];
    }
    const double s = std::sqrt(r2) / delta;
    if (s < 1.0) {
      for (double& xi : x) xi /= delta;
      stencil.push_back({std::move(x), bump_weight(s), value});
    }
    std::size_t i = d;
    while (i-- > 0) {
      if (++shift[i] <= k) break;
      shift[i] = -k;
    }
    if (i == std::size_t(-1)) break;
  }
}

}  // namespace

PointSet::PointSet(std::size_t d, std::vector<TorusPoint> pts) : d(d), points(std::move(pts)) {
  for (const auto& p : points) require_dim(p.dim(), d, "PointSet point");
}

FillDistance fill_distance_estimate(const PointSet& q, std::size_t resolution) {
  if (q.empty()) throw std::invalid_argument("fill_distance: empty point set");
  if (q.d == 1) {
    std::vector<double> xs;
    xs.reserve(q.size());
    for (const auto& p : q.points) xs.push_back(p[0]);
    std::sort(xs.begin(), xs.end());
    double gap = xs.front() + kTwoPi - xs.back();
    for (std::size_t i = 1; i < xs.size(); ++i) gap = std::max(gap, xs[i] - xs[i - 1]);
    return {0.5 * gap, 0.0};
  }
  if (resolution == 0) throw std::invalid_argument("fill_distance: resolution must be positive");
  CellGrid grid(q, cells_for_count(q.d, q.size()));
  double sup = 0.0;
  std::vector<std::size_t> idx(q.d, 0);
  Vec probe(q.d);
  while (true) {
    for (std::size_t i = 0; i < q.d; ++i) probe[i] = kTwoPi * double(idx[i]) / double(resolution);
    sup = std::max(sup, grid.nearest_distance(probe));
    std::size_t i = q.d;
    while (i-- > 0) {
      if (++idx[i] < resolution) break;
      idx[i] = 0;
    }
    if (i == std::size_t(-1)) break;
  }
  return {sup, std::numbers::pi * std::sqrt(double(q.d)) / double(resolution)};
}

double fill_distance(const PointSet& q, std::size_t resolution) {
  return fill_distance_estimate(q, resolution).value;
}

double separation_distance(const PointSet& q) {
  if (q.size() < 2) throw std::invalid_argument("separation_distance: need at least 2 points");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j)
      best = std::min(best, periodic_distance(q[i], q[j]));
  return 0.5 * best;
}

PruneResult prune(const PointSet& q, double h) {
  if (q.empty()) throw std::invalid_argument("prune: empty point set");
  if (!(h > 0.0)) throw std::invalid_argument("prune: h must be positive");
  // balls that touch at exactly 2h count as disjoint; the slack absorbs
  // rounding in h itself (e.g. uniform grids where every gap equals 2h)
  const double min_dist = 2.0 * h * (1.0 - 1e-9);
  PruneResult result;
  result.points.d = q.d;
  PointSet kept(q.d, {});
  std::vector<std::vector<std::size_t>> buckets;
  const std::size_t n = cells_for_radius(min_dist);
  const double cell = kTwoPi / double(n);
  std::size_t total = 1;
  for (std::size_t i = 0; i < q.d; ++i) total *= n;
  buckets.resize(total);
  auto cell_of = [&](double x) { return std::min(n - 1, std::size_t(std::floor(wrap_angle(x) / cell))); };
  const auto reach = std::size_t(std::floor(min_dist / cell)) + 1;
  const bool full = 2 * reach + 1 >= n;
  const std::ptrdiff_t span = full ? std::ptrdiff_t(n) : std::ptrdiff_t(2 * reach + 1);

  for (std::size_t k = 0; k < q.size(); ++k) {
    bool disjoint = true;
    std::vector<std::ptrdiff_t> cur(q.d, 0);
    while (disjoint) {
      std::size_t f = 0;
      for (std::size_t i = 0; i < q.d; ++i) {
        const std::ptrdiff_t lo = full ? 0 : std::ptrdiff_t(cell_of(q[k][i])) - std::ptrdiff_t(reach);
        std::ptrdiff_t c = (lo + cur[i]) % std::ptrdiff_t(n);
        if (c < 0) c += std::ptrdiff_t(n);
        f = f * n + std::size_t(c);
      }
      for (std::size_t j : buckets[f]) {
        if (periodic_distance(q[k], q[result.indices[j]]) < min_dist) {
          disjoint = false;
          break;
        }
      }
      std::size_t i = q.d;
      while (i-- > 0) {
        if (++cur[i] < span) break;
        cur[i] = 0;
      }
      if (i == std::size_t(-1)) break;
    }
    if (!disjoint) continue;
    std::size_t f = 0;
    for (std::size_t i = 0; i < q.d; ++i) f = f * n + cell_of(q[k][i]);
    buckets[f].push_back(result.indices.size());
    result.indices.push_back(k);
    result.points.points.push_back(q[k]);
  }
  return result;
}

double bump_weight(double s) {
  s = std::abs(s);
  if (s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

void MlsConfig::validate() const {
  if (degree < 0) throw std::invalid_argument("MlsConfig: degree must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("MlsConfig: gamma must be positive");
}

std::size_t polynomial_space_dim(std::size_t d, int n) {
  // binomial(n + d, d)
  std::size_t num = 1, den = 1;
  for (std::size_t i = 1; i <= d; ++i) {
    num *= std::size_t(n) + i;
    den *= i;
  }
  return num / den;
}

double mls_evaluate(const PointSet& qp, std::span<const double> values, const TorusPoint& query,
                    const MlsConfig& cfg, double delta) {
  cfg.validate();
  require_dim(values.size(), qp.size(), "mls_evaluate values");
  require_dim(query.dim(), qp.d, "mls_evaluate query");
  if (!(delta > 0.0)) throw std::invalid_argument("mls_evaluate: delta must be positive");
  std::vector<StencilEntry> stencil;
  for (std::size_t j = 0; j < qp.size(); ++j) collect_images(query, qp[j], values[j], delta, stencil);
  return fit_at_origin(stencil, monomial_exponents(qp.d, cfg.degree), query);
}

struct MlsEvaluator::Index {
  Index(const PointSet& pts, double delta, int degree)
      : grid(pts, cells_for_radius(delta)), exps(monomial_exponents(pts.d, degree)) {}
  CellGrid grid;
  std::vector<std::vector<int>> exps;
};

MlsEvaluator::MlsEvaluator(PointSet points, std::vector<double> values, MlsConfig cfg, double delta)
    : points_(std::move(points)), values_(std::move(values)), cfg_(cfg), delta_(delta) {
  cfg_.validate();
  require_dim(values_.size(), points_.size(), "MlsEvaluator values");
  if (!(delta_ > 0.0)) throw std::invalid_argument("MlsEvaluator: delta must be positive");
  index_ = std::make_unique<Index>(points_, delta_, cfg_.degree);
}

MlsEvaluator::~MlsEvaluator() = default;
MlsEvaluator::MlsEvaluator(MlsEvaluator&&) noexcept = default;
MlsEvaluator& MlsEvaluator::operator=(MlsEvaluator&&) noexcept = default;

double MlsEvaluator::operator()(const TorusPoint& query) const {
  require_dim(query.dim(), points_.d, "MlsEvaluator query");
  std::vector<StencilEntry> stencil;
  index_->grid.for_each_candidate(query.span(), delta_, [&](std::size_t j) {
    collect_images(query, points_[j], values_[j], delta_, stencil);
  });
  return fit_at_origin(stencil, index_->exps, query);
}

Reconstruction::Reconstruction(MlsEvaluator evaluator, std::vector<std::size_t> kept,
                               double source_fill, double pruned_fill)
    : evaluator_(std::move(evaluator)), kept_(std::move(kept)), source_fill_(source_fill),
      pruned_fill_(pruned_fill) {}

Reconstruction reconstruct(const PointSet& q, std::span<const double> values, int r, double gamma,
                           std::size_t fill_resolution) {
  if (r < 2) throw std::invalid_argument("reconstruct: r must be >= 2");
  require_dim(values.size(), q.size(), "reconstruct values");
  const double h = fill_distance(q, fill_resolution);
  auto pruned = prune(q, h);
  const double h_pruned = fill_distance(pruned.points, fill_resolution);
  std::vector<double> kept_values;
  kept_values.reserve(pruned.indices.size());
  for (std::size_t j : pruned.indices) kept_values.push_back(values[j]);
  MlsConfig cfg{r - 1, gamma};
  MlsEvaluator eval(std::move(pruned.points), std::move(kept_values), cfg, gamma * h_pruned);
  return Reconstruction(std::move(eval), std::move(pruned.indices), h, h_pruned);
}

void write_points_csv(std::ostream& os, const PointSet& q, std::span<const double> values) {
  require_dim(values.size(), q.size(), "write_points_csv values");
  CsvWriter csv(os);
  std::vector<std::string> header;
  for (std::size_t i = 1; i <= q.d; ++i) header.push_back("q" + std::to_string(i));
  header.push_back("value");
  csv.row(header);
  for (std::size_t j = 0; j < q.size(); ++j) {
    std::vector<std::string> cells;
    for (double c : q[j].coords()) cells.push_back(format_double(c));
    cells.push_back(format_double(values[j]));
    csv.row(cells);
  }
}

PointData read_points_csv(std::istream& is) {
  const auto rows = parse_csv(is);
  if (rows.empty()) throw std::invalid_argument("read_points_csv: missing header");
  const auto& header = rows.front();
  if (header.size() < 2 || header.back() != "value")
    throw std::invalid_argument("read_points_csv: header must be q1..qd,value");
  const std::size_t d = header.size() - 1;
  PointData out;
  out.points.d = d;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != d + 1)
      throw std::invalid_argument("read_points_csv: row " + std::to_string(r) + " has wrong width");
    Vec coords(d);
    for (std::size_t i = 0; i < d; ++i) coords[i] = parse_double(rows[r][i]);
    out.points.points.emplace_back(std::move(coords));
    out.values.push_back(parse_double(rows[r][d]));
  }
  return out;
}

}  // namespace hjnet
