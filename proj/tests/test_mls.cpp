#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hjnet/mls.hpp"
#include "hjnet/pipeline.hpp"

using namespace hjnet;
using std::numbers::pi;

namespace {

PointSet points1(std::initializer_list<double> xs) {
  PointSet q;
  q.d = 1;
  for (double x : xs) q.points.push_back(TorusPoint{x});
  return q;
}

PointSet random_points(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  PointSet q;
  q.d = d;
  for (std::size_t i = 0; i < n; ++i) {
    Vec c(d);
    for (auto& x : c) x = u(rng);
    q.points.emplace_back(std::move(c));
  }
  return q;
}

std::vector<double> sample(const PointSet& q, double (*f)(const TorusPoint&)) {
  std::vector<double> v;
  for (const auto& p : q.points) v.push_back(f(p));
  return v;
}

double sin1(const TorusPoint& q) { return std::sin(q[0]); }

double slope(const std::vector<double>& h, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(e[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(FillDistance, OneDimensionalExamples) {
  EXPECT_NEAR(fill_distance(points1({0.0, pi})), pi / 2, 1e-15);
  EXPECT_NEAR(fill_distance(points1({0.0, pi / 2, pi, 3 * pi / 2})), pi / 4, 1e-15);
  EXPECT_NEAR(fill_distance(points1({0.0})), pi, 1e-15);
  EXPECT_EQ(fill_distance_estimate(points1({0.0, 1.0})).probe_error, 0.0);
}

TEST(FillDistance, TwoDimensionalGrid) {
  const auto est = fill_distance_estimate(make_uniform_grid(2, 8));
  const double exact = pi / 8 * std::sqrt(2.0);
  EXPECT_LE(est.value, exact + 1e-12);
  EXPECT_GE(est.value + est.probe_error, exact - 1e-12);
  EXPECT_NEAR(est.probe_error, pi * std::sqrt(2.0) / kDefaultFillResolution, 1e-15);
}

TEST(FillDistance, EmptySetThrows) {
  EXPECT_THROW(fill_distance(PointSet(1, {})), std::invalid_argument);
}

TEST(SeparationDistance, Examples) {
  EXPECT_NEAR(separation_distance(points1({0.0, pi})), pi / 2, 1e-15);
  EXPECT_NEAR(separation_distance(points1({0.0, 0.1, pi})), 0.05, 1e-15);
  EXPECT_EQ(separation_distance(points1({1.0, 2.0, 1.0})), 0.0);
  EXPECT_NEAR(separation_distance(points1({0.05, kTwoPi - 0.05, 3.0})), 0.05, 1e-14);
}

TEST(SeparationDistance, BelowFillDistanceForCoveringSets) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto q = random_points(2, 60, seed);
    EXPECT_LE(separation_distance(q), fill_distance(q));
  }
}

TEST(Prune, Examples) {
  const auto r = prune(points1({0.0, 0.1, pi}), 0.5);
  EXPECT_EQ(r.indices, (std::vector<std::size_t>{0, 2}));
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_EQ(r.points[1], TorusPoint{pi});

  const auto q = random_points(2, 50, 3);
  EXPECT_EQ(prune(q, pi * std::sqrt(2.0)).indices, (std::vector<std::size_t>{0}));
}

TEST(Prune, DeterministicInInputOrder) {
  const auto q = random_points(2, 300, 8);
  const double h = fill_distance(q);
  EXPECT_EQ(prune(q, h).indices, prune(q, h).indices);
}

TEST(Prune, UniformGridKeepsEveryPoint) {
  // neighbours sit exactly 2h apart, so the open balls are disjoint
  const auto g = make_uniform_grid(1, 64);
  EXPECT_EQ(prune(g, fill_distance(g)).indices.size(), 64u);
}

TEST(Prune, GuaranteesOnRandomSets) {
  for (std::size_t d : {1u, 2u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto q = random_points(d, d == 1 ? 80 : 200, 100 * d + seed);
      const auto hq = fill_distance_estimate(q);
      const double h = hq.value;
      const auto kept = prune(q, h);
      const auto hp = fill_distance_estimate(kept.points);
      const double rho = separation_distance(kept.points);
      const double slack = hq.probe_error + hp.probe_error + 1e-12;
      EXPECT_GE(rho, h * (1 - 1e-9) - slack) << "d=" << d << " seed=" << seed;
      EXPECT_LE(hp.value, 3 * h + slack) << "d=" << d << " seed=" << seed;
      EXPECT_LE(hp.value, 3 * rho + slack) << "d=" << d << " seed=" << seed;
    }
  }
}

TEST(BumpWeight, Shape) {
  EXPECT_DOUBLE_EQ(bump_weight(0.0), 1.0);
  EXPECT_EQ(bump_weight(1.0), 0.0);
  EXPECT_EQ(bump_weight(1.5), 0.0);
  EXPECT_GT(bump_weight(0.99), 0.0);
  EXPECT_LT(bump_weight(0.6), bump_weight(0.5));
}

TEST(PolynomialSpace, Dimension) {
  EXPECT_EQ(polynomial_space_dim(1, 3), 4u);
  EXPECT_EQ(polynomial_space_dim(2, 3), 10u);
  EXPECT_EQ(polynomial_space_dim(2, 0), 1u);
  EXPECT_EQ(polynomial_space_dim(3, 2), 10u);
}

TEST(MlsEvaluate, ReproducesConstants) {
  const auto q = random_points(2, 400, 5);
  const std::vector<double> v(q.size(), -3.25);
  for (int n : {0, 1, 2, 3}) {
    const MlsConfig cfg{n, MlsConfig::default_gamma(n)};
    const double delta = cfg.gamma * fill_distance(q);
    for (const auto& x : random_points(2, 20, 6).points) EXPECT_NEAR(mls_evaluate(q, v, x, cfg, delta), -3.25, 1e-12);
  }
}

TEST(MlsEvaluate, ReproducesLinearDataInLocalChart) {
  const auto g = make_uniform_grid(1, 64);
  std::vector<double> v;
  for (const auto& p : g.points) v.push_back(p[0] - pi);
  const MlsConfig cfg{1, 3.0};
  const double delta = cfg.gamma * pi / 64;
  for (double x : {pi - 0.3, pi, pi + 0.017}) EXPECT_NEAR(mls_evaluate(g, v, TorusPoint{x}, cfg, delta), x - pi, 1e-10);
}

TEST(MlsEvaluate, ReproducesPolynomialsOfItsDegree) {
  // cubic in d = 2 around (3, 3), far from the cut of the chart
  const auto q = make_uniform_grid(2, 48);
  auto poly = [](double a, double b) {
    const double x = a - 3.0, y = b - 3.0;
    return 0.5 - x + 2 * y + x * y - 0.7 * x * x + 0.3 * y * y * y - 0.2 * x * x * y;
  };
  std::vector<double> v;
  for (const auto& p : q.points) v.push_back(poly(p[0], p[1]));
  const MlsConfig cfg{3, MlsConfig::default_gamma(3)};
  const double delta = cfg.gamma * fill_distance(q);
  ASSERT_LT(delta, 1.0);
  for (const TorusPoint& x : {TorusPoint{3.0, 3.0}, TorusPoint{2.6, 3.3}, TorusPoint{3.4, 2.7}})
    EXPECT_NEAR(mls_evaluate(q, v, x, cfg, delta), poly(x[0], x[1]), 1e-8);
}

TEST(MlsEvaluate, RefinementRatioOfSine) {
  const MlsConfig cfg{3, MlsConfig::default_gamma(3)};
  double err[2];
  for (int i = 0; i < 2; ++i) {
    const std::size_t n = i == 0 ? 64 : 128;
    const auto g = make_uniform_grid(1, n);
    const auto v = sample(g, sin1);
    err[i] = 0.0;
    for (const auto& x : lattice_points(1, 512))
      err[i] = std::max(err[i], std::abs(mls_evaluate(g, v, x, cfg, cfg.gamma * pi / n) - std::sin(x[0])));
  }
  EXPECT_LE(err[0], 2.0 * std::pow(pi / 64, 4));
  const double ratio = err[0] / err[1];
  EXPECT_GE(ratio, 16.0 / 1.6);
  EXPECT_LE(ratio, 16.0 * 1.6);
}

TEST(MlsEvaluate, InsufficientStencilThrows) {
  const auto g = make_uniform_grid(1, 16);
  const auto v = sample(g, sin1);
  try {
    mls_evaluate(g, v, TorusPoint{0.2}, MlsConfig{3, 1.0}, 0.3);
    FAIL() << "expected InsufficientStencilError";
  } catch (const InsufficientStencilError& e) {
    EXPECT_EQ(e.query(), TorusPoint{0.2});
  }
}

TEST(MlsEvaluate, InvalidInputsThrow) {
  const auto g = make_uniform_grid(1, 16);
  const auto v = sample(g, sin1);
  EXPECT_THROW(mls_evaluate(g, std::vector<double>(3, 0.0), TorusPoint{0.0}, MlsConfig{}, 1.0), std::invalid_argument);
  EXPECT_THROW(mls_evaluate(g, v, TorusPoint{0.0}, MlsConfig{}, -1.0), std::invalid_argument);
  EXPECT_THROW(mls_evaluate(g, v, TorusPoint{0.0, 1.0}, MlsConfig{}, 1.0), DimensionError);
  EXPECT_THROW((MlsConfig{-1, 3.0}).validate(), std::invalid_argument);
}

TEST(MlsEvaluator, MatchesDirectEvaluation) {
  const auto q = random_points(2, 500, 12);
  std::vector<double> v;
  for (const auto& p : q.points) v.push_back(std::sin(p[0]) * std::cos(2 * p[1]));
  const MlsConfig cfg{2, MlsConfig::default_gamma(2)};
  const double delta = cfg.gamma * fill_distance(q);
  const MlsEvaluator eval(q, v, cfg, delta);
  for (const auto& x : random_points(2, 30, 13).points)
    EXPECT_NEAR(eval(x), mls_evaluate(q, v, x, cfg, delta), 1e-12);
}

TEST(Reconstruct, ConstantData) {
  const auto q = random_points(1, 100, 2);
  const auto rec = reconstruct(q, std::vector<double>(q.size(), 4.0), 4, MlsConfig::default_gamma(3));
  for (const auto& x : lattice_points(1, 50)) EXPECT_NEAR(rec(x), 4.0, 1e-12);
}

TEST(Reconstruct, NearInterpolationAtKeptPoints) {
  for (std::size_t n : {32u, 64u}) {
    const auto g = make_uniform_grid(1, n);
    const auto rec = reconstruct(g, sample(g, sin1), 4, MlsConfig::default_gamma(3));
    const double h = rec.source_fill_distance();
    for (const auto& p : rec.evaluator().points().points) EXPECT_LE(std::abs(rec(p) - std::sin(p[0])), 2.0 * std::pow(h, 4));
  }
}

TEST(Reconstruct, RecordsPruningGeometry) {
  const auto q = random_points(1, 200, 31);
  const auto rec = reconstruct(q, sample(q, sin1), 3, MlsConfig::default_gamma(2));
  EXPECT_EQ(rec.source_fill_distance(), fill_distance(q));
  EXPECT_LE(rec.pruned_fill_distance(), 3 * rec.source_fill_distance() + 1e-12);
  EXPECT_EQ(rec.kept_indices(), prune(q, fill_distance(q)).indices);
  EXPECT_NEAR(rec.evaluator().delta(), MlsConfig::default_gamma(2) * rec.pruned_fill_distance(), 1e-15);
}

TEST(Properties, ConvergenceOrder) {
  for (int r : {2, 3, 4}) {
    std::vector<double> hs, errs;
    for (std::size_t n : {16u, 32u, 64u, 128u}) {
      const auto g = make_uniform_grid(1, n);
      const auto rec = reconstruct(g, sample(g, sin1), r, MlsConfig::default_gamma(r - 1));
      double e = 0.0;
      for (const auto& x : lattice_points(1, 8 * n)) e = std::max(e, std::abs(rec(x) - std::sin(x[0])));
      hs.push_back(pi / double(n));
      errs.push_back(e);
    }
    EXPECT_GE(slope(hs, errs), r - 0.5) << "r=" << r;
  }
}

TEST(Properties, StabilityUnderPerturbation) {
  // delta stays at its unperturbed value; the fit alone is under test
  const MlsConfig cfg{3, MlsConfig::default_gamma(3)};
  for (std::size_t n : {32u, 64u}) {
    const auto g = make_uniform_grid(1, n);
    const double h = pi / double(n);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> dq(g.size()), dv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      dq[i] = u(rng);
      dv[i] = u(rng);
    }
    auto error_at = [&](double scale) {
      PointSet q(1, {});
      std::vector<double> v;
      for (std::size_t i = 0; i < g.size(); ++i) {
        q.points.push_back(TorusPoint{g[i][0] + scale * dq[i]});
        v.push_back(std::sin(g[i][0]) + scale * dv[i]);
      }
      const MlsEvaluator eval(q, v, cfg, cfg.gamma * h);
      double e = 0.0;
      for (const auto& x : lattice_points(1, 8 * n)) e = std::max(e, std::abs(eval(x) - std::sin(x[0])));
      return e;
    };
    const double base = error_at(0.0);
    const double eps = std::pow(h, 4);
    const double e1 = error_at(eps), e2 = error_at(2 * eps);
    EXPECT_LE(e2, 2 * e1 + base) << "N=" << n;
    EXPECT_LE(e1, 4 * base) << "N=" << n;
  }
}

TEST(Prune, PerturbedUniformGridDropsAlternatePoints) {
  // on a grid spaced exactly 2h any shrinking of a gap flips the greedy test
  const auto g = make_uniform_grid(1, 64);
  PointSet q(1, {});
  for (std::size_t i = 0; i < g.size(); ++i) q.points.push_back(TorusPoint{g[i][0] + (i % 2 ? 1e-7 : -1e-7)});
  EXPECT_LT(prune(q, fill_distance(q)).indices.size(), 40u);
}

TEST(PointsCsv, RoundTrip) {
  const auto q = random_points(2, 25, 40);
  std::vector<double> v;
  for (const auto& p : q.points) v.push_back(std::exp(p[0]) / 3.0);
  std::stringstream ss;
  write_points_csv(ss, q, v);
  const auto back = read_points_csv(ss);
  EXPECT_EQ(back.points.d, 2u);
  EXPECT_EQ(back.points.points, q.points);
  EXPECT_EQ(back.values, v);
}
