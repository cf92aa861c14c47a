#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hjnet/hamiltonians.hpp"

using namespace hjnet;
using std::numbers::pi;

namespace {

HamiltonianSpec cos_potential() {
  return HamiltonianSpec::kinetic_plus_potential(TrigSeries(1, {{{1}, 1.0, 0.0}}), 0.5);
}

std::vector<HamiltonianSpec> sample_specs() {
  return {
      HamiltonianSpec::free_particle(2),
      HamiltonianSpec::kinetic_plus_potential(
          TrigSeries(2, {{{1, 0}, 1.0, 0.3}, {{1, -2}, -0.4, 0.7}, {{0, 1}, 0.2, 0.0}}), 2.0),
      HamiltonianSpec::advection({TrigSeries(2, {{{0, 0}, 2.0, 0.0}, {{1, 1}, 0.0, 0.5}}),
                                  TrigSeries(2, {{{2, 0}, 0.3, -0.1}})},
                                 3.0),
  };
}

}  // namespace

TEST(TorusPoint, WrapsIntoFundamentalDomain) {
  TorusPoint q{-0.5, 7.0, kTwoPi};
  for (std::size_t i = 0; i < q.dim(); ++i) {
    EXPECT_GE(q[i], 0.0);
    EXPECT_LT(q[i], kTwoPi);
  }
  EXPECT_NEAR(q[0], kTwoPi - 0.5, 1e-15);
  EXPECT_NEAR(q[1], 7.0 - kTwoPi, 1e-15);
  EXPECT_EQ(q[2], 0.0);
  EXPECT_LT(wrap_angle(-1e-300), kTwoPi);
}

TEST(TorusPoint, PeriodicDistanceBoundedByHalfDiagonal) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    TorusPoint a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    EXPECT_LE(periodic_distance(a, b), pi * std::sqrt(3.0) + 1e-12);
    EXPECT_NEAR(periodic_distance(a, b), periodic_distance(b, a), 1e-15);
  }
  EXPECT_NEAR(periodic_distance(TorusPoint{0.1}, TorusPoint{kTwoPi - 0.1}), 0.2, 1e-14);
}

TEST(TorusPoint, DimensionMismatchThrows) {
  EXPECT_THROW(periodic_distance(TorusPoint{0.0}, TorusPoint{0.0, 1.0}), DimensionError);
}

TEST(EvalH, Examples) {
  EXPECT_DOUBLE_EQ(eval_h(HamiltonianSpec::free_particle(1), TorusPoint{0.0}, Vec{2.0}), 2.0);
  EXPECT_DOUBLE_EQ(eval_h(HamiltonianSpec::constant_advection(1, 1.0), TorusPoint{1.3}, Vec{0.7}), 0.7);
  EXPECT_DOUBLE_EQ(eval_h(cos_potential(), TorusPoint{0.0}, Vec{0.0}), 1.0);
}

TEST(EvalH, WrongMomentumDimensionThrows) {
  EXPECT_THROW(eval_h(HamiltonianSpec::free_particle(2), TorusPoint{0.0, 0.0}, Vec{1.0}), DimensionError);
}

TEST(GradH, Examples) {
  auto g = grad_h(HamiltonianSpec::free_particle(1), TorusPoint{2.2}, Vec{3.0});
  EXPECT_EQ(g.dq[0], 0.0);
  EXPECT_EQ(g.dp[0], 3.0);

  g = grad_h(cos_potential(), TorusPoint{pi / 2}, Vec{0.0});
  EXPECT_NEAR(g.dq[0], -1.0, 1e-15);
  EXPECT_EQ(g.dp[0], 0.0);

  g = grad_h(HamiltonianSpec::constant_advection(1, 1.0), TorusPoint{4.0}, Vec{5.0});
  EXPECT_EQ(g.dq[0], 0.0);
  EXPECT_EQ(g.dp[0], 1.0);
}

TEST(Lagrangian, Examples) {
  EXPECT_DOUBLE_EQ(lagrangian(HamiltonianSpec::free_particle(1), TorusPoint{0.4}, Vec{2.0}), 2.0);
  EXPECT_DOUBLE_EQ(lagrangian(cos_potential(), TorusPoint{0.0}, Vec{1.0}), -0.5);
  const auto adv = HamiltonianSpec::constant_advection(2, 1.7);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i)
    EXPECT_NEAR(lagrangian(adv, TorusPoint{u(rng), u(rng)}, Vec{u(rng), u(rng)}), 0.0, 1e-14);
}

TEST(Lagrangian, MatchesLegendreFormula) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& spec : sample_specs()) {
    for (int i = 0; i < 100; ++i) {
      TorusPoint q{u(rng), u(rng)};
      Vec p{u(rng), u(rng)};
      const auto g = grad_h(spec, q, p);
      const double expected = p[0] * g.dp[0] + p[1] * g.dp[1] - eval_h(spec, q, p);
      EXPECT_NEAR(lagrangian(spec, q, p), expected, 1e-13 * (1.0 + std::abs(expected)));
    }
  }
}

TEST(GradH, AgreesWithCentralDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double step = 1e-5;
  for (const auto& spec : sample_specs()) {
    for (int i = 0; i < 100; ++i) {
      Vec q{wrap_angle(u(rng)), wrap_angle(u(rng))};
      Vec p{u(rng), u(rng)};
      const auto g = grad_h(spec, TorusPoint(q), p);
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        Vec qp = q, qm = q;
        qp[k] += step;
        qm[k] -= step;
        const double fd_q = (eval_h(spec, qp, p) - eval_h(spec, qm, p)) / (2 * step);
        Vec pp = p, pm = p;
        pp[k] += step;
        pm[k] -= step;
        const double fd_p = (eval_h(spec, q, pp) - eval_h(spec, q, pm)) / (2 * step);
        num += std::pow(fd_q - g.dq[k], 2) + std::pow(fd_p - g.dp[k], 2);
        den += g.dq[k] * g.dq[k] + g.dp[k] * g.dp[k];
      }
      EXPECT_LE(std::sqrt(num), 1e-6 * std::max(1.0, std::sqrt(den)));
    }
  }
}

TEST(GradH, HessianAgreesWithDifferencedGradient) {
  const auto spec = sample_specs()[1];
  const Vec q{0.7, 2.1}, p{-0.4, 1.3};
  const auto hess = hessian_h(spec, q, p);
  const double step = 1e-5;
  for (std::size_t j = 0; j < 4; ++j) {
    Vec qp = q, qm = q, pp = p, pm = p;
    if (j < 2) {
      qp[j] += step;
      qm[j] -= step;
    } else {
      pp[j - 2] += step;
      pm[j - 2] -= step;
    }
    const auto gp = grad_h(spec, TorusPoint(qp), pp);
    const auto gm = grad_h(spec, TorusPoint(qm), pm);
    for (std::size_t i = 0; i < 4; ++i) {
      const double a = i < 2 ? gp.dq[i] : gp.dp[i - 2];
      const double b = i < 2 ? gm.dq[i] : gm.dp[i - 2];
      EXPECT_NEAR(hess[i * 4 + j], (a - b) / (2 * step), 1e-6);
    }
  }
}

TEST(Periodicity, HamiltonianAndInitialDataUnderIntegerShifts) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  std::uniform_int_distribution<int> m(-5, 5);
  const auto u0 = InitialData::from_terms(2, {{{1, 0}, 1.0, 0.0}, {{0, 2}, 0.0, 1.0}, {{3, -1}, 0.2, 0.1}}, 4);
  for (const auto& spec : sample_specs()) {
    for (int i = 0; i < 100; ++i) {
      const double a = u(rng), b = u(rng);
      const Vec p{u(rng) - pi, u(rng) - pi};
      TorusPoint base{a, b};
      TorusPoint shifted{a + kTwoPi * m(rng), b + kTwoPi * m(rng)};
      EXPECT_NEAR(eval_h(spec, shifted, p), eval_h(spec, base, p), 1e-12);
      EXPECT_NEAR(eval_u0(u0, shifted).value, eval_u0(u0, base).value, 1e-12);
    }
  }
}

TEST(GrowthBound, FreeParticleIsZero) {
  const auto rep = check_growth_bound(HamiltonianSpec::free_particle(2), 2000, 5.0);
  EXPECT_EQ(rep.max_ratio, 0.0);
  EXPECT_TRUE(rep.holds);
}

TEST(GrowthBound, CosPotentialBelowHalf) {
  const auto rep = check_growth_bound(cos_potential(), 20000, 10.0);
  EXPECT_LE(rep.max_ratio, 0.5);
  EXPECT_GT(rep.max_ratio, 0.45);
  EXPECT_TRUE(rep.holds);
}

TEST(GrowthBound, AdvectionMatchesDenseGridMaximum) {
  // v = 2 + sin q gives -p dH/dq = -p^2 cos q
  const double radius = 3.0;
  const auto spec = HamiltonianSpec::advection({TrigSeries(1, {{{0}, 2.0, 0.0}, {{1}, 0.0, 1.0}})}, 1.0);
  double dense = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double q = kTwoPi * i / 2000.0;
    for (int j = 0; j <= 2000; ++j) {
      const double p = -radius + 2.0 * radius * j / 2000.0;
      dense = std::max(dense, -p * p * std::cos(q) / (1.0 + p * p));
    }
  }
  EXPECT_NEAR(dense, 0.9, 1e-6);  // radius^2 / (1 + radius^2)
  const auto rep = check_growth_bound(spec, 50000, radius);
  EXPECT_LE(rep.max_ratio, dense + 1e-12);
  EXPECT_GT(rep.max_ratio, dense - 2e-2);
  EXPECT_TRUE(rep.holds);

  auto tight = spec;
  tight.growth_constant = 0.5;
  EXPECT_FALSE(check_growth_bound(tight, 50000, radius).holds);
}

TEST(InitialData, Examples) {
  auto v = eval_u0(InitialData::sine(1, 4), TorusPoint{pi / 2});
  EXPECT_NEAR(v.value, 1.0, 1e-15);
  EXPECT_NEAR(v.gradient[0], 0.0, 1e-15);

  v = eval_u0(InitialData::constant(2, 0.0, 4), TorusPoint{1.0, 2.0});
  EXPECT_EQ(v.value, 0.0);
  EXPECT_EQ(v.gradient, (Vec{0.0, 0.0}));

  v = eval_u0(InitialData::from_terms(2, {{{1, 0}, 1.0, 0.0}, {{0, 2}, 0.0, 1.0}}, 4), TorusPoint{0.0, 0.0});
  EXPECT_NEAR(v.value, 1.0, 1e-15);
  EXPECT_NEAR(v.gradient[0], 0.0, 1e-15);
  EXPECT_NEAR(v.gradient[1], 2.0, 1e-15);
}

TEST(InitialData, GradientIsAnalytic) {
  const auto u0 = InitialData::from_terms(2, {{{1, 2}, 0.4, -1.1}, {{3, 0}, 0.0, 0.5}}, 4);
  const double step = 1e-6;
  for (double a : {0.1, 1.9, 4.4}) {
    for (double b : {0.3, 3.0, 5.9}) {
      const auto v = eval_u0(u0, TorusPoint{a, b});
      const double fa = (eval_u0(u0, TorusPoint{a + step, b}).value - eval_u0(u0, TorusPoint{a - step, b}).value) / (2 * step);
      const double fb = (eval_u0(u0, TorusPoint{a, b + step}).value - eval_u0(u0, TorusPoint{a, b - step}).value) / (2 * step);
      EXPECT_NEAR(v.gradient[0], fa, 1e-8);
      EXPECT_NEAR(v.gradient[1], fb, 1e-8);
    }
  }
}

TEST(HamiltonianSpec, ValidationRejectsMismatchedVelocity) {
  auto spec = HamiltonianSpec::constant_advection(2, 1.0);
  spec.velocity.pop_back();
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(HamiltonianSpec, KindNamesRoundTrip) {
  for (auto k : {HamiltonianKind::FreeParticle, HamiltonianKind::KineticPlusPotential, HamiltonianKind::Advection})
    EXPECT_EQ(hamiltonian_kind_from_string(to_string(k)), k);
  EXPECT_THROW(hamiltonian_kind_from_string("quartic"), std::invalid_argument);
}

TEST(Halton, RadicalInverse) {
  EXPECT_DOUBLE_EQ(radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(radical_inverse(3, 2), 0.75);
  EXPECT_NEAR(radical_inverse(5, 3), 7.0 / 9.0, 1e-15);
  EXPECT_EQ(first_primes(5), (std::vector<std::uint32_t>{2, 3, 5, 7, 11}));
}
