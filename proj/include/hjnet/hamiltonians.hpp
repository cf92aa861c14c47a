#pragma once

// Closed-form periodic Hamiltonians H(q, p) built from trigonometric
// polynomials, their derivatives and Lagrangian, and trigonometric initial
// data u0 with analytic gradients.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hjnet/torus.hpp"

namespace hjnet {

/// One term a*cos(k.q) + b*sin(k.q) of a trigonometric polynomial.
struct TrigTerm {
  std::vector<int> k;
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

/// A real trigonometric polynomial on the torus [0, 2pi)^d.
class TrigSeries {
 public:
  TrigSeries() = default;
  TrigSeries(std::size_t dim, std::vector<TrigTerm> terms);

  /// The constant function c (the k = 0 term).
  static TrigSeries constant(std::size_t dim, double c);

  std::size_t dim() const { return dim_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }

  double value(std::span<const double> q) const;
  /// Writes the gradient into grad (size dim) and returns the value.
  double value_and_gradient(std::span<const double> q, std::span<double> grad) const;
  /// Row-major dim x dim Hessian.
  void hessian(std::span<const double> q, std::span<double> hess) const;

  /// sum |a| + |b| weighted by max(1, |k|^order); bounds the C^order seminorms.
  double coefficient_bound(int order) const;

 private:
  std::size_t dim_ = 0;
  std::vector<TrigTerm> terms_;
};

enum class HamiltonianKind { FreeParticle, KineticPlusPotential, Advection };

std::string to_string(HamiltonianKind kind);
HamiltonianKind hamiltonian_kind_from_string(const std::string& name);

/// H = |p|^2/2 (FreeParticle), |p|^2/2 + V(q) (KineticPlusPotential) or
/// v(q).p (Advection). growth_constant is L_H in
/// sup_q { -p.grad_q H } <= L_H (1 + |p|^2).
struct HamiltonianSpec {
  HamiltonianKind kind = HamiltonianKind::FreeParticle;
  std::size_t d = 1;
  TrigSeries potential;
  std::vector<TrigSeries> velocity;
  double growth_constant = 0.0;

  static HamiltonianSpec free_particle(std::size_t d);
  static HamiltonianSpec kinetic_plus_potential(TrigSeries potential, double growth_constant);
  static HamiltonianSpec advection(std::vector<TrigSeries> velocity, double growth_constant);
  /// H = |p|^2/2 + cos(q) in d = 1, with L_H = 1/2.
  static HamiltonianSpec pendulum();
  /// Advection with constant velocity c in every coordinate, L_H = 0.
  static HamiltonianSpec constant_advection(std::size_t d, double c);

  void validate() const;
};

double eval_h(const HamiltonianSpec& spec, std::span<const double> q, std::span<const double> p);
double eval_h(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p);

struct HamiltonianGradient {
  Vec dq;  // grad_q H
  Vec dp;  // grad_p H
};

/// Allocation-free form for inner loops; dq and dp must have size spec.d.
void grad_h_into(const HamiltonianSpec& spec, std::span<const double> q,
                 std::span<const double> p, std::span<double> dq, std::span<double> dp);
HamiltonianGradient grad_h(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p);

/// L(q, p) = p.grad_p H - H.
double lagrangian(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p);

/// Row-major 2d x 2d Hessian of H in the variables (q, p).
std::vector<double> hessian_h(const HamiltonianSpec& spec, std::span<const double> q,
                              std::span<const double> p);

struct GrowthReport {
  double max_ratio = 0.0;
  bool holds = true;
};

/// Maximises (-p.grad_q H) / (1 + |p|^2) over Halton-distributed (q, p) in
/// the torus times the closed ball of radius p_radius.
GrowthReport check_growth_bound(const HamiltonianSpec& spec, std::size_t sample_count,
                                double p_radius);

/// Trigonometric initial condition. regularity_r is the smoothness order the
/// reconstruction stage is told to assume (n = r - 1).
struct InitialData {
  std::size_t d = 1;
  TrigSeries series;
  int regularity_r = 2;

  static InitialData from_terms(std::size_t d, std::vector<TrigTerm> terms, int regularity_r);
  /// u0 = amplitude * sin(q_1) in dimension d.
  static InitialData sine(std::size_t d, int regularity_r, double amplitude = 1.0);
  static InitialData constant(std::size_t d, double c, int regularity_r);

  void validate() const;
};

struct InitialValue {
  double value = 0.0;
  Vec gradient;
};

InitialValue eval_u0(const InitialData& u0, const TorusPoint& q);

/// First n primes, used as Halton bases.
std::vector<std::uint32_t> first_primes(std::size_t n);
/// Radical inverse of index in the given base, in [0, 1).
double radical_inverse(std::uint64_t index, std::uint32_t base);

}  // namespace hjnet
