#include "hjnet/hamiltonians.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjnet {

namespace {

double phase(const std::vector<int>& k, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * q[i];
  return s;
}

// Adds scale * grad f(q) into grad and returns f(q).
double accumulate_gradient(const TrigSeries& f, std::span<const double> q, double scale,
                           std::span<double> grad) {
  double value = 0.0;
  for (const auto& term : f.terms()) {
    const double th = phase(term.k, q);
    const double c = std::cos(th);
    const double s = std::sin(th);
    value += term.cos_amp * c + term.sin_amp * s;
    const double dth = -term.cos_amp * s + term.sin_amp * c;
    for (std::size_t i = 0; i < term.k.size(); ++i) grad[i] += scale * dth * term.k[i];
  }
  return value;
}

void accumulate_hessian(const TrigSeries& f, std::span<const double> q, double scale,
                        std::span<double> hess, std::size_t stride, std::size_t offset) {
  for (const auto& term : f.terms()) {
    const double th = phase(term.k, q);
    const double d2 = -term.cos_amp * std::cos(th) - term.sin_amp * std::sin(th);
    for (std::size_t i = 0; i < term.k.size(); ++i)
      for (std::size_t j = 0; j < term.k.size(); ++j)
        hess[(offset + i) * stride + offset + j] += scale * d2 * term.k[i] * term.k[j];
  }
}

double squared_norm(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) s += v * v;
  return s;
}

}  // namespace

TrigSeries::TrigSeries(std::size_t dim, std::vector<TrigTerm> terms)
    : dim_(dim), terms_(std::move(terms)) {
  for (const auto& t : terms_) require_dim(t.k.size(), dim_, "TrigSeries wavevector");
}

TrigSeries TrigSeries::constant(std::size_t dim, double c) {
  if (c == 0.0) return TrigSeries(dim, {});
  return TrigSeries(dim, {TrigTerm{std::vector<int>(dim, 0), c, 0.0}});
}

double TrigSeries::value(std::span<const double> q) const {
  require_dim(q.size(), dim_, "TrigSeries::value");
  double v = 0.0;
  for (const auto& term : terms_) {
    const double th = phase(term.k, q);
    v += term.cos_amp * std::cos(th) + term.sin_amp * std::sin(th);
  }
  return v;
}

double TrigSeries::value_and_gradient(std::span<const double> q, std::span<double> grad) const {
  require_dim(q.size(), dim_, "TrigSeries::value_and_gradient");
  require_dim(grad.size(), dim_, "TrigSeries gradient buffer");
  std::fill(grad.begin(), grad.end(), 0.0);
  return accumulate_gradient(*this, q, 1.0, grad);
}

void TrigSeries::hessian(std::span<const double> q, std::span<double> hess) const {
  require_dim(q.size(), dim_, "TrigSeries::hessian");
  require_dim(hess.size(), dim_ * dim_, "TrigSeries hessian buffer");
  std::fill(hess.begin(), hess.end(), 0.0);
  accumulate_hessian(*this, q, 1.0, hess, dim_, 0);
}

double TrigSeries::coefficient_bound(int order) const {
  double total = 0.0;
  for (const auto& term : terms_) {
    double k2 = 0.0;
    for (int ki : term.k) k2 += double(ki) * ki;
    const double weight = std::max(1.0, std::pow(std::sqrt(k2), order));
    total += (std::abs(term.cos_amp) + std::abs(term.sin_amp)) * weight;
  }
  return total;
}

std::string to_string(HamiltonianKind kind) {
  switch (kind) {
    case HamiltonianKind::FreeParticle: return "free_particle";
    case HamiltonianKind::KineticPlusPotential: return "kinetic_plus_potential";
    case HamiltonianKind::Advection: return "advection";
  }
  return "unknown";
}

HamiltonianKind hamiltonian_kind_from_string(const std::string& name) {
  if (name == "free_particle") return HamiltonianKind::FreeParticle;
  if (name == "kinetic_plus_potential") return HamiltonianKind::KineticPlusPotential;
  if (name == "advection") return HamiltonianKind::Advection;
  throw std::invalid_argument("unknown Hamiltonian kind '" + name + "'");
}

HamiltonianSpec HamiltonianSpec::free_particle(std::size_t d) {
  HamiltonianSpec spec;
  spec.kind = HamiltonianKind::FreeParticle;
  spec.d = d;
  spec.potential = TrigSeries(d, {});
  return spec;
}

HamiltonianSpec HamiltonianSpec::kinetic_plus_potential(TrigSeries potential,
                                                        double growth_constant) {
  HamiltonianSpec spec;
  spec.kind = HamiltonianKind::KineticPlusPotential;
  spec.d = potential.dim();
  spec.potential = std::move(potential);
  spec.growth_constant = growth_constant;
  return spec;
}

HamiltonianSpec HamiltonianSpec::advection(std::vector<TrigSeries> velocity,
                                           double growth_constant) {
  HamiltonianSpec spec;
  spec.kind = HamiltonianKind::Advection;
  spec.d = velocity.size();
  spec.potential = TrigSeries(spec.d, {});
  spec.velocity = std::move(velocity);
  spec.growth_constant = growth_constant;
  spec.validate();
  return spec;
}

HamiltonianSpec HamiltonianSpec::pendulum() {
  return kinetic_plus_potential(TrigSeries(1, {TrigTerm{{1}, 1.0, 0.0}}), 0.5);
}

HamiltonianSpec HamiltonianSpec::constant_advection(std::size_t d, double c) {
  std::vector<TrigSeries> v(d, TrigSeries::constant(d, c));
  return advection(std::move(v), 0.0);
}

void HamiltonianSpec::validate() const {
  if (d == 0) throw std::invalid_argument("HamiltonianSpec: dimension must be positive");
  if (growth_constant < 0.0) throw std::invalid_argument("HamiltonianSpec: growth_constant < 0");
  if (kind == HamiltonianKind::KineticPlusPotential) require_dim(potential.dim(), d, "potential");
  if (kind == HamiltonianKind::Advection) {
    require_dim(velocity.size(), d, "advection velocity components");
    for (const auto& v : velocity) require_dim(v.dim(), d, "advection velocity");
  }
}

double eval_h(const HamiltonianSpec& spec, std::span<const double> q, std::span<const double> p) {
  require_dim(q.size(), spec.d, "eval_h q");
  require_dim(p.size(), spec.d, "eval_h p");
  switch (spec.kind) {
    case HamiltonianKind::FreeParticle:
      return 0.5 * squared_norm(p);
    case HamiltonianKind::KineticPlusPotential:
      return 0.5 * squared_norm(p) + spec.potential.value(q);
    case HamiltonianKind::Advection: {
      double h = 0.0;
      for (std::size_t i = 0; i < spec.d; ++i) h += spec.velocity[i].value(q) * p[i];
      return h;
    }
  }
  return 0.0;
}

double eval_h(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p) {
  return eval_h(spec, q.span(), p);
}

void grad_h_into(const HamiltonianSpec& spec, std::span<const double> q,
                 std::span<const double> p, std::span<double> dq, std::span<double> dp) {
  require_dim(q.size(), spec.d, "grad_h q");
  require_dim(p.size(), spec.d, "grad_h p");
  std::fill(dq.begin(), dq.end(), 0.0);
  switch (spec.kind) {
    case HamiltonianKind::FreeParticle:
      std::copy(p.begin(), p.end(), dp.begin());
      break;
    case HamiltonianKind::KineticPlusPotential:
      accumulate_gradient(spec.potential, q, 1.0, dq);
      std::copy(p.begin(), p.end(), dp.begin());
      break;
    case HamiltonianKind::Advection:
      for (std::size_t i = 0; i < spec.d; ++i)
        dp[i] = accumulate_gradient(spec.velocity[i], q, p[i], dq);
      break;
  }
}

HamiltonianGradient grad_h(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p) {
  HamiltonianGradient g{Vec(spec.d), Vec(spec.d)};
  grad_h_into(spec, q.span(), p, g.dq, g.dp);
  return g;
}

double lagrangian(const HamiltonianSpec& spec, const TorusPoint& q, const Vec& p) {
  const auto g = grad_h(spec, q, p);
  double pv = 0.0;
  for (std::size_t i = 0; i < spec.d; ++i) pv += p[i] * g.dp[i];
  return pv - eval_h(spec, q, p);
}

std::vector<double> hessian_h(const HamiltonianSpec& spec, std::span<const double> q,
                              std::span<const double> p) {
  require_dim(q.size(), spec.d, "hessian_h q");
  require_dim(p.size(), spec.d, "hessian_h p");
  const std::size_t n = 2 * spec.d;
  std::vector<double> hess(n * n, 0.0);
  if (spec.kind != HamiltonianKind::Advection) {
    for (std::size_t i = 0; i < spec.d; ++i) hess[(spec.d + i) * n + spec.d + i] = 1.0;
    if (spec.kind == HamiltonianKind::KineticPlusPotential)
      accumulate_hessian(spec.potential, q, 1.0, hess, n, 0);
    return hess;
  }
  Vec grad(spec.d);
  for (std::size_t j = 0; j < spec.d; ++j) {
    accumulate_hessian(spec.velocity[j], q, p[j], hess, n, 0);
    spec.velocity[j].value_and_gradient(q, grad);
    for (std::size_t i = 0; i < spec.d; ++i) {
      // d^2 H / dq_i dp_j = d v_j / dq_i
      hess[i * n + spec.d + j] = grad[i];
      hess[(spec.d + j) * n + i] = grad[i];
    }
  }
  return hess;
}

std::vector<std::uint32_t> first_primes(std::size_t n) {
  std::vector<std::uint32_t> primes;
  for (std::uint32_t c = 2; primes.size() < n; ++c) {
    bool prime = true;
    for (auto p : primes) {
      if (p * p > c) break;
      if (c % p == 0) { prime = false; break; }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * double(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

GrowthReport check_growth_bound(const HamiltonianSpec& spec, std::size_t sample_count,
                                double p_radius) {
  if (sample_count == 0) throw std::invalid_argument("check_growth_bound: sample_count must be >= 1");
  const std::size_t d = spec.d;
  const auto bases = first_primes(2 * d);
  Vec q(d), p(d), dq(d), dp(d);
  GrowthReport report;
  report.max_ratio = -std::numeric_limits<double>::infinity();
  std::size_t accepted = 0;
  for (std::uint64_t idx = 1; accepted < sample_count; ++idx) {
    for (std::size_t i = 0; i < d; ++i) q[i] = kTwoPi * radical_inverse(idx, bases[i]);
    for (std::size_t i = 0; i < d; ++i)
      p[i] = p_radius * (2.0 * radical_inverse(idx, bases[d + i]) - 1.0);
    if (squared_norm(p) > p_radius * p_radius) continue;
    ++accepted;
    grad_h_into(spec, q, p, dq, dp);
    double num = 0.0;
    for (std::size_t i = 0; i < d; ++i) num -= p[i] * dq[i];
    report.max_ratio = std::max(report.max_ratio, num / (1.0 + squared_norm(p)));
  }
  report.holds = report.max_ratio <= spec.growth_constant;
  return report;
}

InitialData InitialData::from_terms(std::size_t d, std::vector<TrigTerm> terms, int regularity_r) {
  InitialData u0;
  u0.d = d;
  u0.series = TrigSeries(d, std::move(terms));
  u0.regularity_r = regularity_r;
  u0.validate();
  return u0;
}

InitialData InitialData::sine(std::size_t d, int regularity_r, double amplitude) {
  std::vector<int> k(d, 0);
  k[0] = 1;
  return from_terms(d, {TrigTerm{k, 0.0, amplitude}}, regularity_r);
}

InitialData InitialData::constant(std::size_t d, double c, int regularity_r) {
  InitialData u0;
  u0.d = d;
  u0.series = TrigSeries::constant(d, c);
  u0.regularity_r = regularity_r;
  u0.validate();
  return u0;
}

void InitialData::validate() const {
  if (d == 0) throw std::invalid_argument("InitialData: dimension must be positive");
  require_dim(series.dim(), d, "InitialData series");
  if (regularity_r < 2) throw std::invalid_argument("InitialData: regularity_r must be >= 2");
}

InitialValue eval_u0(const InitialData& u0, const TorusPoint& q) {
  InitialValue out{0.0, Vec(u0.d)};
  out.value = u0.series.value_and_gradient(q.span(), out.gradient);
  return out;
}

}  // namespace hjnet
