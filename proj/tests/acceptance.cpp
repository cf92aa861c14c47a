// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "hjnet/bench.hpp"

using namespace hjnet;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

ProblemSetup free_sine() {
  ProblemSetup p;
  p.spec = HamiltonianSpec::free_particle(1);
  p.u0 = InitialData::sine(1, 4);
  p.t = 0.3;
  return p;
}

ConvergenceReport convergence(int r) {
  ConvergenceSettings s;
  s.problem = free_sine();
  s.r = r;
  s.grids = {16, 32, 64, 128};
  return run_convergence(s);
}

// Coarsest N from which every later pair of grids shows local order >= r - 0.5.
std::string coarsest_asymptotic(const ConvergenceReport& rep, int r) {
  for (std::size_t start = 0; start + 1 < rep.rows.size(); ++start) {
    bool ok = true;
    for (std::size_t i = start; i + 1 < rep.rows.size(); ++i) {
      const double local = std::log(rep.rows[i].sup_error / rep.rows[i + 1].sup_error) /
                           std::log(rep.rows[i].h / rep.rows[i + 1].h);
      ok = ok && local >= r - 0.5;
    }
    if (ok) return std::to_string(rep.rows[start].n);
  }
  return "none";
}

std::string errors_of(const ConvergenceReport& rep) {
  std::string s;
  for (const auto& row : rep.rows) s += (s.empty() ? "" : ",") + fmt(row.sup_error);
  return s;
}

Outcome a1() {
  const auto start = std::chrono::steady_clock::now();
  const auto rep = convergence(4);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double slope = rep.fitted_slope.value_or(0.0);
  return {rep.complete() && rep.rows.size() == 4 && slope >= 3.5 && secs <= 60.0,
          "slope=" + fmt(slope) + " errors=[" + errors_of(rep) + "] runtime=" + fmt(secs) +
              "s asymptotic_from_N=" + coarsest_asymptotic(rep, 4)};
}

Outcome a2() {
  const auto r2 = convergence(2), r3 = convergence(3);
  const double s2 = r2.fitted_slope.value_or(0.0), s3 = r3.fitted_slope.value_or(0.0);
  return {r2.complete() && r3.complete() && s2 >= 1.5 && s3 >= 2.5,
          "slope(r=2)=" + fmt(s2) + " slope(r=3)=" + fmt(s3) + " asymptotic_from_N(r=2)=" +
              coarsest_asymptotic(r2, 2) + " (r=3)=" + coarsest_asymptotic(r3, 3)};
}

Outcome a3() {
  PipelineConfig c;
  c.n_per_axis = 64;
  c.t = 1.0;
  c.r = 4;
  c.integrator = IntegratorConfig{1e-2, 0.0};
  const auto sol = hjnet_solve(HamiltonianSpec::constant_advection(1, 1.0), InitialData::sine(1, 4), c);
  const double err = sup_error_against([&](const TorusPoint& q) { return sol(q); },
                                       [](const TorusPoint& q) { return std::sin(q[0] - 1.0); }, 1, 512);
  return {err <= 1e-3, "sup_error=" + fmt(err)};
}

Outcome a4() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  int checked = 0, failed = 0;
  double worst_rho = 1e9, worst_h3 = 0.0, worst_rho3 = 0.0;
  for (std::size_t d : {1u, 2u}) {
    for (int set = 0; set < 20; ++set) {
      PointSet q(d, {});
      const std::size_t n = d == 1 ? 60 + 10 * set : 100 + 10 * set;
      for (std::size_t i = 0; i < n; ++i) {
        Vec c(d);
        for (auto& x : c) x = u(rng);
        q.points.emplace_back(std::move(c));
      }
      const auto hq = fill_distance_estimate(q);
      const auto kept = prune(q, hq.value);
      const auto hp = fill_distance_estimate(kept.points);
      const double rho = separation_distance(kept.points);
      const double slack = hq.probe_error + hp.probe_error + 1e-12;
      const bool ok = rho >= hq.value * (1 - 1e-9) - slack && hp.value <= 3 * hq.value + slack &&
                      hp.value <= 3 * rho + slack;
      worst_rho = std::min(worst_rho, rho / hq.value);
      worst_h3 = std::max(worst_h3, hp.value / hq.value);
      worst_rho3 = std::max(worst_rho3, hp.value / rho);
      ++checked;
      failed += ok ? 0 : 1;
    }
  }
  return {failed == 0, std::to_string(checked) + " sets, min rho'/h=" + fmt(worst_rho) + " max h'/h=" +
                           fmt(worst_h3) + " max h'/rho'=" + fmt(worst_rho3)};
}

Outcome a5() {
  // the same injected pattern, scaled to rho = eps = h^r, at fixed delta and on pipeline images
  bool pass = true;
  std::string detail;
  const MlsConfig cfg{3, MlsConfig::default_gamma(3)};
  const auto spec = HamiltonianSpec::free_particle(1);
  const auto u0 = InitialData::sine(1, 4);
  for (std::size_t n : {32u, 64u}) {
    const double h = pi / double(n), eps = std::pow(h, 4);
    std::mt19937_64 rng(5 + n);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> dq(n), dv(n);
    for (std::size_t i = 0; i < n; ++i) {
      dq[i] = u(rng);
      dv[i] = u(rng);
    }
    const auto grid = make_uniform_grid(1, n);
    auto fixed_delta = [&](double s) {
      PointSet q(1, {});
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i) {
        q.points.push_back(TorusPoint{grid[i][0] + s * dq[i]});
        v.push_back(std::sin(grid[i][0]) + s * dv[i]);
      }
      const MlsEvaluator eval(q, v, cfg, cfg.gamma * h);
      double e = 0.0;
      for (const auto& x : lattice_points(1, 8 * n)) e = std::max(e, std::abs(eval(x) - std::sin(x[0])));
      return e;
    };
    const double m0 = fixed_delta(0.0), m1 = fixed_delta(eps);

    PipelineConfig pc;
    pc.n_per_axis = n;
    pc.t = 0.3;
    pc.integrator = IntegratorConfig{1e-2, 0.0};
    const auto sol = hjnet_solve(spec, u0, pc);
    const auto probes = lattice_points(1, 8 * n);
    const auto truth = oracle_solve(spec, u0, 0.3, probes, pc.integrator);
    const auto imgs = sol.image_points();
    auto pipeline = [&](double s) {
      PointSet q(1, {});
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i) {
        q.points.push_back(TorusPoint{imgs[i][0] + s * dq[i]});
        v.push_back(sol.pushed()[i].z + s * dv[i]);
      }
      const auto rec = reconstruct(q, v, 4, MlsConfig::default_gamma(3));
      double e = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i) e = std::max(e, std::abs(rec(probes[i]) - truth[i]));
      return e;
    };
    const double p0 = pipeline(0.0), p1 = pipeline(eps);
    pass = pass && m1 <= 4 * m0 && p1 <= 4 * p0;
    detail += "N=" + std::to_string(n) + " mls " + fmt(m1) + "/" + fmt(m0) + "=" + fmt(m1 / m0) + " pipeline " +
              fmt(p1) + "/" + fmt(p0) + "=" + fmt(p1 / p0) + "; ";
  }
  return {pass, detail};
}

Outcome a6() {
  const auto spec = HamiltonianSpec::pendulum();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double drift = 0.0, defect = 0.0, bound_excess = -1e9;
  for (int i = 0; i < 20; ++i) {
    const PhaseState s0{TorusPoint{kTwoPi * u(rng)}, {4 * u(rng) - 2}, 0.0};
    const auto s = integrate_flow(spec, s0, IntegratorConfig{1e-3, 1.0});
    drift = std::max(drift, std::abs(eval_h(spec, s.q, s.p) - eval_h(spec, s0.q, s0.p)));
    const double t1 = u(rng), t2 = u(rng);
    const auto whole = integrate_flow(spec, s0, IntegratorConfig{1e-3, t1 + t2});
    const auto split = integrate_flow(spec, integrate_flow(spec, s0, IntegratorConfig{1e-3, t1}), IntegratorConfig{1e-3, t2});
    defect = std::max(defect, std::hypot(periodic_distance(whole.q, split.q), whole.p[0] - split.p[0], whole.z - split.z));
  }
  std::vector<PhaseState> starts;
  for (int i = 0; i < 1000; ++i) starts.push_back({TorusPoint{kTwoPi * u(rng)}, {6 * u(rng) - 3}, 0.0});
  const auto ends = integrate_flow_batch(spec, starts, IntegratorConfig{1e-2, 1.0});
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double bound = std::sqrt(1 + starts[i].p[0] * starts[i].p[0]) * std::exp(spec.growth_constant * 1.0);
    bound_excess = std::max(bound_excess, std::abs(ends[i].p[0]) - bound);
  }
  return {drift <= 1e-8 && defect <= 1e-8 && bound_excess <= 1e-9,
          "energy_drift=" + fmt(drift) + " semigroup_defect=" + fmt(defect) + " max(|p_t|-bound)=" + fmt(bound_excess)};
}

Outcome a7() {
  const auto spec = HamiltonianSpec::free_particle(1);
  const auto u0 = InitialData::sine(1, 4);
  const IntegratorConfig cfg{1e-3, 0.0};
  const double t = 0.3, dq = 1e-4;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const TorusPoint q0{kTwoPi * (i + 0.25) / 100.0};
    const auto init = eval_u0(u0, q0);
    const auto s = integrate_flow(spec, PhaseState{q0, init.gradient, init.value}, IntegratorConfig{1e-3, t});
    const auto v = oracle_solve(spec, u0, t, {TorusPoint{s.q[0] - dq}, TorusPoint{s.q[0] + dq}}, cfg);
    worst = std::max(worst, std::abs((v[1] - v[0]) / (2 * dq) - s.p[0]));
  }
  return {worst <= 1e-3, "max |p_t - grad u| = " + fmt(worst)};
}

Outcome a8() {
  const auto spec = HamiltonianSpec::constant_advection(1, 1.0);
  const auto u0 = InitialData::sine(1, 4);
  const double t = 0.5;
  const IntegratorConfig cfg{1e-2, 0.0};
  const auto data = generate_dataset(spec, t, 16000, 1.0, 7, cfg);
  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.final_lr_fraction = 3e-3;
  tc.batch_size = 32;
  tc.epochs = 200;
  tc.seed = 1;
  const auto net = std::make_shared<const MlpParams>(train_flow_net(data, flow_architecture(1, {64, 64}), tc).params);

  PipelineConfig pc;
  pc.n_per_axis = 64;
  pc.t = t;
  pc.r = 4;
  pc.integrator = cfg;
  const auto exact = hjnet_solve(spec, u0, pc);
  pc.backend = FlowBackend::Surrogate;
  pc.surrogate = net;
  const auto approx = hjnet_solve(spec, u0, pc);

  // surrogate error over a held-out sample of the box and over the states the pipeline pushes
  std::vector<PhaseState> states;
  for (const auto& s : generate_dataset(spec, t, 1000, 1.0, 99, cfg).samples) states.push_back(s.input);
  for (const auto& s : exact.encoded().triples) states.push_back(s);
  const double sur = surrogate_sup_error(*net, spec, states, IntegratorConfig{cfg.dt, t});

  const std::size_t probes = 8 * pc.n_per_axis;
  const double e_exact = sup_error([&](const TorusPoint& q) { return exact(q); }, spec, u0, t, probes, cfg);
  const double e_sur = sup_error([&](const TorusPoint& q) { return approx(q); }, spec, u0, t, probes, cfg);
  const double bound = e_exact + 2 * sur + 1e-6;
  return {e_sur <= bound, "pipeline=" + fmt(e_sur) + " exact=" + fmt(e_exact) + " surrogate=" + fmt(sur) +
                              " bound=" + fmt(bound)};
}

Outcome a9() {
  ProblemSetup p = free_sine();
  const auto rep = run_tstar(p, 64, 1.5, 0.01);
  const auto& ts = rep.sweep.monitor.first_degenerate_time;
  return {ts && *ts >= 0.95 && *ts <= 1.05, "T*=" + (ts ? fmt(*ts) : std::string("none"))};
}

Outcome a10() {
  MlpParams p = init_mlp({1, 3, 1}, 10);
  p.biases[0] << 0.2, -0.1, 0.05;
  p.biases[1] << -0.3;
  Eigen::MatrixXd x(1, 8), y(1, 8);
  for (int i = 0; i < 8; ++i) {
    x(0, i) = -1.5 + 0.4 * i;
    y(0, i) = std::sin(x(0, i));
  }
  const auto lg = mse_loss_and_gradient(p, x, y);
  const Eigen::VectorXd theta = flatten(p);
  Eigen::VectorXd fd(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    MlpParams a = p, b = p;
    Eigen::VectorXd ta = theta, tb = theta;
    ta(i) += 1e-5;
    tb(i) -= 1e-5;
    unflatten(a, ta);
    unflatten(b, tb);
    fd(i) = (mse_loss(a, x, y) - mse_loss(b, x, y)) / 2e-5;
  }
  const double rel = (lg.gradient - fd).norm() / fd.norm();
  return {p.parameter_count() == 10 && rel <= 1e-4,
          std::to_string(p.parameter_count()) + " parameters, relative error=" + fmt(rel)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"A1 convergence r=4", a1},     {"A2 convergence r=2,3", a2}, {"A3 transport", a3},
      {"A4 pruning bounds", a4},      {"A5 perturbation", a5},      {"A6 flow invariants", a6},
      {"A7 gradient transport", a7},  {"A8 surrogate pipeline", a8}, {"A9 T* detection", a9},
      {"A10 gradient check", a10}};
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
