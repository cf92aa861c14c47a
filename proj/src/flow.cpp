#include "hjnet/flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>

namespace hjnet {

namespace {

// Scratch space for one trajectory; y = (q unwrapped, p, z).
struct Rk4Workspace {
  explicit Rk4Workspace(std::size_t d)
      : d(d), y(2 * d + 1), tmp(2 * d + 1), k1(2 * d + 1), k2(2 * d + 1), k3(2 * d + 1),
        k4(2 * d + 1), dq(d), dp(d) {}

  std::size_t d;
  Vec y, tmp, k1, k2, k3, k4, dq, dp;
};

void rhs(const HamiltonianSpec& spec, std::span<const double> y, std::span<double> out,
         Rk4Workspace& ws) {
  const std::size_t d = ws.d;
  const auto q = y.subspan(0, d);
  const auto p = y.subspan(d, d);
  grad_h_into(spec, q, p, ws.dq, ws.dp);
  double pv = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = ws.dp[i];
    out[d + i] = -ws.dq[i];
    pv += p[i] * ws.dp[i];
  }
  out[2 * d] = pv - eval_h(spec, q, p);
}

void rk4_step(const HamiltonianSpec& spec, double h, Rk4Workspace& ws) {
  const std::size_t n = ws.y.size();
  rhs(spec, ws.y, ws.k1, ws);
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = ws.y[i] + 0.5 * h * ws.k1[i];
  rhs(spec, ws.tmp, ws.k2, ws);
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = ws.y[i] + 0.5 * h * ws.k2[i];
  rhs(spec, ws.tmp, ws.k3, ws);
  for (std::size_t i = 0; i < n; ++i) ws.tmp[i] = ws.y[i] + h * ws.k3[i];
  rhs(spec, ws.tmp, ws.k4, ws);
  for (std::size_t i = 0; i < n; ++i)
    ws.y[i] += h / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
}

void load_state(const HamiltonianSpec& spec, const PhaseState& s, Rk4Workspace& ws) {
  require_dim(s.q.dim(), spec.d, "PhaseState q");
  require_dim(s.p.size(), spec.d, "PhaseState p");
  std::copy(s.q.coords().begin(), s.q.coords().end(), ws.y.begin());
  std::copy(s.p.begin(), s.p.end(), ws.y.begin() + spec.d);
  ws.y[2 * spec.d] = s.z;
}

PhaseState store_state(const Rk4Workspace& ws) {
  const std::size_t d = ws.d;
  return PhaseState{TorusPoint(Vec(ws.y.begin(), ws.y.begin() + d)),
                    Vec(ws.y.begin() + d, ws.y.begin() + 2 * d), ws.y[2 * d]};
}

bool all_finite(const Vec& y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

// Calls visit(t) after every step.
template <typename Visit>
void run_rk4(const HamiltonianSpec& spec, const IntegratorConfig& cfg, Rk4Workspace& ws,
             Visit&& visit) {
  const std::size_t steps = cfg.step_count();
  const double dt = std::min(cfg.dt, cfg.t_final);
  double t = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const double h = (s + 1 == steps) ? cfg.t_final - dt * double(s) : dt;
    rk4_step(spec, h, ws);
    t = (s + 1 == steps) ? cfg.t_final : dt * double(s + 1);
    if (!all_finite(ws.y)) throw IntegrationError("non-finite state in RK4 integration", t);
    visit(t);
  }
}

double solve_det(std::span<const double> jac, std::size_t d) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(
      jac.data(), Eigen::Index(d), Eigen::Index(d));
  return J.determinant();
}

double residual_norm(const TorusPoint& image, const TorusPoint& target) {
  return periodic_distance(image, target);
}

}  // namespace

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be positive");
  if (!(t_final >= 0.0)) throw std::invalid_argument("IntegratorConfig: t_final must be >= 0");
}

std::size_t IntegratorConfig::step_count() const {
  if (t_final <= 0.0) return 0;
  // guard against t/dt = 1000.0000000000001 producing a spurious sliver step
  const double ratio = t_final / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return std::max<std::size_t>(1, std::size_t(rounded));
  return std::size_t(std::ceil(ratio));
}

PhaseState integrate_flow(const HamiltonianSpec& spec, const PhaseState& s0,
                          const IntegratorConfig& cfg) {
  cfg.validate();
  Rk4Workspace ws(spec.d);
  load_state(spec, s0, ws);
  run_rk4(spec, cfg, ws, [](double) {});
  return store_state(ws);
}

std::vector<PhaseState> integrate_flow_batch(const HamiltonianSpec& spec,
                                             const std::vector<PhaseState>& states,
                                             const IntegratorConfig& cfg, unsigned threads) {
  cfg.validate();
  std::vector<PhaseState> out(states.size());
  const std::size_t n = states.size();
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(1, n))));
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::size_t> failed_at(threads, n);

  auto work = [&](unsigned worker) {
    const std::size_t begin = n * worker / threads;
    const std::size_t end = n * (worker + 1) / threads;
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out[i] = integrate_flow(spec, states[i], cfg);
      } catch (...) {
        errors[worker] = std::current_exception();
        failed_at[worker] = i;
        return;
      }
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }

  for (unsigned w = 0; w < threads; ++w) {
    if (!errors[w]) continue;
    try {
      std::rethrow_exception(errors[w]);
    } catch (const IntegrationError& e) {
      throw IntegrationError(std::string(e.what()) + " (batch index " +
                                 std::to_string(failed_at[w]) + ")",
                             e.time(), failed_at[w]);
    }
  }
  return out;
}

std::vector<TrajectorySample> integrate_trajectory(const HamiltonianSpec& spec,
                                                   const PhaseState& s0,
                                                   const IntegratorConfig& cfg) {
  cfg.validate();
  Rk4Workspace ws(spec.d);
  load_state(spec, s0, ws);
  std::vector<TrajectorySample> samples{{0.0, store_state(ws)}};
  run_rk4(spec, cfg, ws, [&](double t) { samples.push_back({t, store_state(ws)}); });
  return samples;
}

void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples) {
  if (samples.empty()) return;
  const std::size_t d = samples.front().state.p.size();
  os << "t";
  for (std::size_t i = 1; i <= d; ++i) os << ",q" << i;
  for (std::size_t i = 1; i <= d; ++i) os << ",p" << i;
  os << ",z\n";
  const auto old_precision = os.precision(17);
  for (const auto& s : samples) {
    os << s.t;
    for (double v : s.state.q.coords()) os << ',' << v;
    for (double v : s.state.p) os << ',' << v;
    os << ',' << s.state.z << '\n';
  }
  os.precision(old_precision);
}

TorusPoint spatial_characteristic(const HamiltonianSpec& spec, const InitialData& u0,
                                  const TorusPoint& q0, double t, const IntegratorConfig& cfg) {
  if (t < 0.0) throw std::invalid_argument("spatial_characteristic: t must be >= 0");
  require_dim(q0.dim(), spec.d, "spatial_characteristic q0");
  const auto init = eval_u0(u0, q0);
  IntegratorConfig run = cfg;
  run.t_final = t;
  return integrate_flow(spec, PhaseState{q0, init.gradient, 0.0}, run).q;
}

std::vector<double> characteristic_jacobian(const HamiltonianSpec& spec, const InitialData& u0,
                                            const TorusPoint& q0, double t,
                                            const IntegratorConfig& cfg, double step) {
  const std::size_t d = spec.d;
  std::vector<double> jac(d * d);
  for (std::size_t j = 0; j < d; ++j) {
    Vec plus = q0.coords(), minus = q0.coords();
    plus[j] += step;
    minus[j] -= step;
    const auto fp = spatial_characteristic(spec, u0, TorusPoint(plus), t, cfg);
    const auto fm = spatial_characteristic(spec, u0, TorusPoint(minus), t, cfg);
    for (std::size_t i = 0; i < d; ++i) jac[i * d + j] = wrap_signed(fp[i] - fm[i]) / (2.0 * step);
  }
  return jac;
}

double characteristic_jacobian_det(const HamiltonianSpec& spec, const InitialData& u0,
                                   const TorusPoint& q0, double t, const IntegratorConfig& cfg) {
  return solve_det(characteristic_jacobian(spec, u0, q0, t, cfg), spec.d);
}

std::vector<TorusPoint> lattice_points(std::size_t d, std::size_t n) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= n;
  std::vector<TorusPoint> pts;
  pts.reserve(total);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vec coords(d);
    for (std::size_t i = 0; i < d; ++i) coords[i] = kTwoPi * double(idx[i]) / double(n);
    pts.emplace_back(std::move(coords));
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return pts;
}

TorusPoint invert_characteristic(const HamiltonianSpec& spec, const InitialData& u0,
                                 const TorusPoint& q_target, double t,
                                 const IntegratorConfig& cfg, const NewtonOptions& newton) {
  require_dim(q_target.dim(), spec.d, "invert_characteristic target");
  if (t == 0.0) return q_target;
  const std::size_t d = spec.d;

  std::optional<TorusPoint> best;
  double best_res = std::numeric_limits<double>::infinity();

  for (const auto& seed : lattice_points(d, std::size_t(std::max(1, newton.multistart_grid)))) {
    TorusPoint x = seed;
    TorusPoint image = spatial_characteristic(spec, u0, x, t, cfg);
    double res = residual_norm(image, q_target);
    for (int it = 0; it < newton.max_iter && res > newton.tol; ++it) {
      const auto jac = characteristic_jacobian(spec, u0, x, t, cfg);
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(
          jac.data(), Eigen::Index(d), Eigen::Index(d));
      Eigen::VectorXd r(d);
      for (std::size_t i = 0; i < d; ++i) r[Eigen::Index(i)] = wrap_signed(image[i] - q_target[i]);
      const auto lu = J.fullPivLu();
      if (!lu.isInvertible()) break;
      const Eigen::VectorXd step = lu.solve(r);

      double lambda = 1.0;
      bool improved = false;
      for (int halving = 0; halving < 40; ++halving) {
        Vec trial(d);
        for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] - lambda * step[Eigen::Index(i)];
        TorusPoint cand(std::move(trial));
        TorusPoint cand_image = spatial_characteristic(spec, u0, cand, t, cfg);
        const double cand_res = residual_norm(cand_image, q_target);
        if (cand_res < res) {
          x = std::move(cand);
          image = std::move(cand_image);
          res = cand_res;
          improved = true;
          break;
        }
        lambda *= newton.damping;
      }
      if (!improved) break;
    }
    if (res > newton.tol) continue;
    if (!best || res < best_res || (res == best_res && x < *best)) {
      best = x;
      best_res = res;
    }
  }
  if (!best) {
    throw InversionError("characteristic inversion failed at " + to_string(q_target) +
                             " (t beyond T* or multistart grid too coarse)",
                         q_target);
  }
  return *best;
}

std::vector<double> oracle_solve(const HamiltonianSpec& spec, const InitialData& u0, double t,
                                 const std::vector<TorusPoint>& eval_points,
                                 const IntegratorConfig& cfg, const NewtonOptions& newton,
                                 unsigned threads) {
  const std::size_t n = eval_points.size();
  std::vector<double> values(n);
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(1, n))));
  std::vector<std::exception_ptr> errors(threads);

  auto work = [&](unsigned worker) {
    const std::size_t begin = n * worker / threads;
    const std::size_t end = n * (worker + 1) / threads;
    try {
      for (std::size_t i = begin; i < end; ++i) {
        const TorusPoint q0 = invert_characteristic(spec, u0, eval_points[i], t, cfg, newton);
        const auto init = eval_u0(u0, q0);
        IntegratorConfig run = cfg;
        run.t_final = t;
        const auto end_state = integrate_flow(spec, PhaseState{q0, init.gradient, 0.0}, run);
        values[i] = init.value + end_state.z;
      }
    } catch (...) {
      errors[worker] = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return values;
}

TStarSweep sweep_characteristic_det(const HamiltonianSpec& spec, const InitialData& u0,
                                    std::size_t probes_per_axis, double t_max, double t_step,
                                    const IntegratorConfig& cfg) {
  if (!(t_step > 0.0)) throw std::invalid_argument("sweep_characteristic_det: t_step must be > 0");
  const auto probes = lattice_points(spec.d, probes_per_axis);
  TStarSweep sweep;
  const auto steps = std::size_t(std::floor(t_max / t_step + 1e-9));
  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = t_step * double(s);
    double min_det = std::numeric_limits<double>::infinity();
    for (const auto& q0 : probes)
      min_det = std::min(min_det, characteristic_jacobian_det(spec, u0, q0, t, cfg));
    sweep.rows.push_back({t, min_det});
    sweep.monitor.min_jacobian_det = std::min(sweep.monitor.min_jacobian_det, min_det);
    if (!sweep.monitor.first_degenerate_time && min_det <= 0.0) {
      if (s == 0) {
        sweep.monitor.first_degenerate_time = 0.0;
      } else {
        const auto& prev = sweep.rows[s - 1];
        const double frac = prev.min_jacobian_det / (prev.min_jacobian_det - min_det);
        sweep.monitor.first_degenerate_time = prev.t + frac * (t - prev.t);
      }
    }
  }
  return sweep;
}

}  // namespace hjnet
