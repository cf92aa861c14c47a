#pragma once

// Characteristic flow of the Hamilton-Jacobi equation:
//   q' = grad_p H,  p' = -grad_q H,  z' = p.grad_p H - H.
// Fixed-step RK4 integration, the spatial characteristic map
// q0 -> q_t(q0, grad u0(q0)), its inversion, and the method-of-characteristics
// reference solver built on top of them.

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hjnet/hamiltonians.hpp"

namespace hjnet {

struct PhaseState {
  TorusPoint q;
  Vec p;
  double z = 0.0;

  friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

/// Classical RK4 with fixed step dt; the final step is shortened to land on
/// t_final exactly. dt larger than t_final degenerates to a single step.
struct IntegratorConfig {
  double dt = 1e-3;
  double t_final = 0.0;

  void validate() const;
  std::size_t step_count() const;
};

class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double time, std::size_t index = 0)
      : std::runtime_error(what), time_(time), index_(index) {}
  double time() const { return time_; }
  std::size_t index() const { return index_; }

 private:
  double time_;
  std::size_t index_;
};

PhaseState integrate_flow(const HamiltonianSpec& spec, const PhaseState& s0,
                          const IntegratorConfig& cfg);

/// Elementwise integrate_flow. Work is split across threads but every result
/// is computed by the same sequential code path, so the output does not
/// depend on the thread count. The lowest failing index is reported.
std::vector<PhaseState> integrate_flow_batch(const HamiltonianSpec& spec,
                                             const std::vector<PhaseState>& states,
                                             const IntegratorConfig& cfg,
                                             unsigned threads = 1);

struct TrajectorySample {
  double t;
  PhaseState state;
};

/// Every RK4 step of one trajectory, starting with (0, s0).
std::vector<TrajectorySample> integrate_trajectory(const HamiltonianSpec& spec,
                                                   const PhaseState& s0,
                                                   const IntegratorConfig& cfg);

/// CSV with header t,q1..qd,p1..pd,z.
void write_trajectory_csv(std::ostream& os, const std::vector<TrajectorySample>& samples);

TorusPoint spatial_characteristic(const HamiltonianSpec& spec, const InitialData& u0,
                                  const TorusPoint& q0, double t, const IntegratorConfig& cfg);

/// Central-difference Jacobian of the spatial characteristic map, row-major d x d.
std::vector<double> characteristic_jacobian(const HamiltonianSpec& spec, const InitialData& u0,
                                            const TorusPoint& q0, double t,
                                            const IntegratorConfig& cfg, double step = 1e-5);

double characteristic_jacobian_det(const HamiltonianSpec& spec, const InitialData& u0,
                                   const TorusPoint& q0, double t, const IntegratorConfig& cfg);

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  int multistart_grid = 8;
  double damping = 0.5;
};

class InversionError : public std::runtime_error {
 public:
  InversionError(const std::string& what, TorusPoint target)
      : std::runtime_error(what), target_(std::move(target)) {}
  const TorusPoint& target() const { return target_; }

 private:
  TorusPoint target_;
};

/// Finds q0 with |Phi_t(q0) - q_target| <= tol (periodic metric) by damped
/// Newton from a multistart lattice. Among converged seeds the root with the
/// smallest residual wins, ties going to the lexicographically smallest q0.
TorusPoint invert_characteristic(const HamiltonianSpec& spec, const InitialData& u0,
                                 const TorusPoint& q_target, double t,
                                 const IntegratorConfig& cfg, const NewtonOptions& newton = {});

/// u(q, t) = u0(q0) + integral of L along the characteristic through q0, where
/// q0 is the preimage of q. Valid while characteristics do not cross.
std::vector<double> oracle_solve(const HamiltonianSpec& spec, const InitialData& u0, double t,
                                 const std::vector<TorusPoint>& eval_points,
                                 const IntegratorConfig& cfg, const NewtonOptions& newton = {},
                                 unsigned threads = 1);

struct CharMonitor {
  double min_jacobian_det = 1.0;
  std::optional<double> first_degenerate_time;
};

struct TStarRow {
  double t;
  double min_jacobian_det;
};

struct TStarSweep {
  std::vector<TStarRow> rows;
  CharMonitor monitor;
};

/// Minimum Jacobian determinant over a probe lattice (probes_per_axis^d
/// points) at t = 0, t_step, ..., t_max. The first sign change is located by
/// linear interpolation between the bracketing times.
TStarSweep sweep_characteristic_det(const HamiltonianSpec& spec, const InitialData& u0,
                                    std::size_t probes_per_axis, double t_max, double t_step,
                                    const IntegratorConfig& cfg);

/// Lattice {2 pi k / n}^d in lexicographic order.
std::vector<TorusPoint> lattice_points(std::size_t d, std::size_t n);

}  // namespace hjnet
