#pragma once

// Experiment drivers behind the command-line tool: convergence tables,
// surrogate size sweeps, the direct-regression baseline and the T* monitor.
// Every driver returns plain rows; the writers below turn them into CSV
// (with the manifest hash on every row) and self-contained plot scripts.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjnet/pipeline.hpp"

namespace hjnet {

struct ProblemSetup {
  HamiltonianSpec spec;
  InitialData u0;
  double t = 0.0;
  IntegratorConfig integrator{1e-2, 0.0};
  NewtonOptions newton;
};

/// Rows whose error is below this are at the oracle's accuracy floor and are
/// left out of slope fits.
inline constexpr double kSlopeErrorFloor = 1e-12;

/// Ordinary least squares slope of log(err) against log(h); nullopt with
/// fewer than two usable rows.
std::optional<double> fit_loglog_slope(std::span<const double> h, std::span<const double> err);

struct ConvergenceRow {
  std::size_t n = 0;  // points per axis
  double h = 0.0;     // fill distance of the encoding grid
  double sup_error = 0.0;
  double wall_time_s = 0.0;
  bool ok = true;
  std::string status = "ok";
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_slope;
  std::string manifest_hash;

  bool complete() const;
};

struct ConvergenceSettings {
  ProblemSetup problem;
  int r = 4;
  double gamma = 0.0;
  std::vector<std::size_t> grids;
  std::size_t probe_factor = 8;
  unsigned threads = 1;
};

/// Exact-backend pipeline on each grid, sup error against the oracle on a
/// probe lattice probe_factor times finer. Stops at the first failing grid.
ConvergenceReport run_convergence(const ConvergenceSettings& settings);

struct SizeSweepRow {
  std::vector<std::size_t> hidden;
  std::size_t size = 0;
  std::size_t depth = 0;
  std::size_t parameter_count = 0;
  double surrogate_sup_error = 0.0;
  double pipeline_sup_error = 0.0;
  double final_val_loss = 0.0;
  bool ok = true;
  std::string status = "ok";
};

struct SizeSweepReport {
  std::vector<SizeSweepRow> rows;
  /// (2d+1)/r: size ~ eps^{-(2d+1)/r} up to logs, i.e. eps ~ size^{-r/(2d+1)}.
  double reference_exponent = 0.0;
  std::string manifest_hash;

  bool complete() const;
};

struct SizeSweepSettings {
  ProblemSetup problem;
  std::vector<std::vector<std::size_t>> hidden_layers;
  std::size_t n_samples = 4000;
  double box = 1.0;
  std::uint64_t data_seed = 7;
  TrainConfig train;
  std::size_t test_samples = 1000;
  std::uint64_t test_seed = 1234;
  std::size_t pipeline_n = 64;
  int r = 4;
  double gamma = 0.0;
  std::size_t probe_factor = 8;
  unsigned threads = 1;
};

/// Trains one surrogate per architecture; a failed row is recorded and the
/// sweep moves on. Rows come back sorted by network size.
SizeSweepReport run_size_sweep(const SizeSweepSettings& settings);

/// Max phase_distance between surrogate and exact flow over the given states.
double surrogate_sup_error(const MlpParams& params, const HamiltonianSpec& spec,
                           const std::vector<PhaseState>& states, const IntegratorConfig& cfg);

struct BaselineSettings {
  HamiltonianSpec spec;
  double t = 0.3;
  IntegratorConfig integrator{1e-2, 0.0};
  NewtonOptions newton;
  /// u0 = sum over k of a_k cos(k.q) + b_k sin(k.q), a_k, b_k ~ U[-amplitude, amplitude].
  std::vector<std::vector<int>> family_wavevectors{{1}};
  double amplitude = 1.0;
  int r = 4;
  double gamma = 0.0;
  std::size_t n_train_functions = 200;
  std::size_t n_test_functions = 10;
  std::uint64_t family_seed = 11;
  std::size_t grid_n = 32;
  std::size_t probes_per_axis = 64;
  /// Hidden width of both two-layer models; 0 is the bias-only baseline.
  std::vector<std::size_t> widths;
  std::size_t flow_samples = 8000;
  std::uint64_t data_seed = 7;
  TrainConfig train;
  unsigned threads = 1;
};

struct BaselineRow {
  std::string model;  // "direct" or "hjnet"
  std::size_t width = 0;
  std::size_t parameter_count = 0;
  std::size_t size = 0;
  double sup_error = 0.0;
  bool ok = true;
  std::string status = "ok";
};

struct BaselineReport {
  std::vector<BaselineRow> rows;
  std::string manifest_hash;

  bool complete() const;
};

/// Random members of the trigonometric family, drawn in order from one seed.
std::vector<InitialData> sample_initial_family(const BaselineSettings& settings, std::size_t count,
                                               std::uint64_t seed);

/// Hidden width w of [n_in, w, w, n_out] whose parameter count is closest to target.
std::size_t matched_width(std::size_t n_in, std::size_t n_out, std::size_t target_params);

BaselineReport run_baseline(const BaselineSettings& settings);

struct TStarReport {
  TStarSweep sweep;
  std::string manifest_hash;
};

TStarReport run_tstar(const ProblemSetup& problem, std::size_t probes_per_axis, double t_max,
                      double t_step);

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report);
/// Wall-clock times live apart from the numeric table so that reruns of a
/// manifest reproduce the table byte for byte.
void write_convergence_timings_csv(std::ostream& os, const ConvergenceReport& report);
void write_convergence_plot(std::ostream& os, const ConvergenceReport& report, int r);

void write_size_sweep_csv(std::ostream& os, const SizeSweepReport& report);
void write_size_sweep_plot(std::ostream& os, const SizeSweepReport& report);

void write_baseline_csv(std::ostream& os, const BaselineReport& report);
void write_baseline_plot(std::ostream& os, const BaselineReport& report);

void write_tstar_csv(std::ostream& os, const TStarReport& report);

}  // namespace hjnet
