#include "hjnet/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "hjnet/csv.hpp"

namespace hjnet {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string join_sizes(const std::vector<std::size_t>& v, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::string python_list(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
  return out + "]";
}

Eigen::MatrixXd columns_from(const std::vector<std::vector<double>>& cols) {
  const auto rows = cols.empty() ? 0 : cols.front().size();
  Eigen::MatrixXd m(Eigen::Index(rows), Eigen::Index(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows; ++r) m(Eigen::Index(r), Eigen::Index(c)) = cols[c][r];
  return m;
}

std::size_t two_layer_params(std::size_t n_in, std::size_t w, std::size_t n_out) {
  return n_in * w + w + w * w + w + w * n_out + n_out;
}

}  // namespace

std::optional<double> fit_loglog_slope(std::span<const double> h, std::span<const double> err) {
  require_dim(err.size(), h.size(), "fit_loglog_slope");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(err[i] >= kSlopeErrorFloor) || !(h[i] > 0.0)) continue;
    x.push_back(std::log(h[i]));
    y.push_back(std::log(err[i]));
  }
  if (x.size() < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

bool ConvergenceReport::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
}

bool SizeSweepReport::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
}

bool BaselineReport::complete() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.ok; });
}

ConvergenceReport run_convergence(const ConvergenceSettings& settings) {
  const auto& prob = settings.problem;
  std::vector<std::size_t> grids = settings.grids;
  std::sort(grids.begin(), grids.end());
  grids.erase(std::unique(grids.begin(), grids.end()), grids.end());

  ConvergenceReport report;
  for (std::size_t n : grids) {
    ConvergenceRow row;
    row.n = n;
    row.h = std::numbers::pi * std::sqrt(double(prob.spec.d)) / double(n);
    const auto start = std::chrono::steady_clock::now();
    try {
      PipelineConfig pcfg;
      pcfg.n_per_axis = n;
      pcfg.t = prob.t;
      pcfg.r = settings.r;
      pcfg.gamma = settings.gamma;
      pcfg.integrator = prob.integrator;
      pcfg.threads = settings.threads;
      const auto solution = hjnet_solve(prob.spec, prob.u0, pcfg);
      row.sup_error = sup_error([&](const TorusPoint& q) { return solution(q); }, prob.spec, prob.u0,
                                prob.t, settings.probe_factor * n, prob.integrator, prob.newton,
                                settings.threads);
    } catch (const std::exception& e) {
      row.ok = false;
      row.status = std::string("failed at N=") + std::to_string(n) + ": " + e.what();
    }
    row.wall_time_s = seconds_since(start);
    report.rows.push_back(row);
    if (!row.ok) break;
  }
  std::vector<double> hs, errs;
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    hs.push_back(r.h);
    errs.push_back(r.sup_error);
  }
  report.fitted_slope = fit_loglog_slope(hs, errs);
  return report;
}

double surrogate_sup_error(const MlpParams& params, const HamiltonianSpec& spec,
                           const std::vector<PhaseState>& states, const IntegratorConfig& cfg) {
  const auto exact = integrate_flow_batch(spec, states, cfg);
  const auto approx = surrogate_flow(params, states);
  double worst = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    worst = std::max(worst, phase_distance(approx[i], exact[i]));
  return worst;
}

SizeSweepReport run_size_sweep(const SizeSweepSettings& settings) {
  const auto& prob = settings.problem;
  SizeSweepReport report;
  report.reference_exponent = double(2 * prob.spec.d + 1) / double(settings.r);
  if (settings.hidden_layers.empty()) return report;

  const auto train_set = generate_dataset(prob.spec, prob.t, settings.n_samples, settings.box,
                                          settings.data_seed, prob.integrator, settings.threads);
  const auto test_set = generate_dataset(prob.spec, prob.t, settings.test_samples, settings.box,
                                         settings.test_seed, prob.integrator, settings.threads);
  std::vector<PhaseState> test_inputs;
  for (const auto& s : test_set.samples) test_inputs.push_back(s.input);
  IntegratorConfig run = prob.integrator;
  run.t_final = prob.t;

  for (const auto& hidden : settings.hidden_layers) {
    SizeSweepRow row;
    row.hidden = hidden;
    row.depth = hidden.size();
    try {
      const auto trained = train_flow_net(train_set, flow_architecture(prob.spec.d, hidden), settings.train);
      const auto model = std::make_shared<const MlpParams>(trained.params);
      row.size = network_size(*model);
      row.depth = network_depth(*model);
      row.parameter_count = model->parameter_count();
      row.final_val_loss = trained.final_val_loss;
      row.surrogate_sup_error = surrogate_sup_error(*model, prob.spec, test_inputs, run);

      PipelineConfig pcfg;
      pcfg.n_per_axis = settings.pipeline_n;
      pcfg.t = prob.t;
      pcfg.r = settings.r;
      pcfg.gamma = settings.gamma;
      pcfg.backend = FlowBackend::Surrogate;
      pcfg.surrogate = model;
      pcfg.integrator = prob.integrator;
      const auto solution = hjnet_solve(prob.spec, prob.u0, pcfg);
      row.pipeline_sup_error =
          sup_error([&](const TorusPoint& q) { return solution(q); }, prob.spec, prob.u0, prob.t,
                    settings.probe_factor * settings.pipeline_n, prob.integrator, prob.newton,
                    settings.threads);
    } catch (const std::exception& e) {
      row.ok = false;
      row.status = std::string("failed: ") + e.what();
    }
    report.rows.push_back(row);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const auto& a, const auto& b) { return a.size < b.size; });
  return report;
}

std::vector<InitialData> sample_initial_family(const BaselineSettings& settings, std::size_t count,
                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-settings.amplitude, settings.amplitude);
  std::vector<InitialData> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<TrigTerm> terms;
    for (const auto& k : settings.family_wavevectors) {
      const double a = coeff(rng);
      const double b = coeff(rng);
      terms.push_back(TrigTerm{k, a, b});
    }
    out.push_back(InitialData::from_terms(settings.spec.d, std::move(terms), settings.r));
  }
  return out;
}

std::size_t matched_width(std::size_t n_in, std::size_t n_out, std::size_t target_params) {
  std::size_t best = 1;
  std::size_t best_gap = std::numeric_limits<std::size_t>::max();
  for (std::size_t w = 1; w <= 4096; ++w) {
    const std::size_t p = two_layer_params(n_in, w, n_out);
    const std::size_t gap = p > target_params ? p - target_params : target_params - p;
    if (gap < best_gap) {
      best_gap = gap;
      best = w;
    }
    if (p > target_params) break;
  }
  return best;
}

BaselineReport run_baseline(const BaselineSettings& settings) {
  BaselineReport report;
  const std::size_t d = settings.spec.d;
  const auto grid = make_uniform_grid(d, settings.grid_n);
  const auto probes = lattice_points(d, settings.probes_per_axis);
  const auto train_fns = sample_initial_family(settings, settings.n_train_functions, settings.family_seed);
  const auto test_fns = sample_initial_family(settings, settings.n_test_functions, settings.family_seed + 1);

  auto encode_values = [&](const InitialData& u0) {
    std::vector<double> v;
    v.reserve(grid.size());
    for (const auto& q : grid.points) v.push_back(eval_u0(u0, q).value);
    return v;
  };
  auto truth = [&](const InitialData& u0) {
    return oracle_solve(settings.spec, u0, settings.t, probes, settings.integrator, settings.newton,
                        settings.threads);
  };

  std::vector<std::vector<double>> x_all, t_all, x_test, t_test;
  for (const auto& u0 : train_fns) {
    x_all.push_back(encode_values(u0));
    t_all.push_back(truth(u0));
  }
  for (const auto& u0 : test_fns) {
    x_test.push_back(encode_values(u0));
    t_test.push_back(truth(u0));
  }
  const std::size_t n_val = std::max<std::size_t>(
      1, std::size_t(std::round(settings.train.validation_fraction * double(x_all.size()))));
  const std::size_t n_fit = x_all.size() - std::min(n_val, x_all.size() - 1);
  const Eigen::MatrixXd xt = columns_from({x_all.begin(), x_all.begin() + std::ptrdiff_t(n_fit)});
  const Eigen::MatrixXd tt = columns_from({t_all.begin(), t_all.begin() + std::ptrdiff_t(n_fit)});
  const Eigen::MatrixXd xv = columns_from({x_all.begin() + std::ptrdiff_t(n_fit), x_all.end()});
  const Eigen::MatrixXd tv = columns_from({t_all.begin() + std::ptrdiff_t(n_fit), t_all.end()});
  const Eigen::MatrixXd xs = columns_from(x_test);
  const Eigen::MatrixXd ts = columns_from(t_test);

  auto direct_error = [&](const MlpParams& params) {
    return (mlp_forward_batch(params, xs) - ts).cwiseAbs().maxCoeff();
  };

  // p0 and z0 of every family member stay inside this box
  double bound = 0.0;
  for (const auto& k : settings.family_wavevectors) {
    double norm = 0.0;
    for (int ki : k) norm += double(ki) * ki;
    bound += 2.0 * settings.amplitude * std::max(1.0, std::sqrt(norm));
  }
  const double box = std::max(1.0, bound);
  std::optional<FlowDataset> flow_data;

  for (std::size_t w : settings.widths) {
    if (w == 0) {
      BaselineRow row{"direct", 0, 0, 0, 0.0, true, "ok"};
      MlpParams bias_only = zero_mlp({grid.size(), probes.size()});
      bias_only.biases[0] = tt.rowwise().mean();
      // the zero weight block is not trained, only the biases count
      row.parameter_count = std::size_t(bias_only.biases[0].size());
      row.size = network_size(bias_only);
      row.sup_error = direct_error(bias_only);
      report.rows.push_back(row);
      continue;
    }
    BaselineRow hj{"hjnet", w, 0, 0, 0.0, true, "ok"};
    try {
      if (!flow_data)
        flow_data = generate_dataset(settings.spec, settings.t, settings.flow_samples, box,
                                     settings.data_seed, settings.integrator, settings.threads);
      const auto trained = train_flow_net(*flow_data, flow_architecture(d, {w, w}), settings.train);
      const auto model = std::make_shared<const MlpParams>(trained.params);
      hj.parameter_count = model->parameter_count();
      hj.size = network_size(*model);
      PipelineConfig pcfg;
      pcfg.n_per_axis = settings.grid_n;
      pcfg.t = settings.t;
      pcfg.r = settings.r;
      pcfg.gamma = settings.gamma;
      pcfg.backend = FlowBackend::Surrogate;
      pcfg.surrogate = model;
      pcfg.integrator = settings.integrator;
      for (std::size_t f = 0; f < test_fns.size(); ++f) {
        const auto solution = hjnet_solve(settings.spec, test_fns[f], pcfg);
        for (std::size_t p = 0; p < probes.size(); ++p)
          hj.sup_error = std::max(hj.sup_error, std::abs(solution(probes[p]) - t_test[f][p]));
      }
    } catch (const std::exception& e) {
      hj.ok = false;
      hj.status = std::string("failed: ") + e.what();
    }

    BaselineRow direct{"direct", 0, 0, 0, 0.0, true, "ok"};
    try {
      const std::size_t target = hj.parameter_count ? hj.parameter_count
                                                    : two_layer_params(2 * d + 1, w, 3 * d + 1);
      direct.width = matched_width(grid.size(), probes.size(), target);
      MlpParams init = init_mlp({grid.size(), direct.width, direct.width, probes.size()},
                                settings.train.seed);
      const auto trained = train_mlp(std::move(init), xt, tt, xv, tv, settings.train);
      direct.parameter_count = trained.params.parameter_count();
      direct.size = network_size(trained.params);
      direct.sup_error = direct_error(trained.params);
    } catch (const std::exception& e) {
      direct.ok = false;
      direct.status = std::string("failed: ") + e.what();
    }
    report.rows.push_back(hj);
    report.rows.push_back(direct);
  }
  return report;
}

TStarReport run_tstar(const ProblemSetup& problem, std::size_t probes_per_axis, double t_max,
                      double t_step) {
  TStarReport report;
  report.sweep = sweep_characteristic_det(problem.spec, problem.u0, probes_per_axis, t_max, t_step,
                                          problem.integrator);
  return report;
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& report) {
  CsvWriter csv(os);
  csv.row({"N", "h", "sup_error", "fitted_slope", "status", "manifest_hash"});
  const std::string slope = report.fitted_slope ? format_double(*report.fitted_slope) : "undefined";
  for (const auto& r : report.rows) {
    csv.row({std::to_string(r.n), format_double(r.h), r.ok ? format_double(r.sup_error) : "",
             slope, r.status, report.manifest_hash});
  }
}

void write_convergence_timings_csv(std::ostream& os, const ConvergenceReport& report) {
  CsvWriter csv(os);
  csv.row({"N", "wall_time_s", "manifest_hash"});
  for (const auto& r : report.rows)
    csv.row({std::to_string(r.n), format_double(r.wall_time_s), report.manifest_hash});
}

void write_convergence_plot(std::ostream& os, const ConvergenceReport& report, int r) {
  std::vector<double> hs, errs;
  for (const auto& row : report.rows) {
    if (!row.ok || row.sup_error < kSlopeErrorFloor) continue;
    hs.push_back(row.h);
    errs.push_back(row.sup_error);
  }
  os << "# convergence plot, manifest " << report.manifest_hash << "\n"
     << "import matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
     << "h = " << python_list(hs) << "\n"
     << "err = " << python_list(errs) << "\n"
     << "r = " << r << "\n"
     << "fig, ax = plt.subplots()\n"
     << "ax.loglog(h, err, 'o-', label='sup error')\n"
     << "if h:\n"
     << "    ref = [err[-1] * (x / h[-1]) ** r for x in h]\n"
     << "    ax.loglog(h, ref, 'k--', label='O(h^%d)' % r)\n"
     << "ax.set_xlabel('fill distance h')\nax.set_ylabel('sup error')\nax.legend()\n"
     << "fig.savefig('convergence.png', dpi=150)\n";
}

void write_size_sweep_csv(std::ostream& os, const SizeSweepReport& report) {
  CsvWriter csv(os);
  csv.row({"hidden", "size", "depth", "parameter_count", "surrogate_sup_error", "pipeline_sup_error",
           "final_val_loss", "reference_exponent", "status", "manifest_hash"});
  for (const auto& r : report.rows) {
    csv.row({join_sizes(r.hidden), std::to_string(r.size), std::to_string(r.depth),
             std::to_string(r.parameter_count), r.ok ? format_double(r.surrogate_sup_error) : "",
             r.ok ? format_double(r.pipeline_sup_error) : "", r.ok ? format_double(r.final_val_loss) : "",
             format_double(report.reference_exponent), r.status, report.manifest_hash});
  }
}

void write_size_sweep_plot(std::ostream& os, const SizeSweepReport& report) {
  std::vector<double> sizes, sur, pipe;
  for (const auto& r : report.rows) {
    if (!r.ok) continue;
    sizes.push_back(double(r.size));
    sur.push_back(r.surrogate_sup_error);
    pipe.push_back(r.pipeline_sup_error);
  }
  os << "# error vs network size, manifest " << report.manifest_hash << "\n"
     << "import matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
     << "size = " << python_list(sizes) << "\n"
     << "surrogate = " << python_list(sur) << "\n"
     << "pipeline = " << python_list(pipe) << "\n"
     << "exponent = " << format_double(report.reference_exponent) << "\n"
     << "fig, ax = plt.subplots()\n"
     << "ax.loglog(size, surrogate, 'o-', label='surrogate sup error')\n"
     << "ax.loglog(size, pipeline, 's-', label='pipeline sup error')\n"
     << "if size:\n"
     << "    # size ~ eps^(-exponent)  <=>  eps ~ size^(-1/exponent)\n"
     << "    ref = [surrogate[0] * (s / size[0]) ** (-1.0 / exponent) for s in size]\n"
     << "    ax.loglog(size, ref, 'k--', label='reference slope -1/%.2f' % exponent)\n"
     << "ax.set_xlabel('network size (nonzero parameters)')\nax.set_ylabel('sup error')\nax.legend()\n"
     << "fig.savefig('size_sweep.png', dpi=150)\n";
}

void write_baseline_csv(std::ostream& os, const BaselineReport& report) {
  CsvWriter csv(os);
  csv.row({"model", "width", "parameter_count", "size", "sup_error", "status", "manifest_hash"});
  for (const auto& r : report.rows) {
    csv.row({r.model, std::to_string(r.width), std::to_string(r.parameter_count),
             std::to_string(r.size), r.ok ? format_double(r.sup_error) : "", r.status,
             report.manifest_hash});
  }
}

void write_baseline_plot(std::ostream& os, const BaselineReport& report) {
  std::vector<double> hs, he, ds, de;
  for (const auto& r : report.rows) {
    if (!r.ok || r.size == 0) continue;
    (r.model == "hjnet" ? hs : ds).push_back(double(r.parameter_count));
    (r.model == "hjnet" ? he : de).push_back(r.sup_error);
  }
  os << "# HJ-Net vs direct regression, manifest " << report.manifest_hash << "\n"
     << "import matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n\n"
     << "hjnet_params = " << python_list(hs) << "\nhjnet_err = " << python_list(he) << "\n"
     << "direct_params = " << python_list(ds) << "\ndirect_err = " << python_list(de) << "\n"
     << "fig, ax = plt.subplots()\n"
     << "ax.loglog(hjnet_params, hjnet_err, 'o-', label='HJ-Net pipeline')\n"
     << "ax.loglog(direct_params, direct_err, 's-', label='direct regression')\n"
     << "ax.set_xlabel('parameters')\nax.set_ylabel('sup error')\nax.legend()\n"
     << "fig.savefig('baseline.png', dpi=150)\n";
}

void write_tstar_csv(std::ostream& os, const TStarReport& report) {
  CsvWriter csv(os);
  csv.row({"t", "min_jacobian_det", "estimated_tstar", "manifest_hash"});
  const auto& m = report.sweep.monitor;
  const std::string tstar = m.first_degenerate_time ? format_double(*m.first_degenerate_time) : "none";
  for (const auto& r : report.sweep.rows)
    csv.row({format_double(r.t), format_double(r.min_jacobian_det), tstar, report.manifest_hash});
}

}  // namespace hjnet
