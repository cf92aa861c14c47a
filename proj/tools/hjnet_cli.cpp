// hjnet: runs the pipeline experiments from a JSON config and writes CSV
// tables, a run manifest and plot scripts into --out.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "hjnet/bench.hpp"
#include "hjnet/config.hpp"
#include "hjnet/csv.hpp"
#include "hjnet/manifest.hpp"

namespace fs = std::filesystem;
using namespace hjnet;

namespace {

struct Globals {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct Run {
  Json config;
  std::uint64_t seed = 0;
  RunManifest manifest;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return Json::parse(in);
}

// A manifest written by an earlier run is accepted as a config: its embedded
// config and seed are replayed.
Run load_run(const std::string& command, const Globals& g) {
  Json raw = read_json_file(g.config_path);
  Run run;
  if (raw.contains("manifest_hash")) {
    const auto previous = RunManifest::from_json(raw);
    if (previous.command != command)
      throw std::runtime_error("manifest was written by '" + previous.command + "', not '" + command + "'");
    run.config = previous.config;
    run.seed = previous.seed;
  } else {
    run.config = std::move(raw);
    run.seed = run.config.value("seed", std::uint64_t{0});
  }
  if (g.seed) run.seed = *g.seed;
  run.manifest = make_manifest(command, run.config, run.seed);
  return run;
}

Json section(const Json& cfg, const char* name) {
  return cfg.contains(name) ? cfg.at(name) : Json::object();
}

ProblemSetup problem_from(const Json& cfg) {
  ProblemSetup p;
  p.spec = cfg.at("hamiltonian").get<HamiltonianSpec>();
  p.u0 = cfg.at("initial_data").get<InitialData>();
  p.t = cfg.value("t", 0.0);
  if (cfg.contains("integrator")) p.integrator = cfg.at("integrator").get<IntegratorConfig>();
  if (cfg.contains("newton")) p.newton = cfg.at("newton").get<NewtonOptions>();
  return p;
}

TrainConfig train_from(const Run& run) {
  TrainConfig tc = section(run.config, "training").get<TrainConfig>();
  tc.seed = run.seed;
  return tc;
}

std::ofstream open_out(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  std::ofstream os(fs::path(g.out_dir) / name, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + (fs::path(g.out_dir) / name).string());
  return os;
}

void write_manifest(const Globals& g, const Run& run) {
  auto os = open_out(g, "manifest.json");
  os << run.manifest.to_json().dump(2) << "\n";
}

std::vector<std::size_t> size_list(const Json& j) { return j.get<std::vector<std::size_t>>(); }

int cmd_convergence(const Globals& g) {
  const Run run = load_run("convergence", g);
  const Json sec = section(run.config, "convergence");
  ConvergenceSettings s;
  s.problem = problem_from(run.config);
  s.r = sec.value("r", s.r);
  s.gamma = sec.value("gamma", s.gamma);
  s.grids = size_list(sec.value("grids", Json::array({16, 32, 64, 128})));
  s.probe_factor = sec.value("probe_factor", s.probe_factor);
  s.threads = g.threads;

  auto report = run_convergence(s);
  report.manifest_hash = run.manifest.hash;
  write_manifest(g, run);
  {
    auto os = open_out(g, "convergence.csv");
    write_convergence_csv(os, report);
  }
  {
    auto os = open_out(g, "convergence_timings.csv");
    write_convergence_timings_csv(os, report);
  }
  {
    auto os = open_out(g, "convergence_plot.py");
    write_convergence_plot(os, report, s.r);
  }
  for (const auto& r : report.rows)
    std::cout << "N=" << r.n << " h=" << format_double(r.h) << " sup_error="
              << (r.ok ? format_double(r.sup_error) : r.status) << "\n";
  std::cout << "fitted_slope "
            << (report.fitted_slope ? format_double(*report.fitted_slope) : "undefined") << "\n";
  return report.complete() && report.rows.size() == s.grids.size() ? 0 : 1;
}

int cmd_size_sweep(const Globals& g) {
  const Run run = load_run("size-sweep", g);
  const Json sec = section(run.config, "size_sweep");
  SizeSweepSettings s;
  s.problem = problem_from(run.config);
  s.hidden_layers = sec.value("hidden_layers", Json::array()).get<std::vector<std::vector<std::size_t>>>();
  s.n_samples = sec.value("n_samples", s.n_samples);
  s.box = sec.value("box", s.box);
  s.data_seed = sec.value("data_seed", s.data_seed);
  s.test_samples = sec.value("test_samples", s.test_samples);
  s.test_seed = sec.value("test_seed", s.test_seed);
  s.pipeline_n = sec.value("pipeline_n", s.pipeline_n);
  s.r = sec.value("r", s.r);
  s.gamma = sec.value("gamma", s.gamma);
  s.probe_factor = sec.value("probe_factor", s.probe_factor);
  s.train = train_from(run);
  s.threads = g.threads;

  auto report = run_size_sweep(s);
  report.manifest_hash = run.manifest.hash;
  write_manifest(g, run);
  {
    auto os = open_out(g, "size_sweep.csv");
    write_size_sweep_csv(os, report);
  }
  {
    auto os = open_out(g, "size_sweep_plot.py");
    write_size_sweep_plot(os, report);
  }
  for (const auto& r : report.rows)
    std::cout << "size=" << r.size << " surrogate=" << format_double(r.surrogate_sup_error)
              << " pipeline=" << format_double(r.pipeline_sup_error) << " " << r.status << "\n";
  return report.complete() ? 0 : 1;
}

int cmd_baseline(const Globals& g) {
  const Run run = load_run("baseline", g);
  const Json sec = section(run.config, "baseline");
  BaselineSettings s;
  const auto prob = problem_from(run.config);
  s.spec = prob.spec;
  s.t = prob.t;
  s.integrator = prob.integrator;
  s.newton = prob.newton;
  if (sec.contains("family_wavevectors"))
    s.family_wavevectors = sec.at("family_wavevectors").get<std::vector<std::vector<int>>>();
  s.amplitude = sec.value("amplitude", s.amplitude);
  s.r = sec.value("r", s.r);
  s.gamma = sec.value("gamma", s.gamma);
  s.n_train_functions = sec.value("n_train_functions", s.n_train_functions);
  s.n_test_functions = sec.value("n_test_functions", s.n_test_functions);
  s.family_seed = sec.value("family_seed", s.family_seed);
  s.grid_n = sec.value("grid_n", s.grid_n);
  s.probes_per_axis = sec.value("probes_per_axis", s.probes_per_axis);
  s.widths = size_list(sec.value("widths", Json::array({0, 8, 16})));
  s.flow_samples = sec.value("flow_samples", s.flow_samples);
  s.data_seed = sec.value("data_seed", s.data_seed);
  s.train = train_from(run);
  s.threads = g.threads;

  auto report = run_baseline(s);
  report.manifest_hash = run.manifest.hash;
  write_manifest(g, run);
  {
    auto os = open_out(g, "baseline.csv");
    write_baseline_csv(os, report);
  }
  {
    auto os = open_out(g, "baseline_plot.py");
    write_baseline_plot(os, report);
  }
  for (const auto& r : report.rows)
    std::cout << r.model << " width=" << r.width << " params=" << r.parameter_count
              << " sup_error=" << format_double(r.sup_error) << " " << r.status << "\n";
  return report.complete() ? 0 : 1;
}

int cmd_tstar(const Globals& g) {
  const Run run = load_run("tstar", g);
  const Json sec = section(run.config, "tstar");
  const auto prob = problem_from(run.config);
  auto report = run_tstar(prob, sec.value("probes_per_axis", std::size_t{64}),
                          sec.value("t_max", 1.5), sec.value("t_step", 0.01));
  report.manifest_hash = run.manifest.hash;
  write_manifest(g, run);
  {
    auto os = open_out(g, "tstar.csv");
    write_tstar_csv(os, report);
  }
  const auto& m = report.sweep.monitor;
  std::cout << "estimated_tstar "
            << (m.first_degenerate_time ? format_double(*m.first_degenerate_time) : "none") << "\n";
  return 0;
}

int cmd_train(const Globals& g) {
  const Run run = load_run("train", g);
  const Json sec = section(run.config, "training");
  const auto prob = problem_from(run.config);
  const auto hidden = size_list(sec.value("hidden", Json::array({32, 32})));
  const auto data = generate_dataset(prob.spec, prob.t, sec.value("n_samples", std::size_t{4000}),
                                     sec.value("box", 1.0), sec.value("data_seed", std::uint64_t{7}),
                                     prob.integrator, g.threads);
  const auto result = train_flow_net(data, flow_architecture(prob.spec.d, hidden), train_from(run));
  write_manifest(g, run);
  {
    auto os = open_out(g, "model.json");
    save_model(os, result.params);
  }
  {
    auto os = open_out(g, "training_history.csv");
    CsvWriter csv(os);
    csv.row({"epoch", "train_loss", "val_loss", "manifest_hash"});
    for (const auto& e : result.history)
      csv.row({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_loss),
               run.manifest.hash});
  }
  std::cout << "parameters " << result.params.parameter_count() << " final_val_loss "
            << format_double(result.final_val_loss) << "\n";
  return 0;
}

void write_field_csv(std::ostream& os, const std::vector<TorusPoint>& probes,
                     const std::vector<double>& values, std::size_t d, const std::string& hash) {
  CsvWriter csv(os);
  std::vector<std::string> header;
  for (std::size_t k = 0; k < d; ++k) header.push_back("q" + std::to_string(k + 1));
  header.push_back("value");
  header.push_back("manifest_hash");
  csv.row(header);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::vector<std::string> cells;
    for (std::size_t k = 0; k < d; ++k) cells.push_back(format_double(probes[i][k]));
    cells.push_back(format_double(values[i]));
    cells.push_back(hash);
    csv.row(cells);
  }
}

int cmd_solve(const Globals& g) {
  const Run run = load_run("solve", g);
  const Json sec = section(run.config, "solve");
  const auto prob = problem_from(run.config);
  PipelineConfig pcfg;
  pcfg.n_per_axis = sec.value("n_per_axis", pcfg.n_per_axis);
  pcfg.t = prob.t;
  pcfg.r = sec.value("r", pcfg.r);
  pcfg.gamma = sec.value("gamma", pcfg.gamma);
  pcfg.integrator = prob.integrator;
  pcfg.threads = g.threads;
  if (sec.value("backend", std::string("exact")) == "surrogate") {
    std::ifstream in(sec.at("model").get<std::string>());
    if (!in) throw std::runtime_error("cannot open model " + sec.at("model").get<std::string>());
    pcfg.backend = FlowBackend::Surrogate;
    pcfg.surrogate = std::make_shared<const MlpParams>(load_model(in));
  }
  const auto solution = hjnet_solve(prob.spec, prob.u0, pcfg);
  const auto probes = lattice_points(prob.spec.d, sec.value("probes_per_axis", std::size_t{64}));
  std::vector<double> values;
  for (const auto& q : probes) values.push_back(solution(q));
  write_manifest(g, run);
  auto os = open_out(g, "solution.csv");
  write_field_csv(os, probes, values, prob.spec.d, run.manifest.hash);
  if (sec.value("report_error", false)) {
    const auto exact = oracle_solve(prob.spec, prob.u0, prob.t, probes, prob.integrator, prob.newton, g.threads);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) worst = std::max(worst, std::abs(values[i] - exact[i]));
    std::cout << "sup_error " << format_double(worst) << "\n";
  }
  return 0;
}

int cmd_oracle(const Globals& g) {
  const Run run = load_run("oracle", g);
  const Json sec = section(run.config, "oracle");
  const auto prob = problem_from(run.config);
  const auto probes = lattice_points(prob.spec.d, sec.value("probes_per_axis", std::size_t{64}));
  const auto values = oracle_solve(prob.spec, prob.u0, prob.t, probes, prob.integrator, prob.newton, g.threads);
  write_manifest(g, run);
  auto os = open_out(g, "oracle.csv");
  write_field_csv(os, probes, values, prob.spec.d, run.manifest.hash);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HJ-Net pipeline experiments for the periodic Hamilton-Jacobi equation"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  bool seed_given = false;
  // global flags are accepted before or after the subcommand
  auto add_globals = [&](CLI::App* a) {
    a->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { seed = v, seed_given = true; }, "overrides the config seed");
    a->add_option("--config", g.config_path, "JSON config or a run manifest (required)")->check(CLI::ExistingFile);
    a->add_option("--out", g.out_dir, "output directory");
    a->add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  add_globals(&app);

  const std::pair<const char*, int (*)(const Globals&)> commands[] = {
      {"convergence", cmd_convergence}, {"size-sweep", cmd_size_sweep}, {"baseline", cmd_baseline},
      {"tstar", cmd_tstar},             {"train", cmd_train},           {"solve", cmd_solve},
      {"oracle", cmd_oracle}};
  for (const auto& [name, fn] : commands) add_globals(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);
  if (seed_given) g.seed = seed;
  if (g.config_path.empty()) {
    std::cerr << "--config is required\nRun with --help for more information.\n";
    return 1;
  }

  try {
    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) return fn(g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
