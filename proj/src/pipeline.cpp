#include "hjnet/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace hjnet {

EncodedBatch encode(const InitialData& u0, const PointSet& grid) {
  if (grid.empty()) throw std::invalid_argument("encode: empty grid");
  require_dim(grid.d, u0.d, "encode grid");
  EncodedBatch batch;
  batch.source_grid = grid;
  batch.triples.reserve(grid.size());
  for (const auto& q0 : grid.points) {
    auto init = eval_u0(u0, q0);
    batch.triples.push_back(PhaseState{q0, std::move(init.gradient), init.value});
  }
  return batch;
}

PointSet make_uniform_grid(std::size_t d, std::size_t n_per_axis) {
  if (n_per_axis == 0) throw std::invalid_argument("make_uniform_grid: N must be >= 1");
  return PointSet(d, lattice_points(d, n_per_axis));
}

void PipelineConfig::validate() const {
  if (n_per_axis == 0) throw std::invalid_argument("PipelineConfig: n_per_axis must be >= 1");
  if (t < 0.0) throw std::invalid_argument("PipelineConfig: t must be >= 0");
  if (r < 2) throw std::invalid_argument("PipelineConfig: r must be >= 2");
  if (gamma < 0.0) throw std::invalid_argument("PipelineConfig: gamma must be >= 0");
  if (backend == FlowBackend::Surrogate && !surrogate)
    throw std::invalid_argument("PipelineConfig: surrogate backend selected without a model");
  if (backend == FlowBackend::Exact && surrogate)
    throw std::invalid_argument("PipelineConfig: exactly one flow backend may be configured");
  integrator.validate();
}

HjNetSolution::HjNetSolution(Reconstruction recon, EncodedBatch encoded,
                             std::vector<PhaseState> pushed, FlowBackend backend)
    : recon_(std::move(recon)), encoded_(std::move(encoded)), pushed_(std::move(pushed)),
      backend_(backend) {}

double HjNetSolution::operator()(const TorusPoint& q) const {
  try {
    return recon_(q);
  } catch (const InsufficientStencilError& e) {
    // an empty stencil after a surrogate push means the surrogate scattered the points
    throw PipelineError(backend_ == FlowBackend::Surrogate ? "surrogate" : "reconstruction",
                        e.what());
  }
}

PointSet HjNetSolution::image_points() const {
  PointSet out(encoded_.source_grid.d, {});
  out.points.reserve(pushed_.size());
  for (const auto& s : pushed_) out.points.push_back(s.q);
  return out;
}

HjNetSolution hjnet_solve(const HamiltonianSpec& spec, const InitialData& u0,
                          const PipelineConfig& pcfg) {
  pcfg.validate();
  require_dim(u0.d, spec.d, "hjnet_solve initial data");
  EncodedBatch encoded = encode(u0, make_uniform_grid(spec.d, pcfg.n_per_axis));

  std::vector<PhaseState> pushed;
  if (pcfg.backend == FlowBackend::Exact) {
    IntegratorConfig run = pcfg.integrator;
    run.t_final = pcfg.t;
    if (pcfg.check_characteristics && pcfg.t > 0.0) {
      for (const auto& q0 : encoded.source_grid.points) {
        if (characteristic_jacobian_det(spec, u0, q0, pcfg.t, run) <= 0.0)
          throw PipelineError("flow", "characteristics cross before t at " + to_string(q0) +
                                          " (t is beyond T*)");
      }
    }
    try {
      pushed = integrate_flow_batch(spec, encoded.triples, run, pcfg.threads);
    } catch (const IntegrationError& e) {
      throw PipelineError("flow", e.what());
    }
  } else {
    try {
      pushed = surrogate_flow(*pcfg.surrogate, encoded.triples);
    } catch (const std::exception& e) {
      throw PipelineError("surrogate", e.what());
    }
  }

  // projection: keep (q_t, z_t), drop p_t
  PointSet images(spec.d, {});
  std::vector<double> values;
  images.points.reserve(pushed.size());
  values.reserve(pushed.size());
  for (const auto& s : pushed) {
    images.points.push_back(s.q);
    values.push_back(s.z);
  }
  try {
    auto recon = reconstruct(images, values, pcfg.r, pcfg.effective_gamma(), pcfg.fill_resolution);
    return HjNetSolution(std::move(recon), std::move(encoded), std::move(pushed), pcfg.backend);
  } catch (const std::invalid_argument& e) {
    throw PipelineError("reconstruction", e.what());
  }
}

double sup_error_against(const ScalarField& approx, const ScalarField& truth, std::size_t d,
                         std::size_t probe_count) {
  if (probe_count == 0) throw std::invalid_argument("sup_error: probe_count must be >= 1");
  double worst = 0.0;
  for (const auto& q : lattice_points(d, probe_count))
    worst = std::max(worst, std::abs(approx(q) - truth(q)));
  return worst;
}

double sup_error(const ScalarField& approx, const HamiltonianSpec& spec, const InitialData& u0,
                 double t, std::size_t probe_count, const IntegratorConfig& cfg,
                 const NewtonOptions& newton, unsigned threads) {
  if (probe_count == 0) throw std::invalid_argument("sup_error: probe_count must be >= 1");
  const auto probes = lattice_points(spec.d, probe_count);
  const auto exact = oracle_solve(spec, u0, t, probes, cfg, newton, threads);
  double worst = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i)
    worst = std::max(worst, std::abs(approx(probes[i]) - exact[i]));
  return worst;
}

}  // namespace hjnet
