#pragma once

// The composed solution operator: encode u0 on a grid as characteristic
// triples (q0, grad u0, u0), push them through a flow backend (the exact
// flow or a trained surrogate), keep (q_t, z_t), and reconstruct by pruned
// moving least squares.

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "hjnet/flow.hpp"
#include "hjnet/mls.hpp"
#include "hjnet/neural.hpp"

namespace hjnet {

struct EncodedBatch {
  std::vector<PhaseState> triples;
  PointSet source_grid;
};

EncodedBatch encode(const InitialData& u0, const PointSet& grid);

/// Lattice {2 pi k / n}^d; fill distance pi sqrt(d) / n.
PointSet make_uniform_grid(std::size_t d, std::size_t n_per_axis);

enum class FlowBackend { Exact, Surrogate };

struct PipelineConfig {
  std::size_t n_per_axis = 32;
  double t = 0.0;
  int r = 4;
  /// Zero selects MlsConfig::default_gamma(r - 1).
  double gamma = 0.0;
  FlowBackend backend = FlowBackend::Exact;
  std::shared_ptr<const MlpParams> surrogate;
  IntegratorConfig integrator{1e-3, 0.0};
  /// Refuse exact-backend runs once the characteristic Jacobian degenerates on the grid.
  bool check_characteristics = true;
  std::size_t fill_resolution = kDefaultFillResolution;
  unsigned threads = 1;

  double effective_gamma() const { return gamma > 0.0 ? gamma : MlsConfig::default_gamma(r - 1); }
  void validate() const;
};

class PipelineError : public std::runtime_error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Result of one pipeline run; callable as q -> u(q, t).
class HjNetSolution {
 public:
  HjNetSolution(Reconstruction recon, EncodedBatch encoded, std::vector<PhaseState> pushed,
                FlowBackend backend);

  double operator()(const TorusPoint& q) const;

  const Reconstruction& reconstruction() const { return recon_; }
  const EncodedBatch& encoded() const { return encoded_; }
  /// Flow-backend outputs, one per encoded triple.
  const std::vector<PhaseState>& pushed() const { return pushed_; }
  /// The projected point set {q_t}.
  PointSet image_points() const;

 private:
  Reconstruction recon_;
  EncodedBatch encoded_;
  std::vector<PhaseState> pushed_;
  FlowBackend backend_;
};

HjNetSolution hjnet_solve(const HamiltonianSpec& spec, const InitialData& u0,
                          const PipelineConfig& pcfg);

using ScalarField = std::function<double(const TorusPoint&)>;

/// max over the probe lattice (probe_count per axis) of |approx - truth|.
double sup_error_against(const ScalarField& approx, const ScalarField& truth, std::size_t d,
                         std::size_t probe_count);

/// max over the probe lattice of |approx - oracle_solve|.
double sup_error(const ScalarField& approx, const HamiltonianSpec& spec, const InitialData& u0,
                 double t, std::size_t probe_count, const IntegratorConfig& cfg,
                 const NewtonOptions& newton = {}, unsigned threads = 1);

}  // namespace hjnet
