#pragma once

// Feedforward ReLU networks x_{l+1} = relu(A_l x_l + b_l) with identity
// output layer, trained with Adam on mean squared error, and the flow
// surrogate built from them.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "hjnet/flow.hpp"

namespace hjnet {

struct MlpParams {
  std::vector<std::size_t> layer_dims;  // d_0 ... d_{L+1}
  std::vector<Eigen::MatrixXd> weights;  // A_l is d_{l+1} x d_l
  std::vector<Eigen::VectorXd> biases;
  /// Set for flow surrogates: output is (sin q, cos q, p, z) and spatial_dim = d.
  bool periodic_encoding = false;
  std::size_t spatial_dim = 0;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  /// Total number of weight and bias entries, zero or not.
  std::size_t parameter_count() const;

  friend bool operator==(const MlpParams& a, const MlpParams& b);
};

/// He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
MlpParams init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);
/// All weights and biases zero.
MlpParams zero_mlp(const std::vector<std::size_t>& layer_dims);

Vec mlp_forward(const MlpParams& params, std::span<const double> x);
/// Column-wise forward pass; x is d_0 x batch.
Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& x);

/// Number of strictly nonzero weights and biases.
std::size_t network_size(const MlpParams& params);
/// Number of hidden layers.
std::size_t network_depth(const MlpParams& params);

Eigen::VectorXd flatten(const MlpParams& params);
void unflatten(MlpParams& params, const Eigen::VectorXd& flat);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as flatten()
};

/// Mean over samples and output components of the squared error; inputs and
/// targets are stored column-wise.
double mse_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target);
LossAndGradient mse_loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& target);

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Learning rate decays geometrically to learning_rate * final_lr_fraction
  /// over the run; 1 keeps it constant.
  double final_lr_fraction = 1.0;
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double validation_fraction = 0.2;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

struct TrainResult {
  MlpParams params;
  std::vector<EpochRecord> history;
  double final_val_loss = 0.0;
};

/// Adam on minibatches drawn from (x_train, t_train), starting from `init`.
/// Losses recorded after each epoch over the full train and validation sets.
TrainResult train_mlp(MlpParams init, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& t_train,
                      const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& t_val,
                      const TrainConfig& tcfg);

struct FlowSample {
  PhaseState input;
  PhaseState target;
};

struct FlowDataset {
  std::size_t d = 1;
  double t = 0.0;
  double box = 1.0;  // M: p0 in [-M, M]^d, z0 in [-M, M]
  std::uint64_t seed = 0;
  IntegratorConfig integrator;
  std::vector<FlowSample> samples;
};

/// Uniform draws on torus x [-M, M]^{d+1}, targets from the exact flow.
FlowDataset generate_dataset(const HamiltonianSpec& spec, double t, std::size_t n_samples,
                             double box, std::uint64_t seed, const IntegratorConfig& cfg,
                             unsigned threads = 1);

/// Network input (q, p, z).
Vec flow_input(const PhaseState& s);
/// Training target (sin q, cos q, p, z).
Vec flow_target_embedding(const PhaseState& s);
PhaseState decode_flow_output(std::span<const double> y, std::size_t d);

/// Layer dims [2d+1, hidden..., 3d+1] for a flow surrogate.
std::vector<std::size_t> flow_architecture(std::size_t d, const std::vector<std::size_t>& hidden);

/// Splits the dataset by a seeded shuffle and trains on the periodic embedding.
TrainResult train_flow_net(const FlowDataset& dataset, const std::vector<std::size_t>& arch,
                           const TrainConfig& tcfg);

std::vector<PhaseState> surrogate_flow(const MlpParams& params,
                                       const std::vector<PhaseState>& states);

/// Distance between two phase states: periodic in q, Euclidean in (p, z).
double phase_distance(const PhaseState& a, const PhaseState& b);

/// JSON text; doubles are written in shortest round-trip form, so
/// load_model(save_model(x)) == x exactly.
void save_model(std::ostream& os, const MlpParams& params);
MlpParams load_model(std::istream& is);

}  // namespace hjnet
