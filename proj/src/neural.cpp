#include "hjnet/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

namespace hjnet {

namespace {

using Json = nlohmann::json;

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("MLP needs at least input and output layers");
  for (auto v : dims)
    if (v == 0) throw std::invalid_argument("MLP layer widths must be positive");
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += std::size_t(weights[l].size() + biases[l].size());
  return n;
}

bool operator==(const MlpParams& a, const MlpParams& b) {
  if (a.layer_dims != b.layer_dims || a.periodic_encoding != b.periodic_encoding ||
      a.spatial_dim != b.spatial_dim || a.seed != b.seed || a.weights.size() != b.weights.size())
    return false;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (a.weights[l] != b.weights[l] || a.biases[l] != b.biases[l]) return false;
  }
  return true;
}

MlpParams zero_mlp(const std::vector<std::size_t>& layer_dims) {
  check_dims(layer_dims);
  MlpParams p;
  p.layer_dims = layer_dims;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(Eigen::Index(layer_dims[l + 1]), Eigen::Index(layer_dims[l])));
    p.biases.push_back(Eigen::VectorXd::Zero(Eigen::Index(layer_dims[l + 1])));
  }
  return p;
}

MlpParams init_mlp(const std::vector<std::size_t>& layer_dims, std::uint64_t seed) {
  MlpParams p = zero_mlp(layer_dims);
  p.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& a : p.weights) {
    const double bound = std::sqrt(6.0 / double(a.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = dist(rng);
  }
  return p;
}

Eigen::MatrixXd mlp_forward_batch(const MlpParams& params, const Eigen::MatrixXd& x) {
  require_dim(std::size_t(x.rows()), params.input_dim(), "mlp_forward input");
  Eigen::MatrixXd h = x;
  const std::size_t layers = params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.weights[l] * h;
    z.colwise() += params.biases[l];
    h = (l + 1 < layers) ? relu(z) : std::move(z);
  }
  return h;
}

Vec mlp_forward(const MlpParams& params, std::span<const double> x) {
  require_dim(x.size(), params.input_dim(), "mlp_forward input");
  Eigen::MatrixXd col(Eigen::Index(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) col(Eigen::Index(i), 0) = x[i];
  const Eigen::MatrixXd y = mlp_forward_batch(params, col);
  return Vec(y.data(), y.data() + y.size());
}

std::size_t network_size(const MlpParams& params) {
  std::size_t n = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    n += std::size_t((params.weights[l].array() != 0.0).count());
    n += std::size_t((params.biases[l].array() != 0.0).count());
  }
  return n;
}

std::size_t network_depth(const MlpParams& params) {
  return params.layer_dims.size() - 2;
}

Eigen::VectorXd flatten(const MlpParams& params) {
  Eigen::VectorXd flat(Eigen::Index(params.parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& a = params.weights[l];
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) flat[k++] = a(i, j);
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) flat[k++] = params.biases[l][i];
  }
  return flat;
}

void unflatten(MlpParams& params, const Eigen::VectorXd& flat) {
  require_dim(std::size_t(flat.size()), params.parameter_count(), "unflatten");
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& a = params.weights[l];
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = flat[k++];
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) params.biases[l][i] = flat[k++];
  }
}

double mse_loss(const MlpParams& params, const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) {
  const Eigen::MatrixXd y = mlp_forward_batch(params, x);
  require_dim(std::size_t(target.rows()), std::size_t(y.rows()), "mse_loss target");
  return (y - target).squaredNorm() / double(y.size());
}

LossAndGradient mse_loss_and_gradient(const MlpParams& params, const Eigen::MatrixXd& x,
                                      const Eigen::MatrixXd& target) {
  const std::size_t layers = params.weights.size();
  std::vector<Eigen::MatrixXd> acts{x};  // inputs to each layer
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.weights[l] * acts.back();
    z.colwise() += params.biases[l];
    pre.push_back(z);
    if (l + 1 < layers) acts.push_back(relu(z));
  }
  const Eigen::MatrixXd& y = pre.back();
  require_dim(std::size_t(target.rows()), std::size_t(y.rows()), "mse target rows");
  require_dim(std::size_t(target.cols()), std::size_t(y.cols()), "mse target cols");
  const double scale = 1.0 / double(y.size());

  LossAndGradient out;
  out.loss = (y - target).squaredNorm() * scale;
  std::vector<Eigen::MatrixXd> grad_w(layers);
  std::vector<Eigen::VectorXd> grad_b(layers);
  Eigen::MatrixXd delta = 2.0 * scale * (y - target);
  for (std::size_t l = layers; l-- > 0;) {
    grad_w[l] = delta * acts[l].transpose();
    grad_b[l] = delta.rowwise().sum();
    if (l == 0) break;
    delta = (params.weights[l].transpose() * delta).cwiseProduct(
        (pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  out.gradient.resize(Eigen::Index(params.parameter_count()));
  Eigen::Index k = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    for (Eigen::Index i = 0; i < grad_w[l].rows(); ++i)
      for (Eigen::Index j = 0; j < grad_w[l].cols(); ++j) out.gradient[k++] = grad_w[l](i, j);
    for (Eigen::Index i = 0; i < grad_b[l].size(); ++i) out.gradient[k++] = grad_b[l][i];
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("TrainConfig: validation_fraction must lie in (0, 1)");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (!(final_lr_fraction > 0.0)) throw std::invalid_argument("TrainConfig: final_lr_fraction must be positive");
}

TrainResult train_mlp(MlpParams init, const Eigen::MatrixXd& x_train, const Eigen::MatrixXd& t_train,
                      const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& t_val,
                      const TrainConfig& tcfg) {
  tcfg.validate();
  if (x_train.cols() == 0) throw std::invalid_argument("train_mlp: empty training set");
  TrainResult result;
  result.params = std::move(init);
  MlpParams& params = result.params;

  Eigen::VectorXd theta = flatten(params);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  std::mt19937_64 rng(tcfg.seed);
  std::vector<Eigen::Index> order(std::size_t(x_train.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));

  const std::size_t n = order.size();
  const std::size_t batches_per_epoch = (n + tcfg.batch_size - 1) / tcfg.batch_size;
  const double total_steps = double(std::max<std::size_t>(1, tcfg.epochs * batches_per_epoch));
  std::uint64_t step = 0;
  double b1 = 1.0, b2 = 1.0;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += tcfg.batch_size) {
      const std::size_t count = std::min(tcfg.batch_size, n - start);
      Eigen::MatrixXd xb(x_train.rows(), Eigen::Index(count));
      Eigen::MatrixXd tb(t_train.rows(), Eigen::Index(count));
      for (std::size_t c = 0; c < count; ++c) {
        xb.col(Eigen::Index(c)) = x_train.col(order[start + c]);
        tb.col(Eigen::Index(c)) = t_train.col(order[start + c]);
      }
      const auto lg = mse_loss_and_gradient(params, xb, tb);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite())
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch), epoch);
      const double lr =
          tcfg.learning_rate * std::pow(tcfg.final_lr_fraction, double(step) / total_steps);
      ++step;
      b1 *= tcfg.beta1;
      b2 *= tcfg.beta2;
      m = tcfg.beta1 * m + (1.0 - tcfg.beta1) * lg.gradient;
      v = tcfg.beta2 * v + (1.0 - tcfg.beta2) * lg.gradient.cwiseAbs2();
      const Eigen::VectorXd m_hat = m / (1.0 - b1);
      const Eigen::VectorXd v_hat = v / (1.0 - b2);
      theta.array() -= lr * m_hat.array() / (v_hat.array().sqrt() + tcfg.epsilon);
      unflatten(params, theta);
    }
    const double train_loss = mse_loss(params, x_train, t_train);
    const double val_loss = x_val.cols() > 0 ? mse_loss(params, x_val, t_val) : train_loss;
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch), epoch);
    result.history.push_back({epoch, train_loss, val_loss});
  }
  result.final_val_loss = result.history.empty()
                              ? (x_val.cols() > 0 ? mse_loss(params, x_val, t_val) : 0.0)
                              : result.history.back().val_loss;
  return result;
}

FlowDataset generate_dataset(const HamiltonianSpec& spec, double t, std::size_t n_samples,
                             double box, std::uint64_t seed, const IntegratorConfig& cfg,
                             unsigned threads) {
  if (!(box >= 1.0)) throw std::invalid_argument("generate_dataset: M must be >= 1");
  FlowDataset ds;
  ds.d = spec.d;
  ds.t = t;
  ds.box = box;
  ds.seed = seed;
  ds.integrator = cfg;
  ds.integrator.t_final = t;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> coord(-box, box);
  std::vector<PhaseState> inputs(n_samples);
  for (auto& s : inputs) {
    Vec q(spec.d), p(spec.d);
    for (auto& v : q) v = angle(rng);
    for (auto& v : p) v = coord(rng);
    s = PhaseState{TorusPoint(std::move(q)), std::move(p), coord(rng)};
  }
  const auto targets = integrate_flow_batch(spec, inputs, ds.integrator, threads);
  ds.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) ds.samples.push_back({inputs[i], targets[i]});
  return ds;
}

Vec flow_input(const PhaseState& s) {
  Vec x(s.q.coords());
  x.insert(x.end(), s.p.begin(), s.p.end());
  x.push_back(s.z);
  return x;
}

Vec flow_target_embedding(const PhaseState& s) {
  const std::size_t d = s.q.dim();
  Vec y(3 * d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    y[i] = std::sin(s.q[i]);
    y[d + i] = std::cos(s.q[i]);
    y[2 * d + i] = s.p[i];
  }
  y[3 * d] = s.z;
  return y;
}

PhaseState decode_flow_output(std::span<const double> y, std::size_t d) {
  require_dim(y.size(), 3 * d + 1, "decode_flow_output");
  Vec q(d), p(d);
  for (std::size_t i = 0; i < d; ++i) {
    q[i] = std::atan2(y[i], y[d + i]);
    p[i] = y[2 * d + i];
  }
  return PhaseState{TorusPoint(std::move(q)), std::move(p), y[3 * d]};
}

std::vector<std::size_t> flow_architecture(std::size_t d, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> dims{2 * d + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(3 * d + 1);
  return dims;
}

TrainResult train_flow_net(const FlowDataset& dataset, const std::vector<std::size_t>& arch,
                           const TrainConfig& tcfg) {
  tcfg.validate();
  if (dataset.samples.empty()) throw std::invalid_argument("train_flow_net: empty dataset");
  const std::size_t d = dataset.d;
  if (arch.size() < 2 || arch.front() != 2 * d + 1 || arch.back() != 3 * d + 1)
    throw DimensionError("train_flow_net: architecture must map 2d+1 inputs to 3d+1 outputs");

  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::mt19937_64 split_rng(tcfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_val = std::size_t(std::round(tcfg.validation_fraction * double(n)));
  n_val = std::min(n_val, n - 1);
  const std::size_t n_train = n - n_val;

  auto fill = [&](std::size_t begin, std::size_t count, Eigen::MatrixXd& x, Eigen::MatrixXd& t) {
    x.resize(Eigen::Index(2 * d + 1), Eigen::Index(count));
    t.resize(Eigen::Index(3 * d + 1), Eigen::Index(count));
    for (std::size_t c = 0; c < count; ++c) {
      const auto& s = dataset.samples[order[begin + c]];
      const Vec xi = flow_input(s.input);
      const Vec ti = flow_target_embedding(s.target);
      for (std::size_t r = 0; r < xi.size(); ++r) x(Eigen::Index(r), Eigen::Index(c)) = xi[r];
      for (std::size_t r = 0; r < ti.size(); ++r) t(Eigen::Index(r), Eigen::Index(c)) = ti[r];
    }
  };
  Eigen::MatrixXd xt, tt, xv, tv;
  fill(0, n_train, xt, tt);
  fill(n_train, n_val, xv, tv);

  MlpParams init = init_mlp(arch, tcfg.seed);
  init.periodic_encoding = true;
  init.spatial_dim = d;
  return train_mlp(std::move(init), xt, tt, xv, tv, tcfg);
}

std::vector<PhaseState> surrogate_flow(const MlpParams& params,
                                       const std::vector<PhaseState>& states) {
  if (!params.periodic_encoding) throw std::invalid_argument("surrogate_flow: model lacks periodic encoding");
  const std::size_t d = params.spatial_dim;
  require_dim(params.input_dim(), 2 * d + 1, "surrogate input layer");
  require_dim(params.output_dim(), 3 * d + 1, "surrogate output layer");
  Eigen::MatrixXd x(Eigen::Index(2 * d + 1), Eigen::Index(states.size()));
  for (std::size_t c = 0; c < states.size(); ++c) {
    require_dim(states[c].q.dim(), d, "surrogate_flow state");
    require_dim(states[c].p.size(), d, "surrogate_flow momentum");
    const Vec xi = flow_input(states[c]);
    for (std::size_t r = 0; r < xi.size(); ++r) x(Eigen::Index(r), Eigen::Index(c)) = xi[r];
  }
  const Eigen::MatrixXd y = mlp_forward_batch(params, x);
  std::vector<PhaseState> out;
  out.reserve(states.size());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const Eigen::VectorXd col = y.col(c);
    out.push_back(decode_flow_output(std::span<const double>(col.data(), std::size_t(col.size())), d));
  }
  return out;
}

double phase_distance(const PhaseState& a, const PhaseState& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.q.dim(); ++i) {
    const double dq = wrap_signed(a.q[i] - b.q[i]);
    const double dp = a.p[i] - b.p[i];
    s += dq * dq + dp * dp;
  }
  s += (a.z - b.z) * (a.z - b.z);
  return std::sqrt(s);
}

void save_model(std::ostream& os, const MlpParams& params) {
  Json j;
  j["format"] = "hjnet-mlp";
  j["version"] = 1;
  j["layer_dims"] = params.layer_dims;
  j["periodic_encoding"] = params.periodic_encoding;
  j["spatial_dim"] = params.spatial_dim;
  j["seed"] = params.seed;
  Json weights = Json::array(), biases = Json::array();
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    const auto& a = params.weights[l];
    std::vector<double> row_major;
    row_major.reserve(std::size_t(a.size()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index k = 0; k < a.cols(); ++k) row_major.push_back(a(i, k));
    weights.push_back(row_major);
    biases.push_back(std::vector<double>(params.biases[l].data(),
                                         params.biases[l].data() + params.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  os << j.dump(1) << '\n';
}

MlpParams load_model(std::istream& is) {
  const Json j = Json::parse(is);
  if (j.value("format", "") != "hjnet-mlp") throw std::invalid_argument("load_model: not an hjnet-mlp file");
  MlpParams p = zero_mlp(j.at("layer_dims").get<std::vector<std::size_t>>());
  p.periodic_encoding = j.at("periodic_encoding").get<bool>();
  p.spatial_dim = j.at("spatial_dim").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  require_dim(weights.size(), p.weights.size(), "load_model weights");
  require_dim(biases.size(), p.biases.size(), "load_model biases");
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const auto w = weights[l].get<std::vector<double>>();
    const auto b = biases[l].get<std::vector<double>>();
    auto& a = p.weights[l];
    require_dim(w.size(), std::size_t(a.size()), "load_model weight matrix");
    require_dim(b.size(), std::size_t(p.biases[l].size()), "load_model bias vector");
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(i, c) = w[k++];
    for (std::size_t i = 0; i < b.size(); ++i) p.biases[l][Eigen::Index(i)] = b[i];
  }
  return p;
}

}  // namespace hjnet
