#include "hjnet/config.hpp"

namespace hjnet {

void to_json(Json& j, const TrigSeries& s) {
  j = Json::array();
  for (const auto& t : s.terms()) j.push_back(Json::array({t.k, t.cos_amp, t.sin_amp}));
}

TrigSeries trig_series_from_json(const Json& j, std::size_t d) {
  std::vector<TrigTerm> terms;
  for (const auto& triple : j) {
    if (!triple.is_array() || triple.size() != 3)
      throw std::invalid_argument("coefficient entries must be [k-vector, cos_amp, sin_amp]");
    terms.push_back(TrigTerm{triple[0].get<std::vector<int>>(), triple[1].get<double>(),
                             triple[2].get<double>()});
  }
  return TrigSeries(d, std::move(terms));
}

void to_json(Json& j, const HamiltonianSpec& spec) {
  j = Json{{"kind", to_string(spec.kind)}, {"d", spec.d}, {"growth_constant", spec.growth_constant}};
  if (spec.kind == HamiltonianKind::KineticPlusPotential) j["potential"] = spec.potential;
  if (spec.kind == HamiltonianKind::Advection) {
    Json v = Json::array();
    for (const auto& c : spec.velocity) v.push_back(c);
    j["velocity"] = std::move(v);
  }
}

void from_json(const Json& j, HamiltonianSpec& spec) {
  const auto kind = hamiltonian_kind_from_string(j.at("kind").get<std::string>());
  const auto d = j.at("d").get<std::size_t>();
  const double growth = j.value("growth_constant", 0.0);
  switch (kind) {
    case HamiltonianKind::FreeParticle:
      spec = HamiltonianSpec::free_particle(d);
      spec.growth_constant = growth;
      break;
    case HamiltonianKind::KineticPlusPotential:
      spec = HamiltonianSpec::kinetic_plus_potential(
          trig_series_from_json(j.value("potential", Json::array()), d), growth);
      break;
    case HamiltonianKind::Advection: {
      std::vector<TrigSeries> velocity;
      for (const auto& comp : j.at("velocity")) velocity.push_back(trig_series_from_json(comp, d));
      spec = HamiltonianSpec::advection(std::move(velocity), growth);
      break;
    }
  }
  spec.validate();
}

void to_json(Json& j, const InitialData& u0) {
  j = Json{{"d", u0.d}, {"coeffs", u0.series}, {"regularity_r", u0.regularity_r}};
}

void from_json(const Json& j, InitialData& u0) {
  const auto d = j.at("d").get<std::size_t>();
  u0.d = d;
  u0.series = trig_series_from_json(j.at("coeffs"), d);
  u0.regularity_r = j.value("regularity_r", 2);
  u0.validate();
}

void to_json(Json& j, const IntegratorConfig& cfg) {
  j = Json{{"method", "rk4"}, {"dt", cfg.dt}, {"t_final", cfg.t_final}};
}

void from_json(const Json& j, IntegratorConfig& cfg) {
  if (j.value("method", "rk4") != "rk4") throw std::invalid_argument("integrator method must be rk4");
  cfg.dt = j.value("dt", 1e-3);
  cfg.t_final = j.value("t_final", 0.0);
  cfg.validate();
}

void to_json(Json& j, const NewtonOptions& opts) {
  j = Json{{"tol", opts.tol}, {"max_iter", opts.max_iter},
           {"multistart_grid", opts.multistart_grid}, {"damping", opts.damping}};
}

void from_json(const Json& j, NewtonOptions& opts) {
  const NewtonOptions defaults;
  opts.tol = j.value("tol", defaults.tol);
  opts.max_iter = j.value("max_iter", defaults.max_iter);
  opts.multistart_grid = j.value("multistart_grid", defaults.multistart_grid);
  opts.damping = j.value("damping", defaults.damping);
}

void to_json(Json& j, const TrainConfig& cfg) {
  j = Json{{"optimizer", "adam"},
           {"learning_rate", cfg.learning_rate},
           {"beta1", cfg.beta1},
           {"beta2", cfg.beta2},
           {"epsilon", cfg.epsilon},
           {"final_lr_fraction", cfg.final_lr_fraction},
           {"batch_size", cfg.batch_size},
           {"epochs", cfg.epochs},
           {"seed", cfg.seed},
           {"validation_fraction", cfg.validation_fraction}};
}

void from_json(const Json& j, TrainConfig& cfg) {
  const TrainConfig defaults;
  if (j.value("optimizer", "adam") != "adam") throw std::invalid_argument("optimizer must be adam");
  cfg.learning_rate = j.value("learning_rate", defaults.learning_rate);
  cfg.beta1 = j.value("beta1", defaults.beta1);
  cfg.beta2 = j.value("beta2", defaults.beta2);
  cfg.epsilon = j.value("epsilon", defaults.epsilon);
  cfg.final_lr_fraction = j.value("final_lr_fraction", defaults.final_lr_fraction);
  cfg.batch_size = j.value("batch_size", defaults.batch_size);
  cfg.epochs = j.value("epochs", defaults.epochs);
  cfg.seed = j.value("seed", defaults.seed);
  cfg.validation_fraction = j.value("validation_fraction", defaults.validation_fraction);
  cfg.validate();
}

}  // namespace hjnet
