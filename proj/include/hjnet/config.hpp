#pragma once

// JSON mapping for the shared run configuration. Trigonometric coefficients
// are written as [k-vector, cos_amp, sin_amp] triples, e.g.
//   "hamiltonian": {"kind": "kinetic_plus_potential", "d": 1,
//                   "potential": [[[1], 1.0, 0.0]], "growth_constant": 0.5}
//   "initial_data": {"d": 1, "coeffs": [[[1], 0.0, 1.0]], "regularity_r": 4}

#include "json.hpp"

#include "hjnet/flow.hpp"
#include "hjnet/neural.hpp"

namespace hjnet {

using Json = nlohmann::json;

void to_json(Json& j, const TrigSeries& s);
TrigSeries trig_series_from_json(const Json& j, std::size_t d);

void to_json(Json& j, const HamiltonianSpec& spec);
void from_json(const Json& j, HamiltonianSpec& spec);

void to_json(Json& j, const InitialData& u0);
void from_json(const Json& j, InitialData& u0);

void to_json(Json& j, const IntegratorConfig& cfg);
void from_json(const Json& j, IntegratorConfig& cfg);

void to_json(Json& j, const NewtonOptions& opts);
void from_json(const Json& j, NewtonOptions& opts);

void to_json(Json& j, const TrainConfig& cfg);
void from_json(const Json& j, TrainConfig& cfg);

}  // namespace hjnet
