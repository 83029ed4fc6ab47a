#pragma once

#include <json.hpp>

#include "pseudopoisson/inference.hpp"
#include "pseudopoisson/mle.hpp"
#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/simulation.hpp"

namespace pseudopoisson {

using Json = nlohmann::ordered_json;

/// Finite numbers pass through; NaN becomes null and infinities the strings
/// "inf" / "-inf", so non-finite values survive a round trip.
Json number_to_json(double v);
double number_from_json(const Json& j);

Json to_json(const ParamVector& p);
ParamVector params_from_json(const Json& j);

Json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const Json& j);

Json to_json(const FitResult& f);
FitResult fit_from_json(const Json& j);

Json to_json(const MomentSet& m);
Json to_json(const SampleMoments& m);
Json to_json(const LrtResult& r);
Json to_json(const CorrelationBounds& b);
Json to_json(const SimulationSummary& s);

/// Reads {"model": "exp:full", "sign": "+", "truth": {...}, "n": 1000,
/// "reps": 500, "seed": 1, "estimators": ["mme", "mle"], "ci_level": 0.95}.
StudyConfig study_config_from_json(const Json& j);
Json to_json(const StudyConfig& cfg);

}  // namespace pseudopoisson
