#pragma once

#include <nlohmann/json.hpp>

#include "wittenlab/correlation.hpp"
#include "wittenlab/mcmc.hpp"
#include "wittenlab/pressure.hpp"
#include "wittenlab/witten.hpp"

namespace wittenlab {

// Serializers picked up by nlohmann::json through ADL.
void to_json(nlohmann::json& j, const SolveReport& r);
void to_json(nlohmann::json& j, const CorrelationReport& r);
void to_json(nlohmann::json& j, const ThreePointTerms& r);
void to_json(nlohmann::json& j, const WeightedDerivativeReport& r);
void to_json(nlohmann::json& j, const DecayPoint& r);
void to_json(nlohmann::json& j, const DecayFitReport& r);
void to_json(nlohmann::json& j, const ThreePointSample& r);
void to_json(nlohmann::json& j, const EnvelopeFitReport& r);
void to_json(nlohmann::json& j, const McmcEstimate& r);
void to_json(nlohmann::json& j, const TaylorRow& r);
void to_json(nlohmann::json& j, const TaylorReport& r);
void to_json(nlohmann::json& j, const DivergenceCheck& r);

nlohmann::json describe_grid(const GridSpec& grid);

}  // namespace wittenlab
