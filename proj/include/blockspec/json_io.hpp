#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "blockspec/estimator.hpp"
#include "blockspec/experiments.hpp"
#include "blockspec/signal.hpp"

namespace blockspec {

nlohmann::json signal_to_json(const LineSpectralSignal& signal);
LineSpectralSignal signal_from_json(const nlohmann::json& j);

nlohmann::json prior_to_json(const BlockPrior& prior);
BlockPrior prior_from_json(const nlohmann::json& j);

nlohmann::json sample_set_to_json(const SampleSet& set);
SampleSet sample_set_from_json(const nlohmann::json& j);

/// Observation carries its sample set: fields n, observed, values.
nlohmann::json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

/// Single simulate-output object: ground-truth signal, prior, and observation
/// merged flat (the field sets are disjoint by construction).
nlohmann::json instance_to_json(const LineSpectralSignal& signal, const BlockPrior& prior,
                                const Observation& obs);

nlohmann::json spectrum_to_json(const RecoveredSpectrum& spectrum);

SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// CSV with header `f,abs_Q`, one row per trace sample, %.17g values.
void write_dual_poly_csv(const RecoveredSpectrum& spectrum, std::ostream& os);

std::string dump_json(const nlohmann::json& j);

}  // namespace blockspec
