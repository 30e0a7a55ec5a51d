#pragma once

#include <string>

#include <json.hpp>

#include "seqdr/dgp.hpp"
#include "seqdr/pipeline.hpp"
#include "seqdr/study.hpp"

namespace seqdr {

using json = nlohmann::json;

// ScenarioSpec <-> JSON. Reading accepts either explicit coefficient vectors
// or a compact form (n, d1, d2, sparsities, optional "pattern" /
// "misspec") that is expanded through default_scenario.
json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const json& j);

json estimator_to_json(const NamedEstimator& est);
NamedEstimator estimator_from_json(const json& j);

json study_config_to_json(const StudyConfig& config);
StudyConfig study_config_from_json(const json& j);

json study_result_to_json(const StudyResult& result);

json report_to_json(const EstimateReport& report);

json eta_to_json(const NuisanceParams& eta);
NuisanceParams eta_from_json(const json& j, int d1, int d);

json ground_truth_to_json(const GroundTruth& truth);

json load_json_file(const std::string& path);
void save_json_file(const json& j, const std::string& path);

}  // namespace seqdr
