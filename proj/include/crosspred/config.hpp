#pragma once

#include <string>
#include <vector>

#include "crosspred/simulate.hpp"
#include "crosspred/trainers.hpp"

namespace crosspred {

// Scenario file: TOML-like key = value lines with an optional [defaults]
// section and one [[scenario]] table per scenario. Requires
// schema_version = 1 at the top level. Unknown keys are rejected by name.
struct ConfigFile {
    int schema_version = 0;
    std::vector<ScenarioConfig> scenarios;
};

ConfigFile load_scenario_config(const std::string& path);

// "ridge:<lambda>", "stumps:<rounds>:<lr>:<min_leaf>", "knn:<k>",
// "biased:<offset>:<inner spec...>".
TrainerSpec parse_trainer_spec(const std::string& text);

// "mean", "quantile:<q>", "ols:<cols>:<coord>", "logit:<cols>:<coord>",
// "glm-gaussian:<cols>:<coord>" with <cols> plus-separated 0-based feature
// columns and <coord> the reported coefficient (0 = intercept).
EstimandSpec parse_estimand_spec(const std::string& text);

}  // namespace crosspred
