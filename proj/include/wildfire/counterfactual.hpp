#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildfire/features.hpp"
#include "wildfire/models.hpp"

namespace wildfire {

enum class ScenarioKind { PdsiDelta, ClearMortality, NdviScale, PopulationScale };

// "pdsi_delta", "clear_mortality", "ndvi_scale", "population_scale".
std::string_view scenario_kind_name(ScenarioKind kind);
std::optional<ScenarioKind> parse_scenario_kind(std::string_view name);

struct Scenario {
    ScenarioKind kind = ScenarioKind::PdsiDelta;
    double parameter = 0.0;  // ignored by ClearMortality
    std::string description;
};

Scenario pdsi_delta(double delta);
Scenario clear_mortality();
Scenario ndvi_scale(double factor);
Scenario population_scale(double factor);

// Throws Validation for a non-finite parameter, an NDVI factor <= 0 or a
// population factor < 0.
void validate(const Scenario& s);

// Perturbs one feature in raw units; every other field is copied unchanged.
// NDVI is clamped to 1 after scaling. Throws Contract when rows span more
// than one year.
std::vector<DynamicSample> apply_scenario(std::span<const DynamicSample> rows, const Scenario& s);

// Rows predicted 1. Throws Contract unless the model's classes are {0, 1}.
std::size_t count_risk_cells(const TrainedModel& model, std::span<const DynamicSample> rows);

// Per-row binary predictions, in row order.
std::vector<int> predict_rows(const TrainedModel& model, std::span<const DynamicSample> rows);

struct Flip {
    CellId cell;
    int before = 0;
    int after = 0;
};

struct ScenarioResult {
    Scenario scenario;
    std::size_t baseline_risk_cells = 0;
    std::size_t treated_risk_cells = 0;
    std::vector<Flip> flips;
};

// One result per scenario, all against the same baseline predictions.
std::vector<ScenarioResult> sweep(const TrainedModel& model, std::span<const DynamicSample> rows,
                                  std::span<const Scenario> scenarios);

// scenario_kind,parameter,baseline_count,treated_count,delta
std::string sweep_csv(std::span<const ScenarioResult> results);

nlohmann::json to_json(const Scenario& s);
nlohmann::json to_json(const ScenarioResult& r);

}  // namespace wildfire
