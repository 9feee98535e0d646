#include "wildfire/counterfactual.hpp"

#include <algorithm>
#include <cmath>

#include "wildfire/error.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

std::string_view scenario_kind_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::PdsiDelta: return "pdsi_delta";
        case ScenarioKind::ClearMortality: return "clear_mortality";
        case ScenarioKind::NdviScale: return "ndvi_scale";
        case ScenarioKind::PopulationScale: return "population_scale";
    }
    return "?";
}

std::optional<ScenarioKind> parse_scenario_kind(std::string_view name) {
    for (const auto k : {ScenarioKind::PdsiDelta, ScenarioKind::ClearMortality, ScenarioKind::NdviScale,
                         ScenarioKind::PopulationScale}) {
        if (scenario_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

Scenario pdsi_delta(double delta) {
    return {ScenarioKind::PdsiDelta, delta, "PDSI " + std::string(delta >= 0 ? "+" : "") + format_double(delta)};
}

Scenario clear_mortality() { return {ScenarioKind::ClearMortality, 0.0, "clear dead trees"}; }

Scenario ndvi_scale(double factor) { return {ScenarioKind::NdviScale, factor, "NDVI x" + format_double(factor)}; }

Scenario population_scale(double factor) {
    return {ScenarioKind::PopulationScale, factor, "population x" + format_double(factor)};
}

void validate(const Scenario& s) {
    if (!std::isfinite(s.parameter)) throw Error(ErrorKind::Validation, "scenario parameter must be finite");
    if (s.kind == ScenarioKind::NdviScale && !(s.parameter > 0.0)) {
        throw Error(ErrorKind::Validation, "NDVI factor must be positive, got " + format_double(s.parameter));
    }
    if (s.kind == ScenarioKind::PopulationScale && s.parameter < 0.0) {
        throw Error(ErrorKind::Validation, "population factor must be non-negative, got " + format_double(s.parameter));
    }
}

std::vector<DynamicSample> apply_scenario(std::span<const DynamicSample> rows, const Scenario& s) {
    validate(s);
    std::vector<DynamicSample> out(rows.begin(), rows.end());
    for (const auto& r : rows) {
        if (r.year != rows.front().year) throw Error(ErrorKind::Contract, "scenario rows span several years");
    }
    for (auto& r : out) {
        FeatureVector& f = r.features;
        switch (s.kind) {
            case ScenarioKind::PdsiDelta:
                f[Predictor::Pdsi] += s.parameter;
                break;
            case ScenarioKind::ClearMortality:
                f[Predictor::TreeMortalityArea] = 0.0;
                f[Predictor::TreeMortalityNumber] = 0.0;
                break;
            case ScenarioKind::NdviScale:
                f[Predictor::Ndvi] = std::min(1.0, f[Predictor::Ndvi] * s.parameter);
                break;
            case ScenarioKind::PopulationScale:
                f[Predictor::PopulationDensity] *= s.parameter;
                break;
        }
    }
    return out;
}

std::vector<int> predict_rows(const TrainedModel& model, std::span<const DynamicSample> rows) {
    if (model.class_labels != std::vector<int>{0, 1}) {
        throw Error(ErrorKind::Contract, "risk-cell counting needs a binary (dynamic) model");
    }
    if (rows.empty()) return {};
    return predict_raw(model, to_dataset(rows).x);
}

std::size_t count_risk_cells(const TrainedModel& model, std::span<const DynamicSample> rows) {
    const auto predicted = predict_rows(model, rows);
    return static_cast<std::size_t>(std::count(predicted.begin(), predicted.end(), 1));
}

std::vector<ScenarioResult> sweep(const TrainedModel& model, std::span<const DynamicSample> rows,
                                  std::span<const Scenario> scenarios) {
    std::vector<ScenarioResult> results;
    if (scenarios.empty()) return results;
    for (const auto& s : scenarios) validate(s);
    const std::vector<int> before = predict_rows(model, rows);
    const auto baseline = static_cast<std::size_t>(std::count(before.begin(), before.end(), 1));
    for (const auto& s : scenarios) {
        const auto treated_rows = apply_scenario(rows, s);
        const std::vector<int> after = predict_rows(model, treated_rows);
        ScenarioResult r{s, baseline, static_cast<std::size_t>(std::count(after.begin(), after.end(), 1)), {}};
        for (std::size_t i = 0; i < after.size(); ++i) {
            if (after[i] != before[i]) r.flips.push_back({rows[i].cell, before[i], after[i]});
        }
        results.push_back(std::move(r));
    }
    return results;
}

std::string sweep_csv(std::span<const ScenarioResult> results) {
    std::string out = "scenario_kind,parameter,baseline_count,treated_count,delta\n";
    for (const auto& r : results) {
        const auto delta = static_cast<long long>(r.treated_risk_cells) - static_cast<long long>(r.baseline_risk_cells);
        out += std::string(scenario_kind_name(r.scenario.kind)) + ',' + format_double(r.scenario.parameter) + ',' +
               std::to_string(r.baseline_risk_cells) + ',' + std::to_string(r.treated_risk_cells) + ',' +
               std::to_string(delta) + '\n';
    }
    return out;
}

nlohmann::json to_json(const Scenario& s) {
    return {{"kind", scenario_kind_name(s.kind)}, {"parameter", s.parameter}, {"description", s.description}};
}

nlohmann::json to_json(const ScenarioResult& r) {
    nlohmann::json flips = nlohmann::json::array();
    for (const auto& f : r.flips) {
        flips.push_back({{"row", f.cell.row}, {"col", f.cell.col}, {"before", f.before}, {"after", f.after}});
    }
    return {{"scenario", to_json(r.scenario)},
            {"baseline_risk_cells", r.baseline_risk_cells},
            {"treated_risk_cells", r.treated_risk_cells},
            {"delta", static_cast<long long>(r.treated_risk_cells) - static_cast<long long>(r.baseline_risk_cells)},
            {"flips", flips}};
}

}  // namespace wildfire
