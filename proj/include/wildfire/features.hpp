#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildfire/dataset.hpp"
#include "wildfire/grid.hpp"
#include "wildfire/records.hpp"

namespace wildfire {

// The six per-cell predictors in raw units: population density
// (persons/km^2), NDVI, PDSI, tree mortality area (acres), tree mortality
// number (count), altitude (m).
struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    double& operator[](Predictor p) { return values[static_cast<std::size_t>(p)]; }
    double operator[](Predictor p) const { return values[static_cast<std::size_t>(p)]; }

    double population_density() const { return (*this)[Predictor::PopulationDensity]; }
    double ndvi() const { return (*this)[Predictor::Ndvi]; }
    double pdsi() const { return (*this)[Predictor::Pdsi]; }
    double tree_mortality_area() const { return (*this)[Predictor::TreeMortalityArea]; }
    double tree_mortality_number() const { return (*this)[Predictor::TreeMortalityNumber]; }
    double altitude() const { return (*this)[Predictor::Altitude]; }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class RiskLevel { Low = 0, Medium = 1, High = 2 };

std::string_view risk_name(RiskLevel level);

// Bit (1 << predictor index) set when that feature was imputed.
using ImputedMask = std::uint8_t;

struct StaticSample {
    CellId cell;
    FeatureVector features;
    RiskLevel label = RiskLevel::Low;
    double cumulative_burned = 0.0;
    ImputedMask imputed = 0;
};

struct DynamicSample {
    CellId cell;
    int year = 0;
    FeatureVector features;
    int label = 0;
    ImputedMask imputed = 0;
};

inline constexpr double kLowRiskCeiling = 10.0;      // acres
inline constexpr double kHighRiskFloor = 5000.0;     // acres
inline constexpr double kLargeFireThreshold = 300.0; // acres

// Low below 10 acres, Medium in [10, 5000), High from 5000.
RiskLevel label_static(double cumulative_burned);

// 1 iff some incident burned at least `threshold` acres.
int label_dynamic(std::span<const FireIncident> incidents, double threshold = kLargeFireThreshold);

// Mean for population, NDVI and altitude; sum for the mortality predictors.
// Empty input gives 0 for summed predictors and nullopt for averaged ones
// (the caller imputes). Throws Contract when samples mix predictors.
std::optional<double> aggregate_cell(std::span<const PredictorSample> samples, Predictor predictor);

// Area-weighted PDSI of one cell from the counties overlapping it, renormalized
// by the covered fraction. Throws NoCoverage when no county overlaps.
double disaggregate_pdsi(const GridSpec& grid, CellId cell, std::span<const CountyPdsiRecord> counties);

struct AssemblyOptions {
    double fire_threshold = kLargeFireThreshold;
    // Dynamic rows for year Y take predictor values from Y-1 (labels stay Y).
    bool lag_one_year = false;
    // Cells with no county overlap get the region-mean PDSI instead of failing.
    bool impute_uncovered_pdsi = false;
};

std::vector<StaticSample> assemble_static(const GridSpec& grid, std::span<const FireIncident> incidents,
                                          std::span<const PredictorSample> samples,
                                          std::span<const CountyPdsiRecord> counties,
                                          const AssemblyOptions& opts = {});

// One row per (masked cell, year), cell-major. Throws Assembly naming the
// predictor and year when a fast-moving predictor has no data for a year.
std::vector<DynamicSample> assemble_dynamic(const GridSpec& grid, std::span<const FireIncident> incidents,
                                            std::span<const PredictorSample> samples,
                                            std::span<const CountyPdsiRecord> counties,
                                            std::span<const int> years, const AssemblyOptions& opts = {});

Dataset to_dataset(std::span<const StaticSample> rows);
Dataset to_dataset(std::span<const DynamicSample> rows);
Eigen::VectorXd to_vector(const FeatureVector& f);

// Feature table files: CSV rows
//   cell_row,cell_col,year,pop_density,ndvi,pdsi,tm_area,tm_number,altitude,label
// (year empty and label 0/1/2 = low/medium/high for static tables) plus a JSON
// sidecar holding the grid, threshold, years, imputation flags and the
// standardization fit on the whole table.
enum class Task { Static, Dynamic };

std::string_view task_name(Task task);

struct FeatureTable {
    Task task = Task::Dynamic;
    std::vector<DynamicSample> rows;  // year is 0 for static rows
    nlohmann::json meta = nlohmann::json::object();
};

FeatureTable make_table(const GridSpec& grid, std::span<const StaticSample> rows, const AssemblyOptions& opts);
FeatureTable make_table(const GridSpec& grid, std::span<const DynamicSample> rows, std::span<const int> years,
                        const AssemblyOptions& opts);

std::string table_csv(const FeatureTable& table);
FeatureTable parse_table(std::string_view csv, const nlohmann::json& sidecar);

void save_table(const FeatureTable& table, const std::string& csv_path);
// Reads `csv_path` and its sidecar `csv_path + ".json"`.
FeatureTable load_table(const std::string& csv_path);

Dataset to_dataset(const FeatureTable& table);
std::vector<int> table_years(const FeatureTable& table);
GridSpec table_grid(const FeatureTable& table);

}  // namespace wildfire
