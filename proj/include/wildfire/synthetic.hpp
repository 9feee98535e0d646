#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildfire/features.hpp"
#include "wildfire/grid.hpp"
#include "wildfire/records.hpp"

namespace wildfire {

struct SyntheticRegionConfig {
    std::uint64_t seed = 1;
    std::uint32_t n_rows = 20;
    std::uint32_t n_cols = 20;
    int first_year = 2011;
    int last_year = 2015;  // inclusive
    // Coefficients of the planted logistic risk model over standardized
    // features, in predictor order.
    std::array<double, kNumFeatures> effect_weights = {2.5, -2.5, -5.0, 2.5, 1.5, -1.5};
    double base_rate = 0.05;
    double origin_lat = 36.0;  // south-west corner of the region
    double origin_lon = -121.0;
    double cell_size = 0.1;
    std::uint32_t county_block = 3;  // counties are county_block x county_block cells
};

// Validates the invariants (n_rows, n_cols >= 2; base_rate in (0, 0.5];
// first_year <= last_year; finite weights). Throws Validation.
void validate(const SyntheticRegionConfig& cfg);

struct TruthRow {
    CellId cell;
    int year = 0;
    FeatureVector features;  // what assembly recovers from the generated files
    double probability = 0.0;
    int label = 0;
};

struct SyntheticRegion {
    SyntheticRegionConfig config;
    GridSpec grid;
    Region region;
    std::vector<FireIncident> incidents;
    std::vector<PredictorSample> samples;
    // Monthly county values as written to county_pdsi.csv, and the annual
    // records a loader derives from them.
    struct MonthlyPdsi {
        std::string county_id;
        int year = 0;
        int month = 0;
        double pdsi = 0.0;
    };
    std::vector<MonthlyPdsi> monthly_pdsi;
    std::vector<CountyPdsiRecord> counties;
    std::vector<std::pair<std::string, std::shared_ptr<const Region>>> county_shapes;
    std::vector<TruthRow> truth;  // cell-major, year-inner
    double intercept = 0.0;       // planted logistic intercept
    std::vector<int> years() const;
};

// Fixing the seed fixes every value. Labels are Bernoulli draws from the
// planted model; with at least 400 cell-years they are redrawn until the
// realized positive rate is within 20% (relative) of base_rate.
SyntheticRegion generate_synthetic_region(const SyntheticRegionConfig& cfg);

nlohmann::json to_json(const SyntheticRegionConfig& cfg);
SyntheticRegionConfig synthetic_config_from_json(const nlohmann::json& doc, SyntheticRegionConfig base = {});

// Region directory layout:
//   incidents.csv, predictors.csv, county_pdsi.csv, counties.geojson,
//   region.geojson, grid.json, truth.csv, manifest.json
void write_region(const SyntheticRegion& region, const std::string& dir);

// The inputs needed to assemble a region directory (synthetic or real).
struct RegionInputs {
    GridSpec grid;
    std::vector<FireIncident> incidents;
    std::vector<PredictorSample> samples;
    std::vector<CountyPdsiRecord> counties;
    std::vector<std::string> diagnostics;  // "file:line: message"
};

// Loads grid.json, incidents.csv, predictors.csv, county_pdsi.csv and
// counties.geojson from `dir`.
RegionInputs load_region(const std::string& dir, bool strict = false);

}  // namespace wildfire
