#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "wildfire/geo.hpp"

namespace wildfire {

// The six predictors, in feature-vector order.
enum class Predictor {
    PopulationDensity = 0,
    Ndvi = 1,
    Pdsi = 2,
    TreeMortalityArea = 3,
    TreeMortalityNumber = 4,
    Altitude = 5,
};

inline constexpr std::size_t kNumFeatures = 6;

inline constexpr std::array<Predictor, kNumFeatures> kAllPredictors = {
    Predictor::PopulationDensity, Predictor::Ndvi,   Predictor::Pdsi, Predictor::TreeMortalityArea,
    Predictor::TreeMortalityNumber, Predictor::Altitude};

// "population_density", "ndvi", "pdsi", "tree_mortality_area",
// "tree_mortality_number", "altitude".
std::string_view predictor_name(Predictor p);
std::optional<Predictor> parse_predictor(std::string_view name);

// Population and altitude change slowly enough to borrow a nearby year.
constexpr bool is_slow_moving(Predictor p) {
    return p == Predictor::PopulationDensity || p == Predictor::Altitude;
}

// Mortality is aggregated per cell by summation, the rest by mean.
constexpr bool is_summed(Predictor p) {
    return p == Predictor::TreeMortalityArea || p == Predictor::TreeMortalityNumber;
}

struct FireIncident {
    std::string id;
    int year = 0;
    GeoPoint location;
    double burned_area = 0.0;  // acres
};

// One point observation of a gridded predictor. Altitude carries no year.
// PDSI arrives per county instead (CountyPdsiRecord).
struct PredictorSample {
    Predictor predictor = Predictor::PopulationDensity;
    GeoPoint location;
    std::optional<int> year;
    double value = 0.0;
};

struct CountyPdsiRecord {
    std::string county_id;
    std::shared_ptr<const Region> shape;
    int year = 0;
    double pdsi = 0.0;
};

}  // namespace wildfire
