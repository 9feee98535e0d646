#include <doctest.h>

#include <random>

#include "wildfire/counterfactual.hpp"
#include "wildfire/error.hpp"

using namespace wildfire;

namespace {

DynamicSample row(std::uint32_t col, double pdsi, int year = 2015) {
    DynamicSample s;
    s.cell = {0, col};
    s.year = year;
    s.features[Predictor::PopulationDensity] = 120.0;
    s.features[Predictor::Ndvi] = 0.9;
    s.features[Predictor::Pdsi] = pdsi;
    s.features[Predictor::TreeMortalityArea] = 1763.86;
    s.features[Predictor::TreeMortalityNumber] = 608;
    s.features[Predictor::Altitude] = 250;
    return s;
}

// Predicts fire exactly when PDSI < -1 (logit = -10 (pdsi + 1)).
TrainedModel drought_model() {
    TrainedModel m;
    m.variant = ModelVariant::LogReg;
    LogRegParams p;
    p.weights = Eigen::MatrixXd::Zero(1, 6);
    p.weights(0, 2) = -10.0;
    p.bias = Eigen::VectorXd::Constant(1, -10.0);
    m.params = p;
    m.standardization = Standardization::identity(6);
    m.class_labels = {0, 1};
    return m;
}

}  // namespace

TEST_SUITE("counterfactual") {
    TEST_CASE("perturbations touch one feature only") {
        const std::vector<DynamicSample> rows{row(0, -0.8)};
        const auto wetter = apply_scenario(rows, pdsi_delta(2.0));
        CHECK(wetter[0].features.pdsi() == doctest::Approx(1.2));
        const auto cleared = apply_scenario(rows, clear_mortality());
        CHECK(cleared[0].features.tree_mortality_area() == 0.0);
        CHECK(cleared[0].features.tree_mortality_number() == 0.0);
        CHECK(cleared[0].features.pdsi() == -0.8);
        const auto greener = apply_scenario(rows, ndvi_scale(1.5));
        CHECK(greener[0].features.ndvi() == 1.0);
        const auto crowded = apply_scenario(rows, population_scale(2.0));
        CHECK(crowded[0].features.population_density() == 240.0);
        for (const auto* out : {&wetter, &cleared, &greener, &crowded}) {
            CHECK((*out)[0].cell == rows[0].cell);
            CHECK((*out)[0].year == rows[0].year);
            CHECK((*out)[0].label == rows[0].label);
            CHECK((*out)[0].features.altitude() == rows[0].features.altitude());
        }
    }

    TEST_CASE("identity scenarios change nothing") {
        std::vector<DynamicSample> rows;
        for (std::uint32_t i = 0; i < 20; ++i) rows.push_back(row(i, -3.0 + 0.3 * i));
        for (const auto& s : {pdsi_delta(0.0), ndvi_scale(1.0), population_scale(1.0)}) {
            const auto out = apply_scenario(rows, s);
            for (std::size_t i = 0; i < rows.size(); ++i) CHECK(out[i].features == rows[i].features);
        }
    }

    TEST_CASE("risk cells under a drought-threshold model") {
        const TrainedModel m = drought_model();
        const std::vector<DynamicSample> rows{row(0, -1.2), row(1, -0.5), row(2, -1.1)};
        CHECK(count_risk_cells(m, rows) == 2);
        CHECK(count_risk_cells(m, std::span<const DynamicSample>{}) == 0);
        const std::vector<Scenario> s{pdsi_delta(0.15)};
        const auto r = sweep(m, rows, s);
        REQUIRE(r.size() == 1);
        CHECK(r[0].baseline_risk_cells == 2);
        CHECK(r[0].treated_risk_cells == 1);
        REQUIRE(r[0].flips.size() == 1);
        CHECK(r[0].flips[0].cell == CellId{0, 2});
        CHECK(r[0].flips[0].before == 1);
        CHECK(r[0].flips[0].after == 0);
    }

    TEST_CASE("flips account for the change in count") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-4.0, 2.0);
        std::vector<DynamicSample> rows;
        for (std::uint32_t i = 0; i < 300; ++i) rows.push_back(row(i, u(rng)));
        const std::vector<Scenario> s{pdsi_delta(-1.0), pdsi_delta(0.0), pdsi_delta(1.0), pdsi_delta(1.5),
                                      pdsi_delta(2.0),  pdsi_delta(3.0), pdsi_delta(4.0), clear_mortality()};
        const auto results = sweep(drought_model(), rows, s);
        long long previous = -1;
        for (std::size_t k = 0; k < results.size(); ++k) {
            const auto& r = results[k];
            long long up = 0, down = 0;
            for (const auto& f : r.flips) (f.after == 1 ? up : down) += 1;
            CHECK(static_cast<long long>(r.treated_risk_cells) - static_cast<long long>(r.baseline_risk_cells) ==
                  up - down);
            if (k >= 1 && k <= 6) {
                if (previous >= 0) CHECK(static_cast<long long>(r.treated_risk_cells) <= previous);
                previous = static_cast<long long>(r.treated_risk_cells);
            }
        }
        CHECK(results[1].flips.empty());
        CHECK(results[6].treated_risk_cells == 0);
    }

    TEST_CASE("repeating a scenario gives the same answer") {
        std::vector<DynamicSample> rows;
        for (std::uint32_t i = 0; i < 30; ++i) rows.push_back(row(i, -2.0 + 0.1 * i));
        const std::vector<Scenario> s{pdsi_delta(0.5), pdsi_delta(0.5)};
        const auto r = sweep(drought_model(), rows, s);
        CHECK(to_json(r[0]) == to_json(r[1]));
    }

    TEST_CASE("invalid inputs") {
        const std::vector<DynamicSample> mixed{row(0, -1.0, 2014), row(1, -1.0, 2015)};
        CHECK_THROWS_AS(apply_scenario(mixed, pdsi_delta(1.0)), Error);
        const std::vector<DynamicSample> rows{row(0, -1.0)};
        for (const auto& bad : {ndvi_scale(0.0), ndvi_scale(-1.0), population_scale(-0.5), pdsi_delta(NAN)}) {
            try {
                apply_scenario(rows, bad);
                FAIL("expected a validation error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::Validation);
            }
        }
        TrainedModel three = drought_model();
        three.class_labels = {0, 1, 2};
        CHECK_THROWS_AS(count_risk_cells(three, rows), Error);
    }

    TEST_CASE("CSV and names") {
        const std::vector<DynamicSample> rows{row(0, -1.2), row(1, -0.5)};
        const std::vector<Scenario> s{pdsi_delta(1.0), clear_mortality()};
        const std::string csv = sweep_csv(sweep(drought_model(), rows, s));
        CHECK(csv == "scenario_kind,parameter,baseline_count,treated_count,delta\n"
                     "pdsi_delta,1,1,0,-1\n"
                     "clear_mortality,0,1,1,0\n");
        for (const auto k : {ScenarioKind::PdsiDelta, ScenarioKind::ClearMortality, ScenarioKind::NdviScale,
                             ScenarioKind::PopulationScale}) {
            CHECK(parse_scenario_kind(scenario_kind_name(k)) == k);
        }
        CHECK_FALSE(parse_scenario_kind("rain").has_value());
    }
}
