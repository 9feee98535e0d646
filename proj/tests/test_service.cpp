#include <doctest.h>

#include <thread>

#include "wildfire/error.hpp"
#include "wildfire/service.hpp"
#include "wildfire/synthetic.hpp"

// after Eigen: resolv.h, pulled in here, defines a macro named _res
#include <httplib.h>

using namespace wildfire;
using nlohmann::json;

namespace {

struct Fixture {
    FeatureTable table;
    TrainedModel model;

    Fixture() {
        SyntheticRegionConfig cfg;
        cfg.n_rows = 10;
        cfg.n_cols = 10;
        cfg.base_rate = 0.2;
        const auto r = generate_synthetic_region(cfg);
        const auto years = r.years();
        const auto rows = assemble_dynamic(r.grid, r.incidents, r.samples, r.counties, years);
        table = make_table(r.grid, rows, years, {});
        model = fit_model(ModelVariant::LogReg, to_dataset(table), {}, 4, SmoteConfig{});
        model.metadata["fire_threshold"] = kLargeFireThreshold;
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

HttpReply get(const Session& s, const std::string& path, std::multimap<std::string, std::string> q = {}) {
    return handle_request(s, "GET", path, q, "");
}

HttpReply post(const Session& s, const std::string& body) {
    return handle_request(s, "POST", "/api/counterfactual", {}, body);
}

}  // namespace

TEST_SUITE("service") {
    TEST_CASE("health and model info") {
        const Session s(fixture().model, fixture().table);
        const auto h = get(s, "/healthz");
        CHECK(h.status == 200);
        CHECK(h.body == "ok");
        const auto info = json::parse(get(s, "/api/model/info").body);
        CHECK(info.at("v") == 1);
        CHECK(info.at("variant") == "logreg");
        CHECK(info.at("hash") == model_hash(fixture().model));
        CHECK(info.at("class_labels") == json{0, 1});
    }

    TEST_CASE("grid payload lists every masked cell") {
        const Session s(fixture().model, fixture().table);
        const auto reply = get(s, "/api/grid");
        CHECK(reply.status == 200);
        const auto doc = json::parse(reply.body);
        CHECK(doc.at("cells").size() == 100);
        CHECK(doc.at("geojson").at("features").size() == 100);
    }

    TEST_CASE("risk layer matches direct prediction") {
        const Session s(fixture().model, fixture().table);
        for (const int year : s.years()) {
            const auto doc = json::parse(get(s, "/api/risk", {{"year", std::to_string(year)}}).body);
            std::vector<DynamicSample> rows;
            for (const auto& r : fixture().table.rows) {
                if (r.year == year) rows.push_back(r);
            }
            CHECK(doc.at("count").get<std::size_t>() == count_risk_cells(fixture().model, rows));
            CHECK(doc.at("cells").size() == rows.size());
        }
    }

    TEST_CASE("risk errors") {
        const Session s(fixture().model, fixture().table);
        CHECK(get(s, "/api/risk").status == 400);
        const auto missing = get(s, "/api/risk", {{"year", "1999"}});
        CHECK(missing.status == 404);
        CHECK(json::parse(missing.body).at("known_years") == json(s.years()));
        CHECK(get(s, "/api/risk", {{"year", "soon"}}).status == 404);
        CHECK(get(s, "/nope").status == 404);
        CHECK(handle_request(s, "DELETE", "/api/risk", {}, "").status == 404);
    }

    TEST_CASE("counterfactual endpoint") {
        const Session s(fixture().model, fixture().table);
        const auto reply = post(s, R"({"year": 2015, "kind": "pdsi_delta", "parameter": 2})");
        REQUIRE(reply.status == 200);
        const auto doc = json::parse(reply.body);
        const std::vector<Scenario> one{pdsi_delta(2.0)};
        const auto direct = sweep(fixture().model, s.rows(2015), one);
        CHECK(doc.at("treated_risk_cells") == direct[0].treated_risk_cells);
        CHECK(doc.at("baseline_risk_cells") == direct[0].baseline_risk_cells);
        CHECK(doc.at("flips").size() == direct[0].flips.size());
        CHECK(doc.at("year") == 2015);
        CHECK(doc.at("v") == 1);

        CHECK(post(s, "{not json").status == 400);
        CHECK(post(s, R"({"year": 2015, "kind": "rain", "parameter": 1})").status == 422);
        CHECK(post(s, R"({"year": 2015, "kind": "ndvi_scale", "parameter": 0})").status == 422);
        CHECK(post(s, R"({"year": 2015, "kind": "pdsi_delta"})").status == 422);
        CHECK(post(s, R"({"year": 1900, "kind": "pdsi_delta", "parameter": 1})").status == 404);
        CHECK(post(s, R"({"year": 2015, "kind": "clear_mortality"})").status == 200);
    }

    TEST_CASE("requests leave no state behind") {
        const Session s(fixture().model, fixture().table);
        const auto before = get(s, "/api/risk", {{"year", "2013"}}).body;
        post(s, R"({"year": 2013, "kind": "pdsi_delta", "parameter": 4})");
        post(s, R"({"year": 2013, "kind": "population_scale", "parameter": 10})");
        CHECK(get(s, "/api/risk", {{"year", "2013"}}).body == before);
        const auto a = post(s, R"({"year": 2013, "kind": "ndvi_scale", "parameter": 1.2})").body;
        const auto b = post(s, R"({"year": 2013, "kind": "ndvi_scale", "parameter": 1.2})").body;
        CHECK(a == b);
    }

    TEST_CASE("session preconditions") {
        FeatureTable stat = fixture().table;
        stat.task = Task::Static;
        CHECK_THROWS_AS(Session(fixture().model, stat), Error);
    }

    TEST_CASE("HTTP round trip") {
        const Session s(fixture().model, fixture().table);
        HttpServer server(s);
        const int port = server.bind("127.0.0.1", 0);
        REQUIRE(port > 0);
        std::thread t([&] { server.run(); });
        httplib::Client client("127.0.0.1", port);
        const auto health = client.Get("/healthz");
        REQUIRE(health);
        CHECK(health->status == 200);
        const auto risk = client.Get("/api/risk?year=2014");
        REQUIRE(risk);
        CHECK(risk->body == get(s, "/api/risk", {{"year", "2014"}}).body);
        const auto cf = client.Post("/api/counterfactual", R"({"year": 2014, "kind": "pdsi_delta", "parameter": 1})",
                                    "application/json");
        REQUIRE(cf);
        CHECK(cf->status == 200);
        CHECK(cf->body == post(s, R"({"year": 2014, "kind": "pdsi_delta", "parameter": 1})").body);
        server.stop();
        t.join();
    }
}
