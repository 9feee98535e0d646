#include "wildfire/service.hpp"

#include <algorithm>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "wildfire/error.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

namespace {

constexpr int kSchemaVersion = 1;

HttpReply json_reply(int status, nlohmann::json payload) {
    payload["v"] = kSchemaVersion;
    return {status, "application/json", payload.dump()};
}

HttpReply error_reply(int status, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
    extra["error"] = message;
    return json_reply(status, std::move(extra));
}

nlohmann::json grid_payload(const GridSpec& grid) {
    nlohmann::json cells = nlohmann::json::array();
    for (const CellId c : grid.cells()) cells.push_back({c.row, c.col});
    nlohmann::json out = to_json(grid);
    out["cells"] = std::move(cells);
    out["geojson"] = cells_geojson(grid);
    return out;
}

HttpReply risk(const Session& s, const std::multimap<std::string, std::string>& query) {
    const auto it = query.find("year");
    const nlohmann::json known = {{"known_years", s.years()}};
    if (it == query.end()) return error_reply(400, "missing year parameter", known);
    const auto year = parse_int(it->second);
    if (!year || !s.has_year(static_cast<int>(*year))) {
        return error_reply(404, "no feature rows for year " + it->second, known);
    }
    const int y = static_cast<int>(*year);
    const auto& rows = s.rows(y);
    const auto& predicted = s.baseline(y);
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        cells.push_back({{"row", rows[i].cell.row}, {"col", rows[i].cell.col}, {"risk", predicted[i]}});
    }
    const auto count = std::count(predicted.begin(), predicted.end(), 1);
    return json_reply(200, {{"year", y}, {"count", count}, {"cells", cells}});
}

HttpReply counterfactual(const Session& s, const std::string& body) {
    nlohmann::json req;
    try {
        req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
        return error_reply(400, std::string("malformed JSON body: ") + e.what());
    }
    if (!req.is_object() || !req.contains("year") || !req["year"].is_number_integer() || !req.contains("kind") ||
        !req["kind"].is_string()) {
        return error_reply(422, "body needs integer \"year\" and string \"kind\"");
    }
    const int year = req["year"].get<int>();
    if (!s.has_year(year)) return error_reply(404, "no feature rows for year " + std::to_string(year), {{"known_years", s.years()}});
    const auto kind = parse_scenario_kind(req["kind"].get<std::string>());
    if (!kind) return error_reply(422, "unknown scenario kind " + req["kind"].get<std::string>());
    double parameter = 0.0;
    if (*kind != ScenarioKind::ClearMortality) {
        if (!req.contains("parameter") || !req["parameter"].is_number()) {
            return error_reply(422, "scenario needs a numeric \"parameter\"");
        }
        parameter = req["parameter"].get<double>();
    }
    Scenario scenario;
    switch (*kind) {
        case ScenarioKind::PdsiDelta: scenario = pdsi_delta(parameter); break;
        case ScenarioKind::ClearMortality: scenario = clear_mortality(); break;
        case ScenarioKind::NdviScale: scenario = ndvi_scale(parameter); break;
        case ScenarioKind::PopulationScale: scenario = population_scale(parameter); break;
    }
    try {
        validate(scenario);
    } catch (const Error& e) {
        return error_reply(422, e.what());
    }
    const std::vector<Scenario> one{scenario};
    const auto results = sweep(s.model(), s.rows(year), one);
    nlohmann::json payload = to_json(results.front());
    payload["year"] = year;
    payload["fire_threshold"] = s.model().metadata.value("fire_threshold", nlohmann::json());
    return json_reply(200, std::move(payload));
}

}  // namespace

Session::Session(TrainedModel model, const FeatureTable& table)
    : model_(std::move(model)), hash_(wildfire::model_hash(model_)), grid_(table_grid(table)) {
    if (table.task != Task::Dynamic) throw Error(ErrorKind::Contract, "the service needs a dynamic feature table");
    if (model_.class_labels != std::vector<int>{0, 1}) throw Error(ErrorKind::Contract, "the service needs a binary model");
    for (const auto& r : table.rows) rows_[r.year].push_back(r);
    for (const auto& [year, rows] : rows_) baseline_[year] = predict_rows(model_, rows);
}

std::vector<int> Session::years() const {
    std::vector<int> out;
    for (const auto& [year, rows] : rows_) out.push_back(year);
    return out;
}

HttpReply handle_request(const Session& session, const std::string& method, const std::string& path,
                         const std::multimap<std::string, std::string>& query, const std::string& body) {
    try {
        if (method == "GET" && path == "/healthz") return {200, "text/plain", "ok"};
        if (method == "GET" && path == "/api/grid") return json_reply(200, grid_payload(session.grid()));
        if (method == "GET" && path == "/api/risk") return risk(session, query);
        if (method == "POST" && path == "/api/counterfactual") return counterfactual(session, body);
        if (method == "GET" && path == "/api/model/info") {
            const TrainedModel& m = session.model();
            return json_reply(200, {{"variant", variant_name(m.variant)},
                                    {"hash", session.model_hash()},
                                    {"class_labels", m.class_labels},
                                    {"seed", m.seed},
                                    {"config", to_json(m.config, m.variant)},
                                    {"metadata", m.metadata}});
        }
        return error_reply(404, "no route for " + method + " " + path);
    } catch (const Error& e) {
        return error_reply(e.is_validation() ? 422 : 500, e.what());
    }
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(const Session& session) : impl_(std::make_unique<Impl>()) {
    const auto forward = [&session](const httplib::Request& req, httplib::Response& res) {
        const std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
        const HttpReply reply = handle_request(session, req.method, req.path, query, req.body);
        res.status = reply.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(reply.body, reply.content_type);
    };
    impl_->server.Get(".*", forward);
    impl_->server.Post(".*", forward);
    impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.status = 204;
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                                : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace wildfire
