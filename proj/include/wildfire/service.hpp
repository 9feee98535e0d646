#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wildfire/counterfactual.hpp"
#include "wildfire/features.hpp"
#include "wildfire/grid.hpp"
#include "wildfire/models.hpp"

namespace wildfire {

// Everything the service answers from, fixed at startup.
class Session {
public:
    // Throws Contract unless `table` is a dynamic table and `model` binary.
    Session(TrainedModel model, const FeatureTable& table);

    const TrainedModel& model() const { return model_; }
    const std::string& model_hash() const { return hash_; }
    const GridSpec& grid() const { return grid_; }
    std::vector<int> years() const;
    bool has_year(int year) const { return rows_.count(year) > 0; }
    const std::vector<DynamicSample>& rows(int year) const { return rows_.at(year); }
    const std::vector<int>& baseline(int year) const { return baseline_.at(year); }

private:
    TrainedModel model_;
    std::string hash_;
    GridSpec grid_;
    std::map<int, std::vector<DynamicSample>> rows_;
    std::map<int, std::vector<int>> baseline_;
};

struct HttpReply {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Transport-free request handling. `query` holds decoded query parameters.
HttpReply handle_request(const Session& session, const std::string& method, const std::string& path,
                         const std::multimap<std::string, std::string>& query, const std::string& body);

// HTTP/1.1 front end over handle_request.
class HttpServer {
public:
    explicit HttpServer(const Session& session);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port; throws Io on failure.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called from another thread.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace wildfire
