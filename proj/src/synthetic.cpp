#include "wildfire/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wildfire/dataset.hpp"
#include "wildfire/error.hpp"
#include "wildfire/geojson.hpp"
#include "wildfire/ingest.hpp"
#include "wildfire/seed.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

namespace {

constexpr int kMonths = 12;
constexpr std::size_t kMinRowsForRateCheck = 400;
constexpr double kRateTolerance = 0.2;
constexpr int kMaxLabelDraws = 10000;

double sigmoid(double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

// Point strictly inside cell c, away from the edges.
GeoPoint point_in_cell(const GridSpec& grid, CellId c, Rng& rng) {
    const GeoRect b = cell_bounds(grid, c);
    return {b.lat_lo + (b.lat_hi - b.lat_lo) * (0.05 + 0.9 * uniform01(rng)),
            b.lon_lo + (b.lon_hi - b.lon_lo) * (0.05 + 0.9 * uniform01(rng))};
}

// Intercept b with mean(sigmoid(score + b)) == rate, by bisection.
double solve_intercept(const std::vector<double>& scores, double rate) {
    double lo = -100.0;
    double hi = 100.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double mean = 0.0;
        for (const double s : scores) mean += sigmoid(s + mid);
        mean /= static_cast<double>(scores.size());
        (mean < rate ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::string county_id(std::uint32_t block_row, std::uint32_t block_col) {
    return "C" + std::to_string(block_row) + "_" + std::to_string(block_col);
}

}  // namespace

void validate(const SyntheticRegionConfig& cfg) {
    const auto fail = [](const std::string& m) { throw Error(ErrorKind::Validation, "synthetic config: " + m); };
    if (cfg.n_rows < 2 || cfg.n_cols < 2) fail("n_rows and n_cols must be at least 2");
    if (!(cfg.base_rate > 0.0 && cfg.base_rate <= 0.5)) fail("base_rate must lie in (0, 0.5]");
    if (cfg.first_year > cfg.last_year) fail("first_year after last_year");
    if (cfg.first_year < kFirstIncidentYear) fail("years before " + std::to_string(kFirstIncidentYear));
    if (!(cfg.cell_size > 0.0) || !std::isfinite(cfg.cell_size)) fail("cell_size must be positive");
    if (cfg.county_block == 0) fail("county_block must be positive");
    for (const double w : cfg.effect_weights) {
        if (!std::isfinite(w)) fail("effect weights must be finite");
    }
    const double lat_hi = cfg.origin_lat + cfg.n_rows * cfg.cell_size;
    const double lon_hi = cfg.origin_lon + cfg.n_cols * cfg.cell_size;
    if (cfg.origin_lat < -90.0 || lat_hi > 90.0 || cfg.origin_lon < -180.0 || lon_hi > 180.0) {
        fail("region extends outside valid coordinates");
    }
}

std::vector<int> SyntheticRegion::years() const {
    std::vector<int> out;
    for (int y = config.first_year; y <= config.last_year; ++y) out.push_back(y);
    return out;
}

SyntheticRegion generate_synthetic_region(const SyntheticRegionConfig& cfg) {
    validate(cfg);
    const double s = cfg.cell_size;
    const GeoRect bbox{cfg.origin_lat, cfg.origin_lat + cfg.n_rows * s, cfg.origin_lon, cfg.origin_lon + cfg.n_cols * s};
    SyntheticRegion out{cfg, build_grid(bbox, s, rectangle(bbox)), Region{rectangle(bbox)}, {}, {}, {}, {}, {}, {}, 0.0};
    const GridSpec& grid = out.grid;
    const std::vector<int> years = out.years();
    const std::size_t n_years = years.size();
    const auto cells = grid.cells();

    // Counties tile the grid in blocks whose edges coincide with cell edges,
    // so every cell lies in exactly one county.
    const std::uint32_t blk = cfg.county_block;
    const std::uint32_t block_rows = (cfg.n_rows + blk - 1) / blk;
    const std::uint32_t block_cols = (cfg.n_cols + blk - 1) / blk;
    for (std::uint32_t br = 0; br < block_rows; ++br) {
        for (std::uint32_t bc = 0; bc < block_cols; ++bc) {
            const CellId lo{br * blk, bc * blk};
            const CellId hi{std::min(cfg.n_rows, (br + 1) * blk) - 1, std::min(cfg.n_cols, (bc + 1) * blk) - 1};
            const GeoRect a = cell_bounds(grid, lo);
            const GeoRect b = cell_bounds(grid, hi);
            out.county_shapes.emplace_back(county_id(br, bc), std::make_shared<const Region>(
                                                                  Region{rectangle({a.lat_lo, b.lat_hi, a.lon_lo, b.lon_hi})}));
        }
    }

    Rng pdsi_rng(derive_seed(cfg.seed, "pdsi"));
    // annual[county][year index], computed exactly as the loader does.
    std::vector<std::vector<double>> annual(out.county_shapes.size(), std::vector<double>(n_years));
    for (std::size_t ci = 0; ci < out.county_shapes.size(); ++ci) {
        const double county_level = 1.5 * standard_normal(pdsi_rng);
        for (std::size_t yi = 0; yi < n_years; ++yi) {
            const double year_level = county_level + 2.0 * standard_normal(pdsi_rng);
            double sum = 0.0;
            for (int m = 1; m <= kMonths; ++m) {
                const double v = year_level + 0.8 * standard_normal(pdsi_rng);
                out.monthly_pdsi.push_back({out.county_shapes[ci].first, years[yi], m, v});
                sum += v;
            }
            annual[ci][yi] = sum / kMonths;
        }
    }
    for (std::size_t yi = 0; yi < n_years; ++yi) {
        for (std::size_t ci = 0; ci < out.county_shapes.size(); ++ci) {
            out.counties.push_back(
                {out.county_shapes[ci].first, out.county_shapes[ci].second, years[yi], annual[ci][yi]});
        }
    }

    // Planted per-cell values. Every predictor is observed once per cell (and
    // year), at the cell center, so aggregation recovers it unchanged.
    Rng feature_rng(derive_seed(cfg.seed, "features"));
    const std::size_t n_rows_total = cells.size() * n_years;
    out.truth.reserve(n_rows_total);
    for (const CellId c : cells) {
        const GeoPoint center = cell_bounds(grid, c).center();
        const double altitude = 900.0 + 700.0 * standard_normal(feature_rng);
        const double pop_level = 4.0 + 1.2 * standard_normal(feature_rng);
        const double ndvi_level = 0.43 + 0.15 * standard_normal(feature_rng);
        out.samples.push_back({Predictor::Altitude, center, std::nullopt, altitude});
        const std::size_t ci = (c.row / blk) * block_cols + c.col / blk;
        for (std::size_t yi = 0; yi < n_years; ++yi) {
            TruthRow t;
            t.cell = c;
            t.year = years[yi];
            t.features[Predictor::PopulationDensity] = std::exp(pop_level + 0.1 * standard_normal(feature_rng));
            t.features[Predictor::Ndvi] =
                std::clamp(ndvi_level + 0.08 * standard_normal(feature_rng), -0.95, 0.95);
            t.features[Predictor::Pdsi] = annual[ci][yi];
            const double area = std::exp(5.5 + 1.0 * standard_normal(feature_rng));
            t.features[Predictor::TreeMortalityArea] = area;
            t.features[Predictor::TreeMortalityNumber] =
                std::round(area * 0.35 * std::exp(0.4 * standard_normal(feature_rng)));
            t.features[Predictor::Altitude] = altitude;
            for (const Predictor p : kAllPredictors) {
                if (p == Predictor::Pdsi || p == Predictor::Altitude) continue;
                out.samples.push_back({p, center, years[yi], t.features[p]});
            }
            out.truth.push_back(t);
        }
    }

    // Logistic ground truth over standardized features.
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(n_rows_total), static_cast<Eigen::Index>(kNumFeatures));
    for (std::size_t i = 0; i < n_rows_total; ++i) raw.row(static_cast<Eigen::Index>(i)) = to_vector(out.truth[i].features).transpose();
    const Eigen::MatrixXd z = fit_standardization(raw).apply(raw);
    Eigen::VectorXd w(static_cast<Eigen::Index>(kNumFeatures));
    for (std::size_t j = 0; j < kNumFeatures; ++j) w(static_cast<Eigen::Index>(j)) = cfg.effect_weights[j];
    const Eigen::VectorXd score_vec = z * w;
    const std::vector<double> scores(score_vec.data(), score_vec.data() + score_vec.size());
    out.intercept = solve_intercept(scores, cfg.base_rate);
    for (std::size_t i = 0; i < n_rows_total; ++i) out.truth[i].probability = sigmoid(scores[i] + out.intercept);

    const double lo_rate = cfg.base_rate * (1.0 - kRateTolerance);
    const double hi_rate = cfg.base_rate * (1.0 + kRateTolerance);
    for (int draw = 0;; ++draw) {
        Rng label_rng(derive_seed(cfg.seed, "labels", static_cast<std::uint64_t>(draw)));
        std::size_t positives = 0;
        for (auto& t : out.truth) {
            t.label = uniform01(label_rng) < t.probability ? 1 : 0;
            positives += static_cast<std::size_t>(t.label);
        }
        const double rate = static_cast<double>(positives) / static_cast<double>(n_rows_total);
        if (n_rows_total < kMinRowsForRateCheck || (rate >= lo_rate && rate <= hi_rate)) break;
        if (draw + 1 >= kMaxLabelDraws) {
            throw Error(ErrorKind::Contract, "could not draw labels near the base rate");
        }
    }

    // Incidents: a large fire (>= 300 acres, sometimes >= 5000) for every
    // positive cell-year, and scattered small fires that never reach 300.
    Rng fire_rng(derive_seed(cfg.seed, "incidents"));
    std::size_t next_id = 1;
    for (const auto& t : out.truth) {
        if (t.label == 1) {
            const double area = 300.0 * std::pow(40.0, uniform01(fire_rng));
            out.incidents.push_back({"F" + std::to_string(next_id++), t.year, point_in_cell(grid, t.cell, fire_rng), area});
        }
        if (uniform01(fire_rng) < 0.3) {
            const double area = 0.1 * std::pow(2990.0, uniform01(fire_rng));
            out.incidents.push_back({"F" + std::to_string(next_id++), t.year, point_in_cell(grid, t.cell, fire_rng), area});
        }
    }
    return out;
}

nlohmann::json to_json(const SyntheticRegionConfig& cfg) {
    return {{"seed", cfg.seed},
            {"n_rows", cfg.n_rows},
            {"n_cols", cfg.n_cols},
            {"first_year", cfg.first_year},
            {"last_year", cfg.last_year},
            {"effect_weights", cfg.effect_weights},
            {"base_rate", cfg.base_rate},
            {"origin_lat", cfg.origin_lat},
            {"origin_lon", cfg.origin_lon},
            {"cell_size", cfg.cell_size},
            {"county_block", cfg.county_block}};
}

SyntheticRegionConfig synthetic_config_from_json(const nlohmann::json& doc, SyntheticRegionConfig base) {
    try {
        if (doc.contains("seed")) base.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("n_rows")) base.n_rows = doc.at("n_rows").get<std::uint32_t>();
        if (doc.contains("n_cols")) base.n_cols = doc.at("n_cols").get<std::uint32_t>();
        if (doc.contains("first_year")) base.first_year = doc.at("first_year").get<int>();
        if (doc.contains("last_year")) base.last_year = doc.at("last_year").get<int>();
        if (doc.contains("effect_weights")) {
            const auto w = doc.at("effect_weights").get<std::vector<double>>();
            if (w.size() != kNumFeatures) throw Error(ErrorKind::Validation, "effect_weights needs 6 values");
            std::copy(w.begin(), w.end(), base.effect_weights.begin());
        }
        if (doc.contains("base_rate")) base.base_rate = doc.at("base_rate").get<double>();
        if (doc.contains("origin_lat")) base.origin_lat = doc.at("origin_lat").get<double>();
        if (doc.contains("origin_lon")) base.origin_lon = doc.at("origin_lon").get<double>();
        if (doc.contains("cell_size")) base.cell_size = doc.at("cell_size").get<double>();
        if (doc.contains("county_block")) base.county_block = doc.at("county_block").get<std::uint32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("synthetic config: ") + e.what());
    }
    return base;
}

void write_region(const SyntheticRegion& r, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir + ": " + ec.message());
    const fs::path root(dir);

    std::string csv = "id,year,lat,lon,burned_area_acres\n";
    for (const auto& f : r.incidents) {
        csv += f.id + ',' + std::to_string(f.year) + ',' + format_double(f.location.lat) + ',' +
               format_double(f.location.lon) + ',' + format_double(f.burned_area) + '\n';
    }
    write_file((root / "incidents.csv").string(), csv);

    csv = "predictor,year,lat,lon,value\n";
    for (const auto& s : r.samples) {
        csv += std::string(predictor_name(s.predictor)) + ',' + (s.year ? std::to_string(*s.year) : "") + ',' +
               format_double(s.location.lat) + ',' + format_double(s.location.lon) + ',' + format_double(s.value) + '\n';
    }
    write_file((root / "predictors.csv").string(), csv);

    csv = "county_id,year,month,pdsi\n";
    for (const auto& m : r.monthly_pdsi) {
        csv += m.county_id + ',' + std::to_string(m.year) + ',' + std::to_string(m.month) + ',' + format_double(m.pdsi) + '\n';
    }
    write_file((root / "county_pdsi.csv").string(), csv);

    nlohmann::json features = nlohmann::json::array();
    for (const auto& [id, shape] : r.county_shapes) {
        features.push_back({{"type", "Feature"}, {"properties", {{"county_id", id}}}, {"geometry", to_geojson_geometry(*shape)}});
    }
    write_file((root / "counties.geojson").string(),
               nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump(1) + "\n");
    write_file((root / "region.geojson").string(),
               nlohmann::json{{"type", "Feature"}, {"properties", nlohmann::json::object()},
                              {"geometry", to_geojson_geometry(r.region)}}
                       .dump(1) +
                   "\n");
    write_file((root / "grid.json").string(), to_json(r.grid).dump(1) + "\n");

    csv = "cell_row,cell_col,year,probability,label\n";
    for (const auto& t : r.truth) {
        csv += std::to_string(t.cell.row) + ',' + std::to_string(t.cell.col) + ',' + std::to_string(t.year) + ',' +
               format_double(t.probability) + ',' + std::to_string(t.label) + '\n';
    }
    write_file((root / "truth.csv").string(), csv);

    std::size_t positives = 0;
    for (const auto& t : r.truth) positives += static_cast<std::size_t>(t.label);
    const nlohmann::json manifest = {{"format", "wildfire-synthetic-region"},
                                     {"version", 1},
                                     {"config", to_json(r.config)},
                                     {"seed", r.config.seed},
                                     {"intercept", r.intercept},
                                     {"cells", r.grid.cell_count()},
                                     {"cell_years", r.truth.size()},
                                     {"positives", positives},
                                     {"incidents", r.incidents.size()}};
    write_file((root / "manifest.json").string(), manifest.dump(1) + "\n");
}

RegionInputs load_region(const std::string& dir, bool strict) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    const auto path = [&](const char* name) { return (root / name).string(); };
    const auto parse_json = [&](const char* name) {
        try {
            return nlohmann::json::parse(read_file(path(name)));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::Format, std::string(name) + ": " + e.what());
        }
    };
    RegionInputs in{grid_from_json(parse_json("grid.json")), {}, {}, {}, {}};
    const LoadOptions opts{strict};
    const auto collect = [&](const char* name, const auto& diagnostics) {
        for (const auto& d : diagnostics) in.diagnostics.push_back(std::string(name) + ":" + std::to_string(d.line) + ": " + d.message);
    };
    {
        std::istringstream s(read_file(path("incidents.csv")));
        auto res = load_incidents(s, opts);
        collect("incidents.csv", res.diagnostics);
        in.incidents = std::move(res.records);
    }
    {
        std::istringstream s(read_file(path("predictors.csv")));
        auto res = load_predictor_samples(s, std::nullopt, opts);
        collect("predictors.csv", res.diagnostics);
        in.samples = std::move(res.records);
    }
    {
        std::istringstream s(read_file(path("county_pdsi.csv")));
        auto res = load_county_pdsi(s, parse_json("counties.geojson"), opts);
        collect("county_pdsi.csv", res.diagnostics);
        in.counties = std::move(res.records);
    }
    return in;
}

}  // namespace wildfire
