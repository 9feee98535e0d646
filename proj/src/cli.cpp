#include "wildfire/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wildfire/counterfactual.hpp"
#include "wildfire/error.hpp"
#include "wildfire/eval.hpp"
#include "wildfire/features.hpp"
#include "wildfire/geojson.hpp"
#include "wildfire/ingest.hpp"
#include "wildfire/models.hpp"
#include "wildfire/seed.hpp"
#include "wildfire/service.hpp"
#include "wildfire/synthetic.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Merged run configuration: the --config file overlaid with every flag given
// on the command line. Values from flags arrive as strings.
class RunConfig {
public:
    explicit RunConfig(json doc) : doc_(std::move(doc)) {}

    const json& doc() const { return doc_; }
    bool has(const std::string& key) const { return doc_.contains(key) && !doc_[key].is_null(); }

    std::string str(const std::string& key, const std::string& fallback = "") const {
        if (!has(key)) return fallback;
        const json& v = doc_[key];
        return v.is_string() ? v.get<std::string>() : v.dump();
    }

    std::string require(const std::string& key) const {
        if (!has(key)) throw Error(ErrorKind::Validation, "--" + flag_name(key) + " is required");
        return str(key);
    }

    double number(const std::string& key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_[key];
        if (v.is_number()) return v.get<double>();
        const auto d = parse_double(str(key));
        if (!d) throw Error(ErrorKind::Validation, "--" + flag_name(key) + " expects a number, got " + str(key));
        return *d;
    }

    long long integer(const std::string& key, long long fallback) const {
        if (!has(key)) return fallback;
        const json& v = doc_[key];
        if (v.is_number_integer()) return v.get<long long>();
        const auto i = parse_int(str(key));
        if (!i) throw Error(ErrorKind::Validation, "--" + flag_name(key) + " expects an integer, got " + str(key));
        return *i;
    }

    bool flag(const std::string& key) const {
        if (!has(key)) return false;
        const json& v = doc_[key];
        return v.is_boolean() ? v.get<bool>() : str(key) == "true";
    }

    // Stochastic commands refuse to run without an explicit master seed.
    std::uint64_t seed() const {
        if (!has("seed")) throw Error(ErrorKind::Validation, "--seed is required for this command");
        const json& v = doc_["seed"];
        if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
        const auto i = parse_int(str("seed"));
        if (!i || *i < 0) throw Error(ErrorKind::Validation, "--seed expects a non-negative integer");
        return static_cast<std::uint64_t>(*i);
    }

private:
    static std::string flag_name(std::string key) {
        std::replace(key.begin(), key.end(), '_', '-');
        return key;
    }

    json doc_;
};

struct Command {
    CLI::App* app = nullptr;
    std::vector<std::pair<std::string, CLI::Option*>> options;  // config key -> option
    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
};

struct Context {
    std::ostream& out;
    std::ostream& err;
};

void add_value(Command& cmd, const std::string& name, const std::string& help) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    auto* opt = cmd.app->add_option("--" + name, cmd.values[key], help);
    cmd.options.emplace_back(key, opt);
}

void add_flag(Command& cmd, const std::string& name, const std::string& help) {
    std::string key = name;
    std::replace(key.begin(), key.end(), '-', '_');
    auto* opt = cmd.app->add_flag("--" + name, cmd.flags[key], help);
    cmd.options.emplace_back(key, opt);
}

RunConfig merge_config(const Command& cmd, const std::string& config_path) {
    json doc = json::object();
    if (!config_path.empty()) {
        try {
            doc = json::parse(read_file(config_path));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Format, config_path + ": " + e.what());
        }
        if (!doc.is_object()) throw Error(ErrorKind::Validation, config_path + ": config must be a JSON object");
    }
    for (const auto& [key, opt] : cmd.options) {
        if (opt->count() == 0) continue;
        if (cmd.flags.count(key)) {
            doc[key] = cmd.flags.at(key);
        } else {
            doc[key] = cmd.values.at(key);
        }
    }
    return RunConfig(std::move(doc));
}

// Artifacts carry the run configuration and master seed so any run can be
// replayed from its outputs.
json provenance(const std::string& command, const RunConfig& cfg) {
    json p = {{"command", command}, {"config", cfg.doc()}};
    if (cfg.has("seed")) p["seed"] = cfg.seed();
    return p;
}

void write_json(const std::string& path, const json& doc) { write_file(path, doc.dump(1) + "\n"); }

void ensure_parent(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (parent.empty()) return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + parent.string() + ": " + ec.message());
}

std::vector<int> parse_years(const std::string& text) {
    std::vector<int> years;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto dash = part.find('-', 1);
        if (dash != std::string::npos) {
            const auto a = parse_int(part.substr(0, dash));
            const auto b = parse_int(part.substr(dash + 1));
            if (!a || !b || *a > *b) throw Error(ErrorKind::Validation, "bad year range " + part);
            for (auto y = *a; y <= *b; ++y) years.push_back(static_cast<int>(y));
        } else {
            const auto y = parse_int(part);
            if (!y) throw Error(ErrorKind::Validation, "bad year " + part);
            years.push_back(static_cast<int>(*y));
        }
    }
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());
    if (years.empty()) throw Error(ErrorKind::Validation, "no years given");
    return years;
}

ModelVariant variant_arg(const std::string& name) {
    const auto v = parse_variant(name);
    if (!v) throw Error(ErrorKind::Validation, "unknown model '" + name + "' (mlp, logreg, svm, rf)");
    return *v;
}

ModelConfig model_config(const RunConfig& cfg) {
    return cfg.has("model_config") ? model_config_from_json(cfg.doc()["model_config"]) : ModelConfig{};
}

std::optional<SmoteConfig> smote_config(const RunConfig& cfg, std::uint64_t seed) {
    if (cfg.flag("no_smote")) return std::nullopt;
    const auto k = cfg.integer("smote_k", 5);
    if (k < 1) throw Error(ErrorKind::Validation, "--smote-k must be at least 1");
    return SmoteConfig{static_cast<int>(k), seed};
}

AssemblyOptions assembly_options(const RunConfig& cfg) {
    AssemblyOptions opts;
    opts.fire_threshold = cfg.number("fire_threshold", kLargeFireThreshold);
    if (!(opts.fire_threshold > 0.0)) throw Error(ErrorKind::Validation, "--fire-threshold must be positive");
    opts.lag_one_year = cfg.flag("lag");
    opts.impute_uncovered_pdsi = cfg.flag("impute_uncovered_pdsi");
    return opts;
}

void report_diagnostics(const Context& ctx, const RegionInputs& in) {
    for (const auto& d : in.diagnostics) ctx.err << "warning: " << d << '\n';
}

// The region's grid, or a regridding of its outline at --grid-cell-size.
GridSpec region_grid(const RunConfig& cfg, const std::string& dir, const GridSpec& stored) {
    if (!cfg.has("grid_cell_size")) return stored;
    const double size = cfg.number("grid_cell_size", stored.cell_size());
    if (size == stored.cell_size()) return stored;
    const Region outline = region_from_geojson(json::parse(read_file((fs::path(dir) / "region.geojson").string())));
    return build_grid(bounding_box(outline), size, outline);
}

// Years every fast-moving predictor covers.
std::vector<int> default_years(const RegionInputs& in) {
    const auto cov = coverage_of(in.samples, in.counties);
    std::optional<std::set<int>> common;
    for (const Predictor p : kAllPredictors) {
        if (is_slow_moving(p)) continue;
        const auto it = cov.find(p);
        const std::set<int> years = it == cov.end() ? std::set<int>{} : it->second.years;
        if (!common) {
            common = years;
        } else {
            std::set<int> both;
            std::set_intersection(common->begin(), common->end(), years.begin(), years.end(),
                                  std::inserter(both, both.end()));
            common = std::move(both);
        }
    }
    if (!common || common->empty()) throw Error(ErrorKind::Assembly, "no year is covered by every dynamic predictor");
    return {common->begin(), common->end()};
}

FeatureTable assemble_dynamic_table(const Context& ctx, const RunConfig& cfg, const std::string& dir) {
    const RegionInputs in = load_region(dir, cfg.flag("strict"));
    report_diagnostics(ctx, in);
    const GridSpec grid = region_grid(cfg, dir, in.grid);
    const std::vector<int> years = cfg.has("years") ? parse_years(cfg.str("years")) : default_years(in);
    const AssemblyOptions opts = assembly_options(cfg);
    const auto rows = assemble_dynamic(grid, in.incidents, in.samples, in.counties, years, opts);
    return make_table(grid, rows, years, opts);
}

std::string risk_text(Task task, int label) {
    return task == Task::Static ? std::string(risk_name(static_cast<RiskLevel>(label))) : std::to_string(label);
}

// Per-row predictions for the rows of `year` (all rows when year is unset).
struct Predictions {
    std::vector<DynamicSample> rows;
    std::vector<int> labels;
};

Predictions predict_table(const TrainedModel& model, const FeatureTable& table, std::optional<int> year) {
    Predictions p;
    for (const auto& r : table.rows) {
        if (!year || r.year == *year) p.rows.push_back(r);
    }
    if (year && p.rows.empty()) {
        throw Error(ErrorKind::Validation, "table has no rows for year " + std::to_string(*year));
    }
    if (!p.rows.empty()) p.labels = predict_raw(model, to_dataset(p.rows).x);
    return p;
}

void write_predictions(const std::string& csv_path, const FeatureTable& table, const GridSpec& grid,
                       const Predictions& p, const json& sidecar) {
    ensure_parent(csv_path);
    std::string csv = "cell_row,cell_col,year,label,risk\n";
    json features = json::array();
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
        const auto& r = p.rows[i];
        const std::string year = table.task == Task::Static ? "" : std::to_string(r.year);
        csv += std::to_string(r.cell.row) + ',' + std::to_string(r.cell.col) + ',' + year + ',' +
               std::to_string(p.labels[i]) + ',' + risk_text(table.task, p.labels[i]) + '\n';
        json risk = table.task == Task::Static ? json(risk_text(table.task, p.labels[i])) : json(p.labels[i]);
        json props = {{"row", r.cell.row}, {"col", r.cell.col}, {"risk", risk}};
        if (table.task == Task::Dynamic) props["year"] = r.year;
        features.push_back({{"type", "Feature"},
                            {"properties", props},
                            {"geometry", to_geojson_geometry(Region{rectangle(cell_bounds(grid, r.cell))})}});
    }
    write_file(csv_path, csv);
    write_json(csv_path + ".json", sidecar);
    const fs::path geo = fs::path(csv_path).replace_extension(".geojson");
    write_json(geo.string(), {{"type", "FeatureCollection"}, {"features", features}});
}

std::optional<int> year_arg(const RunConfig& cfg) {
    if (!cfg.has("year")) return std::nullopt;
    return static_cast<int>(cfg.integer("year", 0));
}

std::size_t count_positive(const std::vector<int>& labels) {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

// ---- subcommands ----

int cmd_ingest(const Context& ctx, const RunConfig& cfg) {
    const std::string dir = cfg.require("region");
    const RegionInputs in = load_region(dir, cfg.flag("strict"));
    for (const auto& d : in.diagnostics) ctx.err << d << '\n';
    const json summary = {{"incidents", in.incidents.size()},
                          {"predictor_samples", in.samples.size()},
                          {"county_years", in.counties.size()},
                          {"cells", in.grid.cell_count()},
                          {"diagnostics", in.diagnostics}};
    if (cfg.has("out")) {
        const fs::path out(cfg.str("out"));
        fs::create_directories(out);
        std::string csv = "id,year,lat,lon,burned_area_acres\n";
        for (const auto& f : in.incidents) {
            csv += f.id + ',' + std::to_string(f.year) + ',' + format_double(f.location.lat) + ',' +
                   format_double(f.location.lon) + ',' + format_double(f.burned_area) + '\n';
        }
        write_file((out / "incidents.csv").string(), csv);
        csv = "predictor,year,lat,lon,value\n";
        for (const auto& s : in.samples) {
            csv += std::string(predictor_name(s.predictor)) + ',' + (s.year ? std::to_string(*s.year) : "") + ',' +
                   format_double(s.location.lat) + ',' + format_double(s.location.lon) + ',' +
                   format_double(s.value) + '\n';
        }
        write_file((out / "predictors.csv").string(), csv);
        csv = "county_id,year,pdsi\n";
        for (const auto& c : in.counties) {
            csv += c.county_id + ',' + std::to_string(c.year) + ',' + format_double(c.pdsi) + '\n';
        }
        write_file((out / "county_pdsi.csv").string(), csv);
        write_json((out / "ingest.json").string(), {{"summary", summary}, {"provenance", provenance("ingest", cfg)}});
    }
    ctx.out << "incidents " << in.incidents.size() << ", predictor samples " << in.samples.size()
            << ", county-years " << in.counties.size() << ", diagnostics " << in.diagnostics.size() << '\n';
    return in.diagnostics.empty() ? 0 : 1;
}

int cmd_assemble_static(const Context& ctx, const RunConfig& cfg) {
    const std::string dir = cfg.require("region");
    const std::string out = cfg.require("out");
    const RegionInputs in = load_region(dir, cfg.flag("strict"));
    report_diagnostics(ctx, in);
    const GridSpec grid = region_grid(cfg, dir, in.grid);
    const AssemblyOptions opts = assembly_options(cfg);
    const auto rows = assemble_static(grid, in.incidents, in.samples, in.counties, opts);
    FeatureTable table = make_table(grid, rows, opts);
    table.meta["provenance"] = provenance("assemble-static", cfg);
    ensure_parent(out);
    save_table(table, out);
    std::array<std::size_t, 3> shares{};
    for (const auto& r : rows) ++shares[static_cast<std::size_t>(r.label)];
    ctx.out << "rows " << rows.size() << " (low " << shares[0] << ", medium " << shares[1] << ", high " << shares[2]
            << ")\n";
    return 0;
}

int cmd_assemble_dynamic(const Context& ctx, const RunConfig& cfg) {
    const std::string out = cfg.require("out");
    FeatureTable table = assemble_dynamic_table(ctx, cfg, cfg.require("region"));
    table.meta["provenance"] = provenance("assemble-dynamic", cfg);
    ensure_parent(out);
    save_table(table, out);
    std::size_t positives = 0;
    for (const auto& r : table.rows) positives += static_cast<std::size_t>(r.label);
    ctx.out << "rows " << table.rows.size() << " (positive " << positives << ")\n";
    return 0;
}

int cmd_train(const Context& ctx, const RunConfig& cfg) {
    const FeatureTable table = load_table(cfg.require("table"));
    const std::string out = cfg.require("out");
    const ModelVariant variant = variant_arg(cfg.str("model", "mlp"));
    const std::uint64_t seed = cfg.seed();
    const Dataset data = to_dataset(table);
    // SMOTE is defined for two classes; static tables have three.
    const auto smote = table.task == Task::Static ? std::nullopt : smote_config(cfg, derive_seed(seed, "smote"));
    TrainedModel model = fit_model(variant, data, model_config(cfg), seed, smote);
    model.metadata["task"] = task_name(table.task);
    model.metadata["fire_threshold"] = table.meta.value("fire_threshold", kLargeFireThreshold);
    model.metadata["training_rows"] = data.size();
    model.metadata["provenance"] = provenance("train", cfg);
    ensure_parent(out);
    save_model(model, out);
    ctx.out << "trained " << variant_name(variant) << " on " << data.size() << " rows, hash " << model_hash(model)
            << '\n';
    return 0;
}

int cmd_evaluate(const Context& ctx, const RunConfig& cfg) {
    const FeatureTable table = load_table(cfg.require("table"));
    const Dataset data = to_dataset(table);
    CrossValidationOptions opts;
    opts.k = static_cast<std::size_t>(cfg.integer("k", 5));
    opts.seed = cfg.seed();
    const auto smote = table.task == Task::Static ? std::nullopt : smote_config(cfg, 0);
    opts.smote_on_train = smote.has_value();
    if (smote) opts.smote = *smote;
    opts.stratified = !cfg.flag("no_stratify");
    opts.model = model_config(cfg);

    const std::string which = cfg.str("model", "mlp");
    std::vector<ModelVariant> variants;
    if (which == "all") {
        variants = {ModelVariant::Mlp, ModelVariant::LogReg, ModelVariant::RandomForest};
        if (table.task == Task::Dynamic) variants.insert(variants.begin() + 2, ModelVariant::SvmRbf);
    } else {
        variants = {variant_arg(which)};
    }
    std::vector<CrossValidationReport> reports;
    json per_model = json::array();
    for (const auto v : variants) {
        reports.push_back(cross_validate(v, data, opts));
        per_model.push_back(to_json(reports.back()));
        for (const auto& f : reports.back().folds) {
            if (!f.error.empty()) ctx.err << variant_name(v) << " fold " << f.fold << ": " << f.error << '\n';
        }
    }
    ctx.out << format_report_table(reports);
    if (cfg.has("out")) {
        ensure_parent(cfg.str("out"));
        write_json(cfg.str("out"), {{"task", task_name(table.task)},
                                    {"rows", data.size()},
                                    {"reports", per_model},
                                    {"provenance", provenance("evaluate", cfg)}});
    }
    return 0;
}

int cmd_predict(const Context& ctx, const RunConfig& cfg) {
    const std::string model_path = cfg.require("model");
    const TrainedModel model = load_model(model_path);
    const FeatureTable table = load_table(cfg.require("table"));
    const auto year = year_arg(cfg);
    const Predictions p = predict_table(model, table, year);
    const json summary = {{"model_hash", model_hash(model)},
                          {"rows", p.rows.size()},
                          {"count", count_positive(p.labels)},
                          {"year", year ? json(*year) : json()}};
    if (cfg.has("out")) {
        write_predictions(cfg.str("out"), table, table_grid(table), p,
                          {{"summary", summary}, {"provenance", provenance("predict", cfg)}});
    }
    ctx.out << summary.dump() << '\n';
    return 0;
}

int cmd_transfer(const Context& ctx, const RunConfig& cfg) {
    const std::string model_path = cfg.require("model");
    const std::string out_dir = cfg.require("out");
    const json stored = json::parse(read_file(model_path));
    const TrainedModel model = model_from_json(stored);
    const std::string before = stored.at("hash").get<std::string>();
    if (model.class_labels != std::vector<int>{0, 1}) {
        throw Error(ErrorKind::Validation, "transfer needs a model trained on the dynamic task");
    }
    RunConfig region_cfg = cfg;
    if (!cfg.has("fire_threshold") && model.metadata.contains("fire_threshold")) {
        json doc = cfg.doc();
        doc["fire_threshold"] = model.metadata["fire_threshold"];
        region_cfg = RunConfig(doc);
    }
    FeatureTable table = assemble_dynamic_table(ctx, region_cfg, cfg.require("region"));
    table.meta["provenance"] = provenance("transfer", cfg);
    fs::create_directories(out_dir);
    save_table(table, (fs::path(out_dir) / "features.csv").string());

    const auto year = year_arg(cfg);
    const Predictions p = predict_table(model, table, year);
    const std::string after = model_hash(model);
    const json summary = {{"model_hash_before", before},
                          {"model_hash_after", after},
                          {"hash_unchanged", before == after},
                          {"training_steps", 0},
                          {"rows", p.rows.size()},
                          {"count", count_positive(p.labels)},
                          {"year", year ? json(*year) : json()}};
    write_predictions((fs::path(out_dir) / "predictions.csv").string(), table, table_grid(table), p,
                      {{"summary", summary}, {"provenance", provenance("transfer", cfg)}});
    ctx.out << summary.dump() << '\n';
    return before == after ? 0 : 2;
}

std::vector<Scenario> default_sweep() {
    std::vector<Scenario> s;
    for (const double d : {0.0, 1.0, 1.5, 2.0, 3.0, 4.0}) s.push_back(pdsi_delta(d));
    s.push_back(clear_mortality());
    for (const double f : {1.0, 1.1, 1.2, 1.3, 1.4, 1.5}) s.push_back(ndvi_scale(f));
    for (const double f : {0.0, 0.5, 1.0, 2.0, 10.0}) s.push_back(population_scale(f));
    return s;
}

std::vector<Scenario> scenarios_from_json(const json& doc) {
    if (!doc.is_array()) throw Error(ErrorKind::Validation, "scenarios must be a JSON array");
    std::vector<Scenario> out;
    for (const auto& e : doc) {
        const auto kind = parse_scenario_kind(e.value("kind", ""));
        if (!kind) throw Error(ErrorKind::Validation, "unknown scenario kind in " + e.dump());
        const double param = e.value("parameter", 0.0);
        switch (*kind) {
            case ScenarioKind::PdsiDelta: out.push_back(pdsi_delta(param)); break;
            case ScenarioKind::ClearMortality: out.push_back(clear_mortality()); break;
            case ScenarioKind::NdviScale: out.push_back(ndvi_scale(param)); break;
            case ScenarioKind::PopulationScale: out.push_back(population_scale(param)); break;
        }
    }
    return out;
}

int cmd_counterfactual(const Context& ctx, const RunConfig& cfg) {
    const TrainedModel model = load_model(cfg.require("model"));
    const FeatureTable table = load_table(cfg.require("table"));
    const std::string out = cfg.require("out");
    const std::vector<int> years = table_years(table);
    if (years.empty()) throw Error(ErrorKind::Validation, "table has no rows");
    const int year = cfg.has("year") ? static_cast<int>(cfg.integer("year", 0)) : years.back();
    std::vector<DynamicSample> rows;
    for (const auto& r : table.rows) {
        if (r.year == year) rows.push_back(r);
    }
    if (rows.empty()) throw Error(ErrorKind::Validation, "table has no rows for year " + std::to_string(year));
    const std::vector<Scenario> scenarios = cfg.has("scenarios")
                                                ? scenarios_from_json(json::parse(read_file(cfg.str("scenarios"))))
                                                : default_sweep();
    const auto results = sweep(model, rows, scenarios);
    ensure_parent(out);
    write_file(out, sweep_csv(results));
    json flips = json::array();
    for (const auto& r : results) flips.push_back(to_json(r));
    write_json(out + ".json", {{"year", year},
                               {"model_hash", model_hash(model)},
                               {"fire_threshold", model.metadata.value("fire_threshold", json())},
                               {"results", flips},
                               {"provenance", provenance("counterfactual", cfg)}});
    ctx.out << sweep_csv(results);
    return 0;
}

int cmd_synth(const Context& ctx, const RunConfig& cfg) {
    const std::string out = cfg.require("out");
    SyntheticRegionConfig sc =
        cfg.has("synthetic") ? synthetic_config_from_json(cfg.doc()["synthetic"]) : SyntheticRegionConfig{};
    sc.seed = cfg.seed();
    if (cfg.has("rows")) sc.n_rows = static_cast<std::uint32_t>(cfg.integer("rows", sc.n_rows));
    if (cfg.has("cols")) sc.n_cols = static_cast<std::uint32_t>(cfg.integer("cols", sc.n_cols));
    if (cfg.has("years")) {
        const auto years = parse_years(cfg.str("years"));
        sc.first_year = years.front();
        sc.last_year = years.back();
    }
    sc.base_rate = cfg.number("base_rate", sc.base_rate);
    sc.origin_lat = cfg.number("origin_lat", sc.origin_lat);
    sc.origin_lon = cfg.number("origin_lon", sc.origin_lon);
    if (cfg.has("grid_cell_size")) sc.cell_size = cfg.number("grid_cell_size", sc.cell_size);
    if (cfg.has("weights")) {
        std::stringstream ss(cfg.str("weights"));
        std::string part;
        std::vector<double> w;
        while (std::getline(ss, part, ',')) {
            const auto d = parse_double(part);
            if (!d) throw Error(ErrorKind::Validation, "bad weight " + part);
            w.push_back(*d);
        }
        if (w.size() != kNumFeatures) throw Error(ErrorKind::Validation, "--weights needs 6 comma-separated values");
        std::copy(w.begin(), w.end(), sc.effect_weights.begin());
    }
    const SyntheticRegion region = generate_synthetic_region(sc);
    write_region(region, out);
    std::size_t positives = 0;
    for (const auto& t : region.truth) positives += static_cast<std::size_t>(t.label);
    ctx.out << "cells " << region.grid.cell_count() << ", cell-years " << region.truth.size() << ", positives "
            << positives << ", incidents " << region.incidents.size() << '\n';
    return 0;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void stop_server(int) {
    if (HttpServer* s = g_server.load()) s->stop();
}

int cmd_serve(const Context& ctx, const RunConfig& cfg) {
    const Session session(load_model(cfg.require("model")), load_table(cfg.require("table")));
    HttpServer server(session);
    const int port = server.bind(cfg.str("host", "127.0.0.1"), static_cast<int>(cfg.integer("port", 8080)));
    ctx.out << "listening on " << cfg.str("host", "127.0.0.1") << ":" << port << std::endl;
    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    server.run();
    g_server = nullptr;
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Grid-based wildfire risk toolkit", args.empty() ? "wildfire" : args.front()};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON run configuration; flags take precedence");

    using Handler = int (*)(const Context&, const RunConfig&);
    struct Entry {
        Command cmd;
        Handler handler;
    };
    std::map<std::string, Entry> entries;
    const auto sub = [&](const std::string& name, const std::string& help, Handler h) -> Command& {
        Entry& e = entries[name];
        e.cmd.app = app.add_subcommand(name, help);
        e.cmd.app->add_option("--config", config_path, "JSON run configuration; flags take precedence");
        e.handler = h;
        return e.cmd;
    };

    {
        Command& c = sub("ingest", "validate a region directory and write canonical CSVs", cmd_ingest);
        add_value(c, "region", "region directory");
        add_value(c, "out", "output directory for canonical files");
        add_flag(c, "strict", "treat any row diagnostic as fatal");
    }
    for (const auto& [name, handler, help] :
         {std::tuple{"assemble-static", &cmd_assemble_static, "build the static (3-class) feature table"},
          std::tuple{"assemble-dynamic", &cmd_assemble_dynamic, "build the dynamic (per-year) feature table"}}) {
        Command& c = sub(name, help, handler);
        add_value(c, "region", "region directory");
        add_value(c, "out", "output CSV path (a .json sidecar is written next to it)");
        add_value(c, "grid-cell-size", "regrid the region outline at this cell size (degrees)");
        add_value(c, "fire-threshold", "large-fire threshold in acres (default 300)");
        add_flag(c, "strict", "treat any row diagnostic as fatal");
        add_flag(c, "impute-uncovered-pdsi", "give cells outside every county the region-mean PDSI");
        if (std::string(name) == "assemble-dynamic") {
            add_value(c, "years", "years, e.g. 2011-2015 or 2012,2014");
            add_flag(c, "lag", "take predictors from the year before each label year");
        }
    }
    {
        Command& c = sub("train", "train one model on a feature table", cmd_train);
        add_value(c, "table", "feature table CSV");
        add_value(c, "model", "mlp | logreg | svm | rf");
        add_value(c, "seed", "master seed");
        add_value(c, "smote-k", "SMOTE neighbors (default 5)");
        add_flag(c, "no-smote", "train on the unbalanced rows");
        add_value(c, "out", "model JSON path");
    }
    {
        Command& c = sub("evaluate", "k-fold cross-validation report", cmd_evaluate);
        add_value(c, "table", "feature table CSV");
        add_value(c, "model", "mlp | logreg | svm | rf | all");
        add_value(c, "seed", "master seed");
        add_value(c, "k", "number of folds (default 5)");
        add_value(c, "smote-k", "SMOTE neighbors (default 5)");
        add_flag(c, "no-smote", "do not oversample training folds");
        add_flag(c, "no-stratify", "plain shuffled folds");
        add_value(c, "out", "JSON report path");
    }
    {
        Command& c = sub("predict", "per-cell predictions and a GeoJSON risk map", cmd_predict);
        add_value(c, "model", "model JSON path");
        add_value(c, "table", "feature table CSV");
        add_value(c, "year", "restrict to one year");
        add_value(c, "out", "predictions CSV path (GeoJSON and sidecar written next to it)");
    }
    {
        Command& c = sub("transfer", "apply a saved model to another region without training", cmd_transfer);
        add_value(c, "model", "model JSON path");
        add_value(c, "region", "region directory");
        add_value(c, "years", "years to assemble");
        add_value(c, "year", "prediction year");
        add_value(c, "grid-cell-size", "regrid the region outline at this cell size (degrees)");
        add_value(c, "fire-threshold", "large-fire threshold for labels (default: the model's)");
        add_flag(c, "strict", "treat any row diagnostic as fatal");
        add_flag(c, "impute-uncovered-pdsi", "give cells outside every county the region-mean PDSI");
        add_value(c, "out", "output directory");
    }
    {
        Command& c = sub("counterfactual", "scenario sweep against a frozen model", cmd_counterfactual);
        add_value(c, "model", "model JSON path");
        add_value(c, "table", "dynamic feature table CSV");
        add_value(c, "year", "prediction year (default: last in table)");
        add_value(c, "scenarios", "JSON array of {kind, parameter}");
        add_value(c, "out", "sweep CSV path");
    }
    {
        Command& c = sub("synth", "generate a synthetic region directory", cmd_synth);
        add_value(c, "seed", "master seed");
        add_value(c, "rows", "grid rows (default 20)");
        add_value(c, "cols", "grid columns (default 20)");
        add_value(c, "years", "year range (default 2011-2015)");
        add_value(c, "base-rate", "target positive fraction (default 0.05)");
        add_value(c, "weights", "six comma-separated effect weights");
        add_value(c, "origin-lat", "south edge");
        add_value(c, "origin-lon", "west edge");
        add_value(c, "grid-cell-size", "cell size in degrees (default 0.1)");
        add_value(c, "out", "output directory");
    }
    {
        Command& c = sub("serve", "HTTP API over a model and a dynamic table", cmd_serve);
        add_value(c, "model", "model JSON path");
        add_value(c, "table", "dynamic feature table CSV");
        add_value(c, "host", "bind address (default 127.0.0.1)");
        add_value(c, "port", "port (default 8080, 0 = any)");
    }

    std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    const Context ctx{out, err};
    for (auto& [name, entry] : entries) {
        if (!entry.cmd.app->parsed()) continue;
        try {
            return entry.handler(ctx, merge_config(entry.cmd, config_path));
        } catch (const Error& e) {
            err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
            return e.is_validation() ? 1 : 2;
        } catch (const nlohmann::json::exception& e) {
            err << "error (format): " << e.what() << '\n';
            return 1;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
    }
    return 1;
}

}  // namespace wildfire
