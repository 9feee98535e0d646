#include "wildfire/features.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>
#include <sstream>

#include "wildfire/error.hpp"
#include "wildfire/ingest.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

std::string_view risk_name(RiskLevel level) {
    switch (level) {
        case RiskLevel::Low: return "low";
        case RiskLevel::Medium: return "medium";
        case RiskLevel::High: return "high";
    }
    return "unknown";
}

std::string_view task_name(Task task) { return task == Task::Static ? "static" : "dynamic"; }

RiskLevel label_static(double cumulative_burned) {
    if (!(cumulative_burned >= 0.0)) {
        throw Error(ErrorKind::Contract, "cumulative burned area must be non-negative");
    }
    if (cumulative_burned < kLowRiskCeiling) return RiskLevel::Low;
    if (cumulative_burned < kHighRiskFloor) return RiskLevel::Medium;
    return RiskLevel::High;
}

int label_dynamic(std::span<const FireIncident> incidents, double threshold) {
    return std::any_of(incidents.begin(), incidents.end(),
                       [&](const FireIncident& f) { return f.burned_area >= threshold; })
               ? 1
               : 0;
}

namespace {

constexpr int kStaticKey = INT_MIN;

struct Acc {
    double sum = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        ++count;
    }
};

std::optional<double> value_of(const Acc& acc, Predictor p) {
    if (is_summed(p)) return acc.sum;
    if (acc.count == 0) return std::nullopt;
    return acc.sum / static_cast<double>(acc.count);
}

int sample_key(const PredictorSample& s) {
    return (s.predictor == Predictor::Altitude || !s.year) ? kStaticKey : *s.year;
}

using Bins = std::map<std::pair<Predictor, int>, std::vector<Acc>>;

Bins bin_samples(const GridSpec& grid, std::span<const PredictorSample> samples) {
    Bins bins;
    for (const auto& s : samples) {
        const auto cell = locate(grid, s.location);
        if (!cell) continue;
        auto& bin = bins[{s.predictor, sample_key(s)}];
        if (bin.empty()) bin.resize(grid.cell_count());
        bin[*grid.index_of(*cell)].add(s.value);
    }
    return bins;
}

// Per-cell weights of every distinct county shape.
class PdsiDisaggregator {
public:
    PdsiDisaggregator(const GridSpec& grid, std::span<const CountyPdsiRecord> counties) : grid_(grid) {
        for (const auto& c : counties) {
            if (!c.shape) throw Error(ErrorKind::Contract, "county '" + c.county_id + "' has no shape");
            if (!weights_.count(c.shape.get())) weights_.emplace(c.shape.get(), weights_for(*c.shape));
            by_year_[c.year].push_back(&c);
        }
    }

    bool has_year(int year) const { return by_year_.count(year) > 0; }

    // nullopt for cells no county of that year overlaps.
    std::vector<std::optional<double>> year_values(int year) const {
        std::vector<double> num(grid_.cell_count(), 0.0);
        std::vector<double> den(grid_.cell_count(), 0.0);
        const auto it = by_year_.find(year);
        if (it != by_year_.end()) {
            for (const CountyPdsiRecord* rec : it->second) {
                for (const auto& [idx, frac] : weights_.at(rec->shape.get())) {
                    num[idx] += frac * rec->pdsi;
                    den[idx] += frac;
                }
            }
        }
        std::vector<std::optional<double>> out(grid_.cell_count());
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (den[i] > 0.0) out[i] = num[i] / den[i];
        }
        return out;
    }

    std::vector<int> years() const {
        std::vector<int> ys;
        for (const auto& [y, _] : by_year_) ys.push_back(y);
        return ys;
    }

private:
    std::vector<std::pair<std::size_t, double>> weights_for(const Region& shape) const {
        validate(shape);
        const GeoRect bb = bounding_box(shape);
        const GeoRect& g = grid_.bbox();
        const double s = grid_.cell_size();
        const auto clamp_index = [](double v, std::uint32_t n) {
            return static_cast<std::uint32_t>(std::clamp(std::floor(v), 0.0, static_cast<double>(n - 1)));
        };
        std::vector<std::pair<std::size_t, double>> out;
        if (bb.lat_hi < g.lat_lo || bb.lon_hi < g.lon_lo) return out;
        const auto r0 = clamp_index((bb.lat_lo - g.lat_lo) / s, grid_.n_rows());
        const auto r1 = clamp_index((bb.lat_hi - g.lat_lo) / s, grid_.n_rows());
        const auto c0 = clamp_index((bb.lon_lo - g.lon_lo) / s, grid_.n_cols());
        const auto c1 = clamp_index((bb.lon_hi - g.lon_lo) / s, grid_.n_cols());
        for (std::uint32_t r = r0; r <= r1; ++r) {
            for (std::uint32_t c = c0; c <= c1; ++c) {
                const CellId id{r, c};
                const auto idx = grid_.index_of(id);
                if (!idx) continue;
                const double frac = overlap_fraction(grid_, id, shape);
                if (frac > 0.0) out.emplace_back(*idx, frac);
            }
        }
        return out;
    }

    const GridSpec& grid_;
    std::map<const Region*, std::vector<std::pair<std::size_t, double>>> weights_;
    std::map<int, std::vector<const CountyPdsiRecord*>> by_year_;
};

std::string cell_list(const GridSpec& grid, const std::vector<std::size_t>& idx) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(idx.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) {
        const CellId c = grid.cells()[idx[i]];
        out += (i ? " " : "") + std::string("(") + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
    }
    if (idx.size() > shown) out += " ... (" + std::to_string(idx.size()) + " cells)";
    return out;
}

// Fills missing entries with the mean of the present ones, flagging them.
std::vector<double> impute_region_mean(const std::vector<std::optional<double>>& values, Predictor p,
                                       std::vector<ImputedMask>& flags, const std::string& context) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    if (n == 0) {
        throw Error(ErrorKind::Assembly,
                    "predictor " + std::string(predictor_name(p)) + " has no data" + context);
    }
    const double mean = sum / static_cast<double>(n);
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i]) {
            out[i] = *values[i];
        } else {
            out[i] = mean;
            flags[i] |= static_cast<ImputedMask>(1u << static_cast<unsigned>(p));
        }
    }
    return out;
}

std::vector<std::optional<double>> bin_values(const Bins& bins, Predictor p, int key, std::size_t n_cells) {
    std::vector<std::optional<double>> out(n_cells);
    const auto it = bins.find({p, key});
    for (std::size_t i = 0; i < n_cells; ++i) {
        out[i] = it == bins.end() ? value_of(Acc{}, p) : value_of(it->second[i], p);
    }
    return out;
}

std::vector<std::optional<double>> pdsi_values(const GridSpec& grid, const PdsiDisaggregator& pdsi, int year,
                                               const AssemblyOptions& opts) {
    auto values = pdsi.year_values(year);
    if (!opts.impute_uncovered_pdsi) {
        std::vector<std::size_t> uncovered;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i]) uncovered.push_back(i);
        }
        if (!uncovered.empty()) {
            throw Error(ErrorKind::NoCoverage, "no county covers these cells in " + std::to_string(year) +
                                                   ": " + cell_list(grid, uncovered));
        }
    }
    return values;
}

std::vector<std::vector<const FireIncident*>> incidents_by_cell(const GridSpec& grid,
                                                                std::span<const FireIncident> incidents) {
    std::vector<std::vector<const FireIncident*>> out(grid.cell_count());
    for (const auto& f : incidents) {
        if (const auto cell = locate(grid, f.location)) out[*grid.index_of(*cell)].push_back(&f);
    }
    return out;
}

}  // namespace

std::optional<double> aggregate_cell(std::span<const PredictorSample> samples, Predictor predictor) {
    Acc acc;
    for (const auto& s : samples) {
        if (s.predictor != predictor) {
            throw Error(ErrorKind::Contract, "aggregate_cell: sample for " + std::string(predictor_name(s.predictor)) +
                                                 " mixed into " + std::string(predictor_name(predictor)));
        }
        acc.add(s.value);
    }
    return value_of(acc, predictor);
}

double disaggregate_pdsi(const GridSpec& grid, CellId cell, std::span<const CountyPdsiRecord> counties) {
    double num = 0.0;
    double den = 0.0;
    for (const auto& c : counties) {
        if (c.year != counties.front().year) {
            throw Error(ErrorKind::Contract, "disaggregate_pdsi expects records for a single year");
        }
        if (!c.shape) throw Error(ErrorKind::Contract, "county '" + c.county_id + "' has no shape");
        const double frac = overlap_fraction(grid, cell, *c.shape);
        num += frac * c.pdsi;
        den += frac;
    }
    if (!(den > 0.0)) {
        throw Error(ErrorKind::NoCoverage, "no county covers cell (" + std::to_string(cell.row) + "," +
                                               std::to_string(cell.col) + ")");
    }
    return num / den;
}

std::vector<StaticSample> assemble_static(const GridSpec& grid, std::span<const FireIncident> incidents,
                                          std::span<const PredictorSample> samples,
                                          std::span<const CountyPdsiRecord> counties,
                                          const AssemblyOptions& opts) {
    const std::size_t n = grid.cell_count();
    const Bins bins = bin_samples(grid, samples);
    const PdsiDisaggregator pdsi(grid, counties);
    std::vector<ImputedMask> flags(n, 0);
    std::vector<FeatureVector> features(n);

    for (const Predictor p : kAllPredictors) {
        std::vector<std::optional<double>> combined(n);
        if (p == Predictor::Pdsi) {
            const auto years = pdsi.years();
            if (years.empty()) throw Error(ErrorKind::Assembly, "predictor pdsi has no data");
            std::vector<double> sum(n, 0.0);
            std::vector<std::size_t> count(n, 0);
            for (const int y : years) {
                const auto v = pdsi_values(grid, pdsi, y, opts);
                for (std::size_t i = 0; i < n; ++i) {
                    if (v[i]) {
                        sum[i] += *v[i];
                        ++count[i];
                    }
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (count[i]) combined[i] = sum[i] / static_cast<double>(count[i]);
            }
        } else {
            // Mean over covered years of each year's cell value.
            std::vector<double> sum(n, 0.0);
            std::vector<std::size_t> count(n, 0);
            bool any_year = false;
            for (const auto& [key, bin] : bins) {
                if (key.first != p) continue;
                any_year = true;
                for (std::size_t i = 0; i < n; ++i) {
                    if (const auto v = value_of(bin[i], p)) {
                        sum[i] += *v;
                        ++count[i];
                    }
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (count[i]) {
                    combined[i] = sum[i] / static_cast<double>(count[i]);
                } else if (is_summed(p) && !any_year) {
                    combined[i] = 0.0;
                }
            }
        }
        const auto values = impute_region_mean(combined, p, flags, "");
        for (std::size_t i = 0; i < n; ++i) features[i][p] = values[i];
    }

    const auto by_cell = incidents_by_cell(grid, incidents);
    std::vector<StaticSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double burned = 0.0;
        for (const FireIncident* f : by_cell[i]) burned += f->burned_area;
        out.push_back({grid.cells()[i], features[i], label_static(burned), burned, flags[i]});
    }
    return out;
}

std::vector<DynamicSample> assemble_dynamic(const GridSpec& grid, std::span<const FireIncident> incidents,
                                            std::span<const PredictorSample> samples,
                                            std::span<const CountyPdsiRecord> counties,
                                            std::span<const int> years, const AssemblyOptions& opts) {
    const std::size_t n = grid.cell_count();
    const std::size_t ny = years.size();
    const Bins bins = bin_samples(grid, samples);
    const PdsiDisaggregator pdsi(grid, counties);

    std::vector<int> source_years;
    for (const int y : years) source_years.push_back(opts.lag_one_year ? y - 1 : y);
    const AlignmentPlan plan = align_years(coverage_of(samples, counties), source_years);

    std::vector<DynamicSample> out(n * ny);
    for (std::size_t yi = 0; yi < ny; ++yi) {
        const int src = source_years[yi];
        std::vector<ImputedMask> flags(n, 0);
        for (const Predictor p : kAllPredictors) {
            const YearSource where = plan.resolve(p, src);
            if (where.kind == YearSource::Kind::Gap) {
                throw Error(ErrorKind::Assembly, "predictor " + std::string(predictor_name(p)) +
                                                     " has no data for year " + std::to_string(src));
            }
            const int key = where.kind == YearSource::Kind::Static ? kStaticKey : where.year;
            std::vector<std::optional<double>> raw;
            if (p == Predictor::Pdsi) {
                raw = pdsi_values(grid, pdsi, key, opts);
            } else {
                raw = bin_values(bins, p, key, n);
            }
            const auto values = impute_region_mean(raw, p, flags, " for year " + std::to_string(src));
            for (std::size_t i = 0; i < n; ++i) out[i * ny + yi].features[p] = values[i];
        }
        for (std::size_t i = 0; i < n; ++i) out[i * ny + yi].imputed = flags[i];
    }

    const auto by_cell = incidents_by_cell(grid, incidents);
    std::vector<FireIncident> cell_year;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t yi = 0; yi < ny; ++yi) {
            cell_year.clear();
            for (const FireIncident* f : by_cell[i]) {
                if (f->year == years[yi]) cell_year.push_back(*f);
            }
            DynamicSample& row = out[i * ny + yi];
            row.cell = grid.cells()[i];
            row.year = years[yi];
            row.label = label_dynamic(cell_year, opts.fire_threshold);
        }
    }
    return out;
}

Eigen::VectorXd to_vector(const FeatureVector& f) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(kNumFeatures));
    for (std::size_t j = 0; j < kNumFeatures; ++j) v[static_cast<Eigen::Index>(j)] = f.values[j];
    return v;
}

namespace {

template <typename Row, typename LabelFn>
Dataset rows_to_dataset(std::span<const Row> rows, LabelFn&& label) {
    Dataset d;
    d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kNumFeatures));
    d.y.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].features.values[j];
        }
        d.y.push_back(label(rows[i]));
    }
    return d;
}

nlohmann::json standardization_json(const Dataset& d) {
    if (d.size() < 2) return nullptr;
    const Standardization s = fit_standardization(d.x);
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"epsilon", s.epsilon}};
}

nlohmann::json imputed_json(std::span<const DynamicSample> rows, bool with_year) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        for (const Predictor p : kAllPredictors) {
            if (r.imputed & (1u << static_cast<unsigned>(p))) {
                nlohmann::json entry = {r.cell.row, r.cell.col};
                entry.push_back(with_year ? nlohmann::json(r.year) : nlohmann::json(nullptr));
                entry.push_back(predictor_name(p));
                out.push_back(std::move(entry));
            }
        }
    }
    return out;
}

}  // namespace

Dataset to_dataset(std::span<const StaticSample> rows) {
    return rows_to_dataset(rows, [](const StaticSample& s) { return static_cast<int>(s.label); });
}

Dataset to_dataset(std::span<const DynamicSample> rows) {
    return rows_to_dataset(rows, [](const DynamicSample& s) { return s.label; });
}

Dataset to_dataset(const FeatureTable& table) { return to_dataset(std::span<const DynamicSample>(table.rows)); }

FeatureTable make_table(const GridSpec& grid, std::span<const StaticSample> rows, const AssemblyOptions& opts) {
    FeatureTable t;
    t.task = Task::Static;
    std::vector<double> burned;
    for (const auto& r : rows) {
        t.rows.push_back({r.cell, 0, r.features, static_cast<int>(r.label), r.imputed});
        burned.push_back(r.cumulative_burned);
    }
    t.meta = {
        {"task", "static"},
        {"grid", to_json(grid)},
        {"fire_threshold", opts.fire_threshold},
        {"risk_thresholds_acres", {kLowRiskCeiling, kHighRiskFloor}},
        {"imputed", imputed_json(t.rows, false)},
        {"cumulative_burned", burned},
        {"standardization", standardization_json(to_dataset(t))},
    };
    return t;
}

FeatureTable make_table(const GridSpec& grid, std::span<const DynamicSample> rows, std::span<const int> years,
                        const AssemblyOptions& opts) {
    FeatureTable t;
    t.task = Task::Dynamic;
    t.rows.assign(rows.begin(), rows.end());
    t.meta = {
        {"task", "dynamic"},
        {"grid", to_json(grid)},
        {"fire_threshold", opts.fire_threshold},
        {"years", std::vector<int>(years.begin(), years.end())},
        {"lag_one_year", opts.lag_one_year},
        {"imputed", imputed_json(t.rows, true)},
        {"standardization", standardization_json(to_dataset(t))},
    };
    return t;
}

std::string table_csv(const FeatureTable& table) {
    std::string out = "cell_row,cell_col,year,pop_density,ndvi,pdsi,tm_area,tm_number,altitude,label\n";
    for (const auto& r : table.rows) {
        out += std::to_string(r.cell.row) + ',' + std::to_string(r.cell.col) + ',';
        if (table.task == Task::Dynamic) out += std::to_string(r.year);
        for (const double v : r.features.values) out += ',' + format_double(v);
        out += ',' + std::to_string(r.label) + '\n';
    }
    return out;
}

FeatureTable parse_table(std::string_view csv, const nlohmann::json& sidecar) {
    FeatureTable t;
    t.meta = sidecar;
    const std::string task = sidecar.value("task", "dynamic");
    if (task != "static" && task != "dynamic") throw Error(ErrorKind::Format, "unknown table task '" + task + "'");
    t.task = task == "static" ? Task::Static : Task::Dynamic;

    std::istringstream in{std::string(csv)};
    std::string line;
    std::size_t lineno = 0;
    const auto fail = [&](const std::string& msg) {
        throw Error(ErrorKind::Format, "feature table line " + std::to_string(lineno) + ": " + msg);
    };
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "feature table is empty");
    ++lineno;
    if (trim(line) != "cell_row,cell_col,year,pop_density,ndvi,pdsi,tm_area,tm_number,altitude,label") {
        fail("unexpected header");
    }
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10) fail("expected 10 fields");
        DynamicSample r;
        const auto row = parse_int(f[0]);
        const auto col = parse_int(f[1]);
        if (!row || !col || *row < 0 || *col < 0) fail("invalid cell index");
        r.cell = {static_cast<std::uint32_t>(*row), static_cast<std::uint32_t>(*col)};
        if (t.task == Task::Dynamic) {
            const auto y = parse_int(f[2]);
            if (!y) fail("invalid year");
            r.year = static_cast<int>(*y);
        }
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            const auto v = parse_double(f[3 + j]);
            if (!v || !std::isfinite(*v)) fail("invalid feature value '" + f[3 + j] + "'");
            r.features.values[j] = *v;
        }
        const auto label = parse_int(f[9]);
        if (!label || *label < 0 || *label > (t.task == Task::Static ? 2 : 1)) fail("invalid label");
        r.label = static_cast<int>(*label);
        t.rows.push_back(r);
    }
    if (sidecar.contains("imputed")) {
        std::map<std::pair<std::pair<std::uint32_t, std::uint32_t>, int>, ImputedMask> flags;
        for (const auto& e : sidecar.at("imputed")) {
            const int year = e.at(2).is_null() ? 0 : e.at(2).get<int>();
            const auto p = parse_predictor(e.at(3).get<std::string>());
            if (!p) continue;
            flags[{{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()}, year}] |=
                static_cast<ImputedMask>(1u << static_cast<unsigned>(*p));
        }
        for (auto& r : t.rows) {
            const auto it = flags.find({{r.cell.row, r.cell.col}, r.year});
            if (it != flags.end()) r.imputed = it->second;
        }
    }
    return t;
}

void save_table(const FeatureTable& table, const std::string& csv_path) {
    write_file(csv_path, table_csv(table));
    write_file(csv_path + ".json", table.meta.dump(2) + "\n");
}

FeatureTable load_table(const std::string& csv_path) {
    const std::string csv = read_file(csv_path);
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_file(csv_path + ".json"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, "feature table sidecar: " + std::string(e.what()));
    }
    return parse_table(csv, sidecar);
}

std::vector<int> table_years(const FeatureTable& table) {
    std::vector<int> ys;
    for (const auto& r : table.rows) ys.push_back(r.year);
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    return ys;
}

GridSpec table_grid(const FeatureTable& table) {
    if (!table.meta.contains("grid")) throw Error(ErrorKind::Format, "feature table sidecar has no grid");
    return grid_from_json(table.meta.at("grid"));
}

}  // namespace wildfire
