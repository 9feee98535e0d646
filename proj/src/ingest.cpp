#include "wildfire/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "wildfire/error.hpp"
#include "wildfire/geojson.hpp"
#include "wildfire/text.hpp"

namespace wildfire {

std::string_view predictor_name(Predictor p) {
    switch (p) {
        case Predictor::PopulationDensity: return "population_density";
        case Predictor::Ndvi: return "ndvi";
        case Predictor::Pdsi: return "pdsi";
        case Predictor::TreeMortalityArea: return "tree_mortality_area";
        case Predictor::TreeMortalityNumber: return "tree_mortality_number";
        case Predictor::Altitude: return "altitude";
    }
    return "unknown";
}

std::optional<Predictor> parse_predictor(std::string_view name) {
    name = trim(name);
    for (const Predictor p : kAllPredictors) {
        if (predictor_name(p) == name) return p;
    }
    return std::nullopt;
}

int present_year() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    return utc.tm_year + 1900;
}

namespace {

// A row-level problem; becomes a Diagnostic.
struct RowError {
    std::string message;
};

class CsvTable {
public:
    CsvTable(std::istream& in, std::span<const std::string_view> required,
             std::span<const std::string_view> optional)
        : in_(in) {
        std::string header;
        while (std::getline(in_, header)) {
            ++line_;
            if (!trim(header).empty()) break;
        }
        if (trim(header).empty()) throw Error(ErrorKind::Format, "missing CSV header row");
        if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
        std::vector<std::string> names;
        try {
            names = split_csv_line(header);
        } catch (const Error&) {
            throw Error(ErrorKind::Format, "unparseable CSV header");
        }
        for (std::size_t i = 0; i < names.size(); ++i) {
            const std::string name(trim(names[i]));
            if (!columns_.emplace(name, i).second) {
                throw Error(ErrorKind::Format, "duplicate CSV column '" + name + "'");
            }
        }
        for (const auto col : required) {
            if (!columns_.count(std::string(col))) {
                throw Error(ErrorKind::Format, "CSV header lacks required column '" + std::string(col) + "'");
            }
        }
        for (const auto col : optional) optional_.insert(std::string(col));
    }

    // Advances to the next non-blank line; false at end of stream.
    bool next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (trim(line).empty()) continue;
            raw_ = std::move(line);
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }

    std::vector<std::string> fields() const {
        try {
            auto f = split_csv_line(raw_);
            if (f.size() != columns_.size()) {
                throw RowError{"expected " + std::to_string(columns_.size()) + " fields, found " +
                               std::to_string(f.size())};
            }
            return f;
        } catch (const Error& e) {
            throw RowError{e.what()};
        }
    }

    bool has(std::string_view col) const { return columns_.count(std::string(col)) > 0; }

    std::string_view get(const std::vector<std::string>& f, std::string_view col) const {
        return trim(f[columns_.at(std::string(col))]);
    }

private:
    std::istream& in_;
    std::unordered_map<std::string, std::size_t> columns_;
    std::set<std::string> optional_;
    std::size_t line_ = 0;
    std::string raw_;
};

double number(std::string_view field, std::string_view what) {
    const auto v = parse_double(field);
    if (!v || !std::isfinite(*v)) throw RowError{"invalid " + std::string(what) + " '" + std::string(field) + "'"};
    return *v;
}

int year_field(std::string_view field, int lo, int hi) {
    const auto v = parse_int(field);
    if (!v) throw RowError{"invalid year '" + std::string(field) + "'"};
    if (*v < lo || *v > hi) {
        throw RowError{"year " + std::to_string(*v) + " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]"};
    }
    return static_cast<int>(*v);
}

GeoPoint point_field(std::string_view lat, std::string_view lon) {
    const GeoPoint p{number(lat, "lat"), number(lon, "lon")};
    if (!is_valid(p)) throw RowError{"coordinates out of range"};
    return p;
}

template <typename Record, typename RowFn>
LoadResult<Record> read_rows(CsvTable& table, const LoadOptions& opts, RowFn&& parse_row) {
    LoadResult<Record> result;
    while (table.next()) {
        ++result.rows;
        try {
            result.records.push_back(parse_row(table.fields()));
        } catch (const RowError& e) {
            if (opts.strict) {
                throw Error(ErrorKind::Validation,
                            "line " + std::to_string(table.line()) + ": " + e.message);
            }
            result.diagnostics.push_back({table.line(), e.message});
        }
    }
    return result;
}

constexpr int kEarliestPredictorYear = 1800;

}  // namespace

LoadResult<FireIncident> load_incidents(std::istream& in, const LoadOptions& opts) {
    static constexpr std::string_view required[] = {"id", "year", "lat", "lon", "burned_area_acres"};
    CsvTable table(in, required, {});
    const int max_year = present_year();
    return read_rows<FireIncident>(table, opts, [&](const std::vector<std::string>& f) {
        FireIncident r;
        r.id = std::string(table.get(f, "id"));
        r.year = year_field(table.get(f, "year"), kFirstIncidentYear, max_year);
        r.location = point_field(table.get(f, "lat"), table.get(f, "lon"));
        r.burned_area = number(table.get(f, "burned_area_acres"), "burned area");
        if (r.burned_area < 0.0) throw RowError{"negative area"};
        return r;
    });
}

LoadResult<PredictorSample> load_predictor_samples(std::istream& in, std::optional<Predictor> expected,
                                                   const LoadOptions& opts) {
    static constexpr std::string_view required[] = {"predictor", "year", "lat", "lon", "value"};
    CsvTable table(in, required, {});
    const int max_year = present_year();
    return read_rows<PredictorSample>(table, opts, [&](const std::vector<std::string>& f) {
        PredictorSample s;
        const auto name = table.get(f, "predictor");
        const auto p = parse_predictor(name);
        if (!p) throw RowError{"unknown predictor '" + std::string(name) + "'"};
        if (*p == Predictor::Pdsi) throw RowError{"pdsi is supplied per county, not as point samples"};
        if (expected && *p != *expected) {
            throw RowError{"expected predictor '" + std::string(predictor_name(*expected)) + "', found '" +
                           std::string(name) + "'"};
        }
        s.predictor = *p;
        const auto year = table.get(f, "year");
        if (s.predictor == Predictor::Altitude) {
            if (!year.empty()) throw RowError{"altitude rows must leave year empty"};
        } else {
            if (year.empty()) throw RowError{"missing year"};
            s.year = year_field(year, kEarliestPredictorYear, max_year);
        }
        s.location = point_field(table.get(f, "lat"), table.get(f, "lon"));
        s.value = number(table.get(f, "value"), "value");
        switch (s.predictor) {
            case Predictor::Ndvi:
                if (s.value < -1.0 || s.value > 1.0) throw RowError{"ndvi outside [-1, 1]"};
                break;
            case Predictor::PopulationDensity:
                if (s.value < 0.0) throw RowError{"negative population density"};
                break;
            case Predictor::TreeMortalityArea:
                if (s.value < 0.0) throw RowError{"negative area"};
                break;
            case Predictor::TreeMortalityNumber:
                if (s.value < 0.0) throw RowError{"negative count"};
                break;
            default:
                break;
        }
        return s;
    });
}

LoadResult<CountyPdsiRecord> load_county_pdsi(std::istream& csv, const nlohmann::json& shapes,
                                              const LoadOptions& opts) {
    static constexpr std::string_view required[] = {"county_id", "year", "pdsi"};
    static constexpr std::string_view optional[] = {"month"};
    CsvTable table(csv, required, optional);
    const bool has_month = table.has("month");
    const int max_year = present_year();

    struct Row {
        std::string county;
        int year;
        std::optional<int> month;
        double pdsi;
        std::size_t line;
    };
    LoadResult<Row> rows = read_rows<Row>(table, opts, [&](const std::vector<std::string>& f) {
        Row r;
        r.county = std::string(table.get(f, "county_id"));
        if (r.county.empty()) throw RowError{"missing county_id"};
        r.year = year_field(table.get(f, "year"), kEarliestPredictorYear, max_year);
        if (has_month && !table.get(f, "month").empty()) {
            const auto m = parse_int(table.get(f, "month"));
            if (!m || *m < 1 || *m > 12) throw RowError{"invalid month '" + std::string(table.get(f, "month")) + "'"};
            r.month = static_cast<int>(*m);
        }
        r.pdsi = number(table.get(f, "pdsi"), "pdsi");
        r.line = table.line();
        return r;
    });

    std::map<std::string, std::shared_ptr<const Region>> shape_by_id;
    for (auto& [id, region] : keyed_regions_from_geojson(shapes, "county_id")) {
        shape_by_id.emplace(id, std::make_shared<const Region>(std::move(region)));
    }

    std::vector<std::string> unresolved;
    for (const auto& r : rows.records) {
        if (!shape_by_id.count(r.county) &&
            std::find(unresolved.begin(), unresolved.end(), r.county) == unresolved.end()) {
            unresolved.push_back(r.county);
        }
    }
    if (!unresolved.empty()) {
        std::string list;
        for (const auto& id : unresolved) list += (list.empty() ? "" : ", ") + id;
        throw Error(ErrorKind::Unresolved, "county ids without a shape: " + list);
    }

    struct Group {
        std::string county;
        int year;
        bool annual = false;
        std::set<int> months;
        double sum = 0.0;
        int count = 0;
    };
    std::vector<Group> groups;
    std::map<std::pair<std::string, int>, std::size_t> index;
    for (const auto& r : rows.records) {
        const auto key = std::make_pair(r.county, r.year);
        auto [it, inserted] = index.emplace(key, groups.size());
        if (inserted) groups.push_back({r.county, r.year, false, {}, 0.0, 0});
        Group& g = groups[it->second];
        const std::string where = "duplicate county-year (" + r.county + ", " + std::to_string(r.year) +
                                  ") at line " + std::to_string(r.line);
        if (!r.month) {
            if (g.count > 0) throw Error(ErrorKind::DuplicateKey, where);
            g.annual = true;
        } else {
            if (g.annual || !g.months.insert(*r.month).second) throw Error(ErrorKind::DuplicateKey, where);
        }
        g.sum += r.pdsi;
        ++g.count;
    }

    LoadResult<CountyPdsiRecord> out;
    out.rows = rows.rows;
    out.diagnostics = std::move(rows.diagnostics);
    for (const auto& g : groups) {
        out.records.push_back({g.county, shape_by_id.at(g.county), g.year, g.sum / g.count});
    }
    return out;
}

std::map<Predictor, Coverage> coverage_of(std::span<const PredictorSample> samples,
                                          std::span<const CountyPdsiRecord> counties) {
    std::map<Predictor, Coverage> cov;
    for (const Predictor p : kAllPredictors) cov[p];
    for (const auto& s : samples) {
        if (s.year) {
            cov[s.predictor].years.insert(*s.year);
        } else {
            cov[s.predictor].has_static = true;
        }
    }
    for (const auto& c : counties) cov[Predictor::Pdsi].years.insert(c.year);
    return cov;
}

void AlignmentPlan::set(Predictor p, int year, YearSource source) { entries_[{p, year}] = source; }

YearSource AlignmentPlan::resolve(Predictor p, int year) const {
    const auto it = entries_.find({p, year});
    if (it == entries_.end()) return {YearSource::Kind::Gap, year};
    return it->second;
}

AlignmentPlan align_years(const std::map<Predictor, Coverage>& coverage, std::span<const int> target_years) {
    AlignmentPlan plan;
    for (const Predictor p : kAllPredictors) {
        const auto it = coverage.find(p);
        const Coverage empty;
        const Coverage& cov = it == coverage.end() ? empty : it->second;
        for (const int year : target_years) {
            YearSource src{YearSource::Kind::Gap, year};
            if (p == Predictor::Altitude && cov.has_static) {
                src = {YearSource::Kind::Static, 0};
            } else if (cov.years.count(year)) {
                src = {YearSource::Kind::Exact, year};
            } else if (is_slow_moving(p) && !cov.years.empty()) {
                // Nearest covered year; on a tie the later one wins.
                const auto above = cov.years.lower_bound(year);
                int best = 0;
                if (above == cov.years.end()) {
                    best = *cov.years.rbegin();
                } else if (above == cov.years.begin()) {
                    best = *above;
                } else {
                    const int later = *above;
                    const int earlier = *std::prev(above);
                    best = (later - year <= year - earlier) ? later : earlier;
                }
                src = {YearSource::Kind::Nearest, best};
            } else if (is_slow_moving(p) && cov.has_static) {
                src = {YearSource::Kind::Static, 0};
            }
            plan.set(p, year, src);
        }
    }
    return plan;
}

}  // namespace wildfire
