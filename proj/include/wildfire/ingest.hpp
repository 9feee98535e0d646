#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wildfire/records.hpp"

namespace wildfire {

struct Diagnostic {
    std::size_t line = 0;  // 1-based; the header is line 1
    std::string message;
};

template <typename Record>
struct LoadResult {
    std::vector<Record> records;
    std::vector<Diagnostic> diagnostics;
    std::size_t rows = 0;  // non-blank data lines seen
};

struct LoadOptions {
    // Promote the first row diagnostic to an Error(Validation).
    bool strict = false;
};

inline constexpr int kFirstIncidentYear = 1878;

// Current calendar year (UTC), the upper bound for record years.
int present_year();

// incidents.csv: id,year,lat,lon,burned_area_acres
LoadResult<FireIncident> load_incidents(std::istream& in, const LoadOptions& opts = {});

// predictor.csv: predictor,year,lat,lon,value (year empty for altitude).
// When `expected` is set, rows for other predictors are rejected.
LoadResult<PredictorSample> load_predictor_samples(std::istream& in,
                                                   std::optional<Predictor> expected = std::nullopt,
                                                   const LoadOptions& opts = {});

// county_pdsi.csv: county_id,year,month,pdsi with `month` optional. Monthly
// rows are averaged into one annual record per (county, year). `shapes` is a
// FeatureCollection keyed by the "county_id" property. Unresolved county ids
// and duplicate keys are fatal.
LoadResult<CountyPdsiRecord> load_county_pdsi(std::istream& csv, const nlohmann::json& shapes,
                                              const LoadOptions& opts = {});

// Years for which each predictor has data. Altitude is a static layer.
struct Coverage {
    std::set<int> years;
    bool has_static = false;
};

std::map<Predictor, Coverage> coverage_of(std::span<const PredictorSample> samples,
                                          std::span<const CountyPdsiRecord> counties);

struct YearSource {
    enum class Kind { Exact, Nearest, Static, Gap };
    Kind kind = Kind::Gap;
    int year = 0;  // source year for Exact/Nearest

    friend bool operator==(const YearSource&, const YearSource&) = default;
};

// Where each (predictor, target year) takes its values from. Slow-moving
// predictors borrow the nearest covered year (ties toward the later year);
// fast-moving ones get a Gap marker, reported when a table is assembled.
class AlignmentPlan {
public:
    void set(Predictor p, int year, YearSource source);
    YearSource resolve(Predictor p, int year) const;
    const std::map<std::pair<Predictor, int>, YearSource>& entries() const { return entries_; }

private:
    std::map<std::pair<Predictor, int>, YearSource> entries_;
};

AlignmentPlan align_years(const std::map<Predictor, Coverage>& coverage, std::span<const int> target_years);

}  // namespace wildfire
