#include "wildfire/grid.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "wildfire/codec.hpp"
#include "wildfire/error.hpp"

namespace wildfire {

std::uint32_t cells_along(double extent, double cell_size) {
    // The tolerance absorbs representation error such as 1.0 / 0.1.
    const double n = std::ceil(extent / cell_size - 1e-9);
    return static_cast<std::uint32_t>(std::max(1.0, n));
}

namespace {

void validate_box(const GeoRect& bbox, double cell_size) {
    if (!(std::isfinite(bbox.lat_lo) && std::isfinite(bbox.lat_hi) && std::isfinite(bbox.lon_lo) &&
          std::isfinite(bbox.lon_hi))) {
        throw Error(ErrorKind::InvalidRegion, "bounding box has non-finite bounds");
    }
    if (!(bbox.lat_lo < bbox.lat_hi) || !(bbox.lon_lo < bbox.lon_hi)) {
        throw Error(ErrorKind::InvalidRegion, "bounding box has zero or negative area");
    }
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
        throw Error(ErrorKind::InvalidRegion, "cell size must be positive");
    }
}

// Index of the half-open interval containing x. Points within a billionth of a
// cell below an edge count as on it, so 0.3 lands in cell 3 of a 0.1 lattice
// even though 3 * 0.1 rounds to 0.30000000000000004.
std::int64_t interval_index(double x, double origin, double size) {
    return static_cast<std::int64_t>(std::floor((x - origin) / size + 1e-9));
}

}  // namespace

GridSpec::GridSpec(const GeoRect& bbox, double cell_size, std::vector<bool> land_mask)
    : bbox_(bbox), cell_size_(cell_size), n_rows_(0), n_cols_(0), mask_(std::move(land_mask)) {
    validate_box(bbox_, cell_size_);
    n_rows_ = cells_along(bbox_.lat_hi - bbox_.lat_lo, cell_size_);
    n_cols_ = cells_along(bbox_.lon_hi - bbox_.lon_lo, cell_size_);
    const std::size_t total = static_cast<std::size_t>(n_rows_) * n_cols_;
    if (mask_.size() != total) {
        throw Error(ErrorKind::InvalidRegion, "land mask size " + std::to_string(mask_.size()) +
                                                  " does not match " + std::to_string(total) +
                                                  " grid cells");
    }
    position_.assign(total, -1);
    for (std::uint32_t r = 0; r < n_rows_; ++r) {
        for (std::uint32_t c = 0; c < n_cols_; ++c) {
            const std::size_t flat = static_cast<std::size_t>(r) * n_cols_ + c;
            if (mask_[flat]) {
                position_[flat] = static_cast<std::int64_t>(cells_.size());
                cells_.push_back({r, c});
            }
        }
    }
}

bool GridSpec::is_masked(CellId c) const noexcept {
    return in_range(c) && mask_[static_cast<std::size_t>(c.row) * n_cols_ + c.col];
}

std::optional<std::size_t> GridSpec::index_of(CellId c) const noexcept {
    if (!in_range(c)) return std::nullopt;
    const auto pos = position_[static_cast<std::size_t>(c.row) * n_cols_ + c.col];
    if (pos < 0) return std::nullopt;
    return static_cast<std::size_t>(pos);
}

GridSpec build_grid(const GeoRect& bbox, double cell_size, const Region& mask) {
    validate_box(bbox, cell_size);
    validate(mask);
    const auto rows = cells_along(bbox.lat_hi - bbox.lat_lo, cell_size);
    const auto cols = cells_along(bbox.lon_hi - bbox.lon_lo, cell_size);
    std::vector<bool> land(static_cast<std::size_t>(rows) * cols, false);
    for (std::uint32_t r = 0; r < rows; ++r) {
        for (std::uint32_t c = 0; c < cols; ++c) {
            const GeoPoint center{bbox.lat_lo + (r + 0.5) * cell_size,
                                  bbox.lon_lo + (c + 0.5) * cell_size};
            land[static_cast<std::size_t>(r) * cols + c] = contains(mask, center);
        }
    }
    return GridSpec(bbox, cell_size, std::move(land));
}

GridSpec build_grid(const GeoRect& bbox, double cell_size, const GeoPolygon& mask) {
    return build_grid(bbox, cell_size, Region{mask});
}

std::optional<CellId> locate(const GridSpec& grid, const GeoPoint& p) {
    const GeoRect& b = grid.bbox();
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) return std::nullopt;
    if (p.lat < b.lat_lo || p.lat > b.lat_hi || p.lon < b.lon_lo || p.lon > b.lon_hi) {
        return std::nullopt;
    }
    auto row = interval_index(p.lat, b.lat_lo, grid.cell_size());
    auto col = interval_index(p.lon, b.lon_lo, grid.cell_size());
    // The top/right edge of the box belongs to the last cell.
    row = std::clamp<std::int64_t>(row, 0, grid.n_rows() - 1);
    col = std::clamp<std::int64_t>(col, 0, grid.n_cols() - 1);
    const CellId id{static_cast<std::uint32_t>(row), static_cast<std::uint32_t>(col)};
    if (!grid.is_masked(id)) return std::nullopt;
    return id;
}

GeoRect cell_bounds(const GridSpec& grid, CellId c) {
    if (!grid.in_range(c)) {
        throw Error(ErrorKind::Index, "cell (" + std::to_string(c.row) + "," +
                                          std::to_string(c.col) + ") is outside the grid");
    }
    const double s = grid.cell_size();
    const GeoRect& b = grid.bbox();
    return {b.lat_lo + c.row * s, b.lat_lo + (c.row + 1.0) * s, b.lon_lo + c.col * s,
            b.lon_lo + (c.col + 1.0) * s};
}

namespace {

template <typename Shape>
double sampled_fraction(const GridSpec& grid, CellId c, const Shape& shape) {
    const GeoRect cell = cell_bounds(grid, c);
    if (!cell.intersects(bounding_box(shape))) return 0.0;
    constexpr int n = kOverlapSubdivisions;
    const double dlat = (cell.lat_hi - cell.lat_lo) / n;
    const double dlon = (cell.lon_hi - cell.lon_lo) / n;
    int hits = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const GeoPoint p{cell.lat_lo + (i + 0.5) * dlat, cell.lon_lo + (j + 0.5) * dlon};
            if (contains(shape, p)) ++hits;
        }
    }
    return static_cast<double>(hits) / (n * n);
}

}  // namespace

double overlap_fraction(const GridSpec& grid, CellId c, const GeoPolygon& poly) {
    validate(poly);
    return sampled_fraction(grid, c, poly);
}

double overlap_fraction(const GridSpec& grid, CellId c, const Region& region) {
    validate(region);
    return sampled_fraction(grid, c, region);
}

nlohmann::json to_json(const GridSpec& grid) {
    const auto& mask = grid.land_mask();
    std::vector<std::uint8_t> bytes((mask.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
    const GeoRect& b = grid.bbox();
    return {
        {"bbox", {{"lat_min", b.lat_lo}, {"lat_max", b.lat_hi}, {"lon_min", b.lon_lo}, {"lon_max", b.lon_hi}}},
        {"cell_size", grid.cell_size()},
        {"n_rows", grid.n_rows()},
        {"n_cols", grid.n_cols()},
        {"cell_count", grid.cell_count()},
        {"land_mask", base64_encode(bytes)},
    };
}

GridSpec grid_from_json(const nlohmann::json& doc) {
    try {
        const auto& b = doc.at("bbox");
        const GeoRect bbox{b.at("lat_min").get<double>(), b.at("lat_max").get<double>(),
                           b.at("lon_min").get<double>(), b.at("lon_max").get<double>()};
        const double cell_size = doc.at("cell_size").get<double>();
        validate_box(bbox, cell_size);
        const auto rows = cells_along(bbox.lat_hi - bbox.lat_lo, cell_size);
        const auto cols = cells_along(bbox.lon_hi - bbox.lon_lo, cell_size);
        if (doc.contains("n_rows") && doc.at("n_rows").get<std::uint32_t>() != rows) {
            throw Error(ErrorKind::Format, "grid n_rows disagrees with bbox and cell_size");
        }
        if (doc.contains("n_cols") && doc.at("n_cols").get<std::uint32_t>() != cols) {
            throw Error(ErrorKind::Format, "grid n_cols disagrees with bbox and cell_size");
        }
        const auto bytes = base64_decode(doc.at("land_mask").get<std::string>());
        const std::size_t total = static_cast<std::size_t>(rows) * cols;
        if (bytes.size() != (total + 7) / 8) {
            throw Error(ErrorKind::Format, "land_mask bitset has the wrong length");
        }
        std::vector<bool> mask(total);
        for (std::size_t i = 0; i < total; ++i) mask[i] = (bytes[i / 8] >> (i % 8)) & 1u;
        return GridSpec(bbox, cell_size, std::move(mask));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("grid document: ") + e.what());
    }
}

nlohmann::json cells_geojson(const GridSpec& grid) {
    nlohmann::json features = nlohmann::json::array();
    for (const CellId c : grid.cells()) {
        const GeoRect r = cell_bounds(grid, c);
        features.push_back({
            {"type", "Feature"},
            {"properties", {{"row", c.row}, {"col", c.col}}},
            {"geometry",
             {{"type", "Polygon"},
              {"coordinates",
               {{{r.lon_lo, r.lat_lo}, {r.lon_hi, r.lat_lo}, {r.lon_hi, r.lat_hi}, {r.lon_lo, r.lat_hi},
                 {r.lon_lo, r.lat_lo}}}}}},
        });
    }
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace wildfire
