#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wildfire/geo.hpp"

namespace wildfire {

// Row indexes latitude upward from lat_min, col indexes longitude eastward
// from lon_min.
struct CellId {
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    friend auto operator<=>(const CellId&, const CellId&) = default;
};

// A uniform lat/lon lattice over a bounding box plus the set of cells that
// count as analysis units. When the box extent is not a multiple of the cell
// size, the last row/col is still full size and extends past the box.
class GridSpec {
public:
    GridSpec(const GeoRect& bbox, double cell_size, std::vector<bool> land_mask);

    const GeoRect& bbox() const noexcept { return bbox_; }
    double cell_size() const noexcept { return cell_size_; }
    std::uint32_t n_rows() const noexcept { return n_rows_; }
    std::uint32_t n_cols() const noexcept { return n_cols_; }

    bool in_range(CellId c) const noexcept { return c.row < n_rows_ && c.col < n_cols_; }
    bool is_masked(CellId c) const noexcept;

    // Masked cells in row-major order.
    std::span<const CellId> cells() const noexcept { return cells_; }
    std::size_t cell_count() const noexcept { return cells_.size(); }

    // Position of a masked cell within cells(); nullopt for unmasked cells.
    std::optional<std::size_t> index_of(CellId c) const noexcept;

    const std::vector<bool>& land_mask() const noexcept { return mask_; }

    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.bbox_ == b.bbox_ && a.cell_size_ == b.cell_size_ && a.mask_ == b.mask_;
    }

private:
    GeoRect bbox_;
    double cell_size_;
    std::uint32_t n_rows_;
    std::uint32_t n_cols_;
    std::vector<bool> mask_;
    std::vector<CellId> cells_;
    std::vector<std::int64_t> position_;
};

// Number of cells needed to cover `extent` with full-size cells.
std::uint32_t cells_along(double extent, double cell_size);

// Masks by cell-center containment. Throws InvalidRegion for a degenerate box
// or non-positive cell size, InvalidPolygon for a malformed mask.
GridSpec build_grid(const GeoRect& bbox, double cell_size, const Region& mask);
GridSpec build_grid(const GeoRect& bbox, double cell_size, const GeoPolygon& mask);

// nullopt means Outside: beyond the box or in an unmasked cell.
std::optional<CellId> locate(const GridSpec& grid, const GeoPoint& p);

GeoRect cell_bounds(const GridSpec& grid, CellId c);

// Fraction of the cell covered by the polygon, estimated from a fixed 10x10
// lattice of sub-cell centers. Deterministic.
double overlap_fraction(const GridSpec& grid, CellId c, const GeoPolygon& poly);
double overlap_fraction(const GridSpec& grid, CellId c, const Region& region);

inline constexpr int kOverlapSubdivisions = 10;

// {"bbox":{...},"cell_size":..,"n_rows":..,"n_cols":..,"land_mask":"<base64>"}
// The mask is a row-major bitset, bit i stored in byte i/8 at position i%8
// (least significant bit first).
nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& doc);

// One polygon per masked cell, with "row"/"col" properties.
nlohmann::json cells_geojson(const GridSpec& grid);

}  // namespace wildfire
