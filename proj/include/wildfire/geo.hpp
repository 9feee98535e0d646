#pragma once

#include <span>
#include <vector>

namespace wildfire {

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool is_valid(const GeoPoint& p);

// Axis-aligned rectangle in degree space. Cells use the half-open
// convention [lat_lo, lat_hi) x [lon_lo, lon_hi).
struct GeoRect {
    double lat_lo = 0.0;
    double lat_hi = 0.0;
    double lon_lo = 0.0;
    double lon_hi = 0.0;

    GeoPoint center() const { return {(lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0}; }
    bool intersects(const GeoRect& other) const;

    friend bool operator==(const GeoRect&, const GeoRect&) = default;
};

using Ring = std::vector<GeoPoint>;

// Simple polygon with optional holes. A ring may or may not repeat its first
// vertex at the end; closure is implied either way.
struct GeoPolygon {
    Ring outer;
    std::vector<Ring> holes;
};

// Multi-part region (e.g. a county with islands): the union of its parts.
using Region = std::vector<GeoPolygon>;

// Throws Error(InvalidPolygon) when a ring has fewer than 3 distinct vertices
// or a non-finite coordinate.
void validate(const GeoPolygon& poly);
void validate(const Region& region);

// Even-odd ray casting; holes are subtracted.
bool contains(const GeoPolygon& poly, const GeoPoint& p);
bool contains(const Region& region, const GeoPoint& p);

GeoRect bounding_box(const GeoPolygon& poly);
GeoRect bounding_box(const Region& region);

// Shoelace area in square degrees (outer minus holes, summed over parts).
double planar_area(const Region& region);

GeoPolygon rectangle(const GeoRect& r);

}  // namespace wildfire
