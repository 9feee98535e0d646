#include "wildfire/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wildfire/error.hpp"

namespace wildfire {

bool is_valid(const GeoPoint& p) {
    return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
           p.lon >= -180.0 && p.lon <= 180.0;
}

bool GeoRect::intersects(const GeoRect& other) const {
    return lat_lo <= other.lat_hi && other.lat_lo <= lat_hi && lon_lo <= other.lon_hi &&
           other.lon_lo <= lon_hi;
}

namespace {

void validate_ring(const Ring& ring) {
    for (const auto& p : ring) {
        if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
            throw Error(ErrorKind::InvalidPolygon, "polygon vertex is not finite");
        }
    }
    std::vector<GeoPoint> distinct;
    for (const auto& p : ring) {
        if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) {
            distinct.push_back(p);
            if (distinct.size() >= 3) return;
        }
    }
    throw Error(ErrorKind::InvalidPolygon, "polygon ring needs at least 3 distinct vertices");
}

bool ring_contains(const Ring& ring, const GeoPoint& p) {
    bool inside = false;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const GeoPoint& a = ring[i];
        const GeoPoint& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double lon_cross = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if (p.lon < lon_cross) inside = !inside;
        }
    }
    return inside;
}

double ring_area(const Ring& ring) {
    double twice = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        twice += ring[j].lon * ring[i].lat - ring[i].lon * ring[j].lat;
    }
    return std::abs(twice) / 2.0;
}

}  // namespace

void validate(const GeoPolygon& poly) {
    validate_ring(poly.outer);
    for (const auto& hole : poly.holes) validate_ring(hole);
}

void validate(const Region& region) {
    if (region.empty()) throw Error(ErrorKind::InvalidPolygon, "region has no polygons");
    for (const auto& poly : region) validate(poly);
}

bool contains(const GeoPolygon& poly, const GeoPoint& p) {
    if (!ring_contains(poly.outer, p)) return false;
    for (const auto& hole : poly.holes) {
        if (ring_contains(hole, p)) return false;
    }
    return true;
}

bool contains(const Region& region, const GeoPoint& p) {
    return std::any_of(region.begin(), region.end(),
                       [&](const GeoPolygon& poly) { return contains(poly, p); });
}

GeoRect bounding_box(const GeoPolygon& poly) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    GeoRect r{inf, -inf, inf, -inf};
    for (const auto& p : poly.outer) {
        r.lat_lo = std::min(r.lat_lo, p.lat);
        r.lat_hi = std::max(r.lat_hi, p.lat);
        r.lon_lo = std::min(r.lon_lo, p.lon);
        r.lon_hi = std::max(r.lon_hi, p.lon);
    }
    return r;
}

GeoRect bounding_box(const Region& region) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    GeoRect r{inf, -inf, inf, -inf};
    for (const auto& poly : region) {
        const GeoRect b = bounding_box(poly);
        r.lat_lo = std::min(r.lat_lo, b.lat_lo);
        r.lat_hi = std::max(r.lat_hi, b.lat_hi);
        r.lon_lo = std::min(r.lon_lo, b.lon_lo);
        r.lon_hi = std::max(r.lon_hi, b.lon_hi);
    }
    return r;
}

double planar_area(const Region& region) {
    double total = 0.0;
    for (const auto& poly : region) {
        total += ring_area(poly.outer);
        for (const auto& hole : poly.holes) total -= ring_area(hole);
    }
    return total;
}

GeoPolygon rectangle(const GeoRect& r) {
    return GeoPolygon{{{r.lat_lo, r.lon_lo},
                       {r.lat_lo, r.lon_hi},
                       {r.lat_hi, r.lon_hi},
                       {r.lat_hi, r.lon_lo},
                       {r.lat_lo, r.lon_lo}},
                      {}};
}

}  // namespace wildfire
