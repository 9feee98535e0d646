#include "wildfire/geojson.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "wildfire/error.hpp"

namespace wildfire {

namespace {

using nlohmann::json;

Ring parse_ring(const json& coords) {
    Ring ring;
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2) {
            throw Error(ErrorKind::InvalidPolygon, "GeoJSON position must be [lon, lat]");
        }
        ring.push_back({pos[1].get<double>(), pos[0].get<double>()});
    }
    return ring;
}

GeoPolygon parse_polygon(const json& rings) {
    if (!rings.is_array() || rings.empty()) {
        throw Error(ErrorKind::InvalidPolygon, "GeoJSON polygon has no rings");
    }
    GeoPolygon poly;
    poly.outer = parse_ring(rings[0]);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i]));
    validate(poly);
    return poly;
}

void append_geometry(const json& geom, Region& out) {
    const std::string type = geom.at("type").get<std::string>();
    if (type == "Polygon") {
        out.push_back(parse_polygon(geom.at("coordinates")));
    } else if (type == "MultiPolygon") {
        for (const auto& rings : geom.at("coordinates")) out.push_back(parse_polygon(rings));
    } else if (type == "GeometryCollection") {
        for (const auto& g : geom.at("geometries")) append_geometry(g, out);
    } else {
        throw Error(ErrorKind::InvalidPolygon, "unsupported GeoJSON geometry type '" + type + "'");
    }
}

void append_any(const json& doc, Region& out) {
    const std::string type = doc.at("type").get<std::string>();
    if (type == "FeatureCollection") {
        for (const auto& f : doc.at("features")) append_any(f, out);
    } else if (type == "Feature") {
        append_geometry(doc.at("geometry"), out);
    } else {
        append_geometry(doc, out);
    }
}

json ring_json(const Ring& ring) {
    json out = json::array();
    for (const auto& p : ring) out.push_back({p.lon, p.lat});
    if (!ring.empty() && !(ring.front() == ring.back())) out.push_back({ring.front().lon, ring.front().lat});
    return out;
}

}  // namespace

Region region_from_geojson(const json& doc) {
    try {
        Region region;
        append_any(doc, region);
        validate(region);
        return region;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidPolygon, std::string("malformed GeoJSON: ") + e.what());
    }
}

std::vector<std::pair<std::string, Region>> keyed_regions_from_geojson(const json& doc,
                                                                       const std::string& id_property) {
    try {
        if (doc.at("type").get<std::string>() != "FeatureCollection") {
            throw Error(ErrorKind::Format, "expected a GeoJSON FeatureCollection");
        }
        std::vector<std::pair<std::string, Region>> out;
        for (const auto& f : doc.at("features")) {
            const auto& prop = f.at("properties").at(id_property);
            const std::string id = prop.is_string() ? prop.get<std::string>() : prop.dump();
            Region parts;
            append_geometry(f.at("geometry"), parts);
            auto it = std::find_if(out.begin(), out.end(), [&](const auto& kv) { return kv.first == id; });
            if (it == out.end()) {
                out.emplace_back(id, std::move(parts));
            } else {
                it->second.insert(it->second.end(), parts.begin(), parts.end());
            }
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Format, std::string("malformed GeoJSON: ") + e.what());
    }
}

json to_geojson_geometry(const Region& region) {
    json polys = json::array();
    for (const auto& poly : region) {
        json rings = json::array();
        rings.push_back(ring_json(poly.outer));
        for (const auto& hole : poly.holes) rings.push_back(ring_json(hole));
        polys.push_back(std::move(rings));
    }
    if (polys.size() == 1) return {{"type", "Polygon"}, {"coordinates", polys[0]}};
    return {{"type", "MultiPolygon"}, {"coordinates", std::move(polys)}};
}

}  // namespace wildfire
