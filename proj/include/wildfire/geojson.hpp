#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wildfire/geo.hpp"

namespace wildfire {

// Accepts a Polygon, MultiPolygon, Feature or FeatureCollection (the union of
// every polygonal geometry). Coordinates are WGS84 [lon, lat].
Region region_from_geojson(const nlohmann::json& doc);

// FeatureCollection whose features carry a string or numeric `id_property`.
// Order follows the document; features sharing an id are merged.
std::vector<std::pair<std::string, Region>> keyed_regions_from_geojson(const nlohmann::json& doc,
                                                                       const std::string& id_property);

nlohmann::json to_geojson_geometry(const Region& region);

}  // namespace wildfire
