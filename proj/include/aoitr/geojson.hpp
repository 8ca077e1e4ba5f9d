#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "aoitr/dataset.hpp"

namespace aoitr::data {

// RFC 7946 building blocks. Polygons serialize as a single closed CCW
// exterior ring; roads as one two-point LineString feature per segment.
nlohmann::json polygon_feature(const Polygon& p, const nlohmann::json& properties);
nlohmann::json poi_feature(const POI& p);
nlohmann::json feature_collection(std::vector<nlohmann::json> features);
Polygon polygon_from_feature(const nlohmann::json& feature);

const char* poi_kind_name(geo::PoiKind k);
geo::PoiKind poi_kind_from_name(const std::string& s);

// Whole-sample round trip, raster excluded (that lives in the PPM next to
// the scene file). Features carry a `role` property for dispatch.
nlohmann::json sample_to_geojson(const GeoSample& s);
GeoSample sample_from_geojson(const nlohmann::json& j);

// One directory per sample: scene.geojson + patch.ppm (+ its bbox sidecar).
void save_sample(const std::string& dir, const GeoSample& s);
GeoSample load_sample(const std::string& dir);

struct Manifest {
    std::vector<std::string> train, val;
};

// Layout: <root>/<sample id>/..., plus <root>/manifest.json with the split
// (leading `train_fraction` share of ids in generation order -> train).
void save_dataset(const std::string& root, const std::vector<GeoSample>& samples,
                  double train_fraction = 0.8);
Manifest read_manifest(const std::string& root);
// split: "train", "val", or "all"
std::vector<GeoSample> load_dataset(const std::string& root, const std::string& split);

}  // namespace aoitr::data
