#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoitr/geometry.hpp"
#include "aoitr/imagery.hpp"

namespace aoitr::data {

using geo::GeoPoint;
using geo::POI;
using geo::Polygon;
using geo::RoadNetwork;

struct LBSPoint {
    GeoPoint location;
    std::int64_t t = 0;  // epoch seconds
};

// One delivery record, resolved to a library POI. Repeats allowed.
struct LogisticsRecord {
    std::string poi_id;
    GeoPoint location;
};

enum class Provenance { library_positive, expired_negative, low_iou_negative };

struct ReliabilityLabel {
    bool reliable = true;
    Provenance provenance = Provenance::library_positive;
};

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& s);

// One training/eval unit: a core POI with its ground truth, the candidate
// polygon under reliability review, and every prior the model consumes.
struct GeoSample {
    std::string id;
    POI core;
    Polygon truth;      // ground-truth AOI boundary
    Polygon candidate;  // library polygon under evaluation (== truth when reliable)
    img::RasterPatch raster;
    RoadNetwork roads;           // clip around the sample
    std::vector<POI> entrances;  // on the truth boundary
    std::vector<POI> scene_pois; // library POIs inside the AOI (S_c)
    std::vector<LBSPoint> lbs;
    std::vector<LogisticsRecord> logistics;
    ReliabilityLabel label;

    void validate() const;
};

}  // namespace aoitr::data
