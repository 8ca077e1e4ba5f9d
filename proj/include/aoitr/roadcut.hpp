#pragma once

#include <optional>
#include <vector>

#include "aoitr/geometry.hpp"

namespace aoitr::roadcut {

using geo::BBox;
using geo::GeoPoint;
using geo::POI;
using geo::Polygon;
using geo::RoadNetwork;

// Bounded faces of the planar arrangement of road segments + bbox border,
// counter-clockwise. Dangling chains (dead ends) bound no face and are
// pruned; nested loops are resolved by containment queries preferring the
// smallest face.
struct PlanarFaces {
    std::vector<Polygon> faces;
    BBox bbox;
};

PlanarFaces polygonize(const RoadNetwork& roads, const BBox& bbox);

// The face containing the core POI; nullopt when the point sits on a road
// line (ambiguous) or when no road loop encloses it — a containing face as
// large as the whole bbox means the roads cut nothing off around the point
// (the open-neighborhood case where this baseline has no answer).
std::optional<Polygon> roadcut_aoi(const POI& core, const PlanarFaces& faces);
std::optional<Polygon> roadcut_aoi(GeoPoint location, const PlanarFaces& faces);

}  // namespace aoitr::roadcut
