#pragma once

#include <vector>

#include "aoitr/geometry.hpp"

namespace aoitr::sampling {

using geo::BBox;
using geo::GeoPoint;
using geo::POI;
using geo::Polygon;
using geo::RoadNetwork;

enum class RefTag { road, entrance, truncated };

// Exactly N fence points around the core POI, one per equiangular ray.
struct ReferencePoints {
    std::vector<GeoPoint> points;
    std::vector<RefTag> tags;  // parallel to points

    size_t size() const { return points.size(); }
};

// Equiangular boundary nodes: points[k] lies on the source boundary along
// the ray at angle 2*pi*k/N from `center`, so angles are strictly
// increasing by construction.
struct BoundarySample {
    std::vector<GeoPoint> points;
    GeoPoint center;
};

// Unit direction for ray k of n.
GeoPoint ray_direction(int k, int n);

// All t >= 0 where origin + t*dir crosses an edge of p, ascending.
// `dir` must be normalized. Vertex crossings count once; empty result means
// the ray misses the polygon entirely.
std::vector<double> ray_polygon_hits(GeoPoint origin, GeoPoint dir, const Polygon& p);

// Distance along `dir` from `origin` (inside bbox) to the bbox border.
double ray_bbox_exit(GeoPoint origin, GeoPoint dir, const BBox& bbox);

// N equiangular boundary nodes about `center`, farthest crossing per ray so
// the fence encloses subsidiary lobes. `center` must be strictly inside.
BoundarySample sample_boundary(const Polygon& p, GeoPoint center, int n);

// Close the ring over points in their given (angular) order. Degenerate
// rings are representable; area/IoU reject them downstream.
Polygon reconstruct_polygon(const std::vector<GeoPoint>& points);

// Nearest road crossing per ray (the enclosing fence); rays with no road
// hit inside the bbox take the bbox border point instead, tagged truncated.
ReferencePoints sample_road_refs(const RoadNetwork& roads, GeoPoint center, int n,
                                 const BBox& bbox);

// Entrance replacement + truncation. Each entrance POI replaces its nearest
// remaining road ref (greedy nearest-pair-first, ties to the lower ref
// index). Points outside bbox are then pulled back to the border along
// their ray from `center` and re-tagged truncated. `center` parameterizes
// that clamp direction; output length is always road_refs.size().
ReferencePoints assemble_refs(const ReferencePoints& road_refs,
                              const std::vector<POI>& entrances, const BBox& bbox,
                              GeoPoint center);

}  // namespace aoitr::sampling
