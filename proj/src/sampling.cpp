#include "aoitr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace aoitr::sampling {

using geo::kEps;

GeoPoint ray_direction(int k, int n) {
    require(n > 0 && k >= 0 && k < n, "ray index out of range");
    const double ang = 2.0 * M_PI * double(k) / double(n);
    return {std::cos(ang), std::sin(ang)};
}

namespace {

// Ray/segment crossing: returns t >= 0 along the ray, or nullopt. The
// segment parameter is half-open (s in [0,1)) so a vertex shared by two
// consecutive edges registers once.
std::optional<double> ray_segment_hit(GeoPoint origin, GeoPoint dir, GeoPoint a,
                                      GeoPoint b, bool half_open) {
    const GeoPoint e = b - a;
    const double denom = dir.x * e.y - dir.y * e.x;
    if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel or degenerate
    const GeoPoint w = a - origin;
    const double t = (w.x * e.y - w.y * e.x) / denom;
    const double s = (w.x * dir.y - w.y * dir.x) / denom;
    const double s_hi = half_open ? 1.0 - kEps : 1.0 + kEps;
    if (t < -kEps || s < -kEps || s >= s_hi) return std::nullopt;
    return std::max(t, 0.0);
}

}  // namespace

std::vector<double> ray_polygon_hits(GeoPoint origin, GeoPoint dir, const Polygon& p) {
    require(std::abs(geo::norm(dir) - 1.0) < 1e-9, "ray direction must be normalized");
    std::vector<double> ts;
    const size_t n = p.size();
    for (size_t i = 0; i < n; ++i) {
        if (auto t = ray_segment_hit(origin, dir, p[i], p[(i + 1) % n], true))
            ts.push_back(*t);
    }
    std::sort(ts.begin(), ts.end());
    // Collapse near-identical crossings (vertex pass-through).
    ts.erase(std::unique(ts.begin(), ts.end(),
                         [](double a, double b) { return std::abs(a - b) <= kEps; }),
             ts.end());
    return ts;
}

double ray_bbox_exit(GeoPoint origin, GeoPoint dir, const BBox& bbox) {
    require(bbox.contains(origin), "ray origin must lie inside the bbox");
    double t = std::numeric_limits<double>::infinity();
    if (dir.x > kEps) t = std::min(t, (bbox.max.x - origin.x) / dir.x);
    if (dir.x < -kEps) t = std::min(t, (bbox.min.x - origin.x) / dir.x);
    if (dir.y > kEps) t = std::min(t, (bbox.max.y - origin.y) / dir.y);
    if (dir.y < -kEps) t = std::min(t, (bbox.min.y - origin.y) / dir.y);
    require(std::isfinite(t), "degenerate ray direction");
    return std::max(t, 0.0);
}

BoundarySample sample_boundary(const Polygon& p, GeoPoint center, int n) {
    require(n >= 3, "sample_boundary needs N >= 3");
    require(geo::point_in_polygon(center, p) && !geo::point_on_boundary(center, p),
            "sampling center must be strictly inside the polygon");
    BoundarySample out;
    out.center = center;
    out.points.reserve(n);
    for (int k = 0; k < n; ++k) {
        const GeoPoint dir = ray_direction(k, n);
        const std::vector<double> hits = ray_polygon_hits(center, dir, p);
        require(!hits.empty(), "interior ray found no boundary crossing");
        out.points.push_back(center + dir * hits.back());  // farthest: enclose lobes
    }
    return out;
}

Polygon reconstruct_polygon(const std::vector<GeoPoint>& points) {
    require(points.size() >= 3, "reconstruct_polygon needs at least 3 points");
    return Polygon(points);
}

ReferencePoints sample_road_refs(const RoadNetwork& roads, GeoPoint center, int n,
                                 const BBox& bbox) {
    require(n >= 3, "sample_road_refs needs N >= 3");
    require(bbox.contains(center), "center must lie inside the patch bbox");
    ReferencePoints out;
    out.points.reserve(n);
    out.tags.reserve(n);
    for (int k = 0; k < n; ++k) {
        const GeoPoint dir = ray_direction(k, n);
        const double t_exit = ray_bbox_exit(center, dir, bbox);
        double best = std::numeric_limits<double>::infinity();
        for (auto [ia, ib] : roads.segments) {
            // Closed segment interval: shared node double-hits are harmless
            // under the min.
            if (auto t =
                    ray_segment_hit(center, dir, roads.nodes[ia], roads.nodes[ib], false))
                if (*t < best) best = *t;
        }
        if (best <= t_exit + kEps) {
            out.points.push_back(center + dir * best);
            out.tags.push_back(RefTag::road);
        } else {
            out.points.push_back(center + dir * t_exit);
            out.tags.push_back(RefTag::truncated);
        }
    }
    return out;
}

ReferencePoints assemble_refs(const ReferencePoints& road_refs,
                              const std::vector<POI>& entrances, const BBox& bbox,
                              GeoPoint center) {
    const size_t n = road_refs.size();
    require(road_refs.tags.size() == n, "reference tags out of sync");
    require(entrances.size() <= n, "too many entrances");

    ReferencePoints out = road_refs;
    std::vector<bool> ref_taken(n, false);
    std::vector<bool> ent_used(entrances.size(), false);

    // Greedy nearest-pair-first: each pass commits the globally closest
    // (entrance, free ref) pair; ties break to the lower ref index.
    for (size_t pass = 0; pass < entrances.size(); ++pass) {
        double best_d = std::numeric_limits<double>::infinity();
        size_t best_e = 0, best_r = 0;
        for (size_t e = 0; e < entrances.size(); ++e) {
            if (ent_used[e]) continue;
            for (size_t r = 0; r < n; ++r) {
                if (ref_taken[r]) continue;
                const double d = geo::dist(entrances[e].location, road_refs.points[r]);
                if (d < best_d - kEps ||
                    (std::abs(d - best_d) <= kEps && r < best_r)) {
                    best_d = d;
                    best_e = e;
                    best_r = r;
                }
            }
        }
        ent_used[best_e] = true;
        ref_taken[best_r] = true;
        out.points[best_r] = entrances[best_e].location;
        out.tags[best_r] = RefTag::entrance;
    }

    // Truncation: pull out-of-patch points back to the border along their
    // ray from the center.
    for (size_t i = 0; i < n; ++i) {
        if (bbox.contains(out.points[i])) continue;
        const GeoPoint delta = out.points[i] - center;
        const double len = geo::norm(delta);
        require(len > kEps, "cannot clamp a point coincident with the center");
        const GeoPoint dir = delta * (1.0 / len);
        out.points[i] = center + dir * ray_bbox_exit(center, dir, bbox);
        out.tags[i] = RefTag::truncated;
    }
    return out;
}

}  // namespace aoitr::sampling
