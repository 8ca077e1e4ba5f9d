#pragma once

// Test-only helpers: independent geometric oracles and random shape
// generators. Nothing here may call into the library paths under test;
// comparisons stay meaningful only while these are self-contained.

#include <algorithm>
#include <cmath>
#include <vector>

#include "aoitr/geometry.hpp"
#include "aoitr/rng.hpp"

namespace oracle {

using aoitr::Rng;
using aoitr::geo::GeoPoint;
using aoitr::geo::Polygon;

// Winding-number membership test (nonzero rule). Independent of the even-odd
// crossing implementation in the library.
inline bool winding_inside(GeoPoint q, const std::vector<GeoPoint>& ring) {
    int wn = 0;
    const size_t n = ring.size();
    for (size_t i = 0; i < n; ++i) {
        const GeoPoint a = ring[i];
        const GeoPoint b = ring[(i + 1) % n];
        const double side = (b.x - a.x) * (q.y - a.y) - (b.y - a.y) * (q.x - a.x);
        if (a.y <= q.y) {
            if (b.y > q.y && side > 0) ++wn;
        } else {
            if (b.y <= q.y && side < 0) --wn;
        }
    }
    return wn != 0;
}

inline bool winding_inside(GeoPoint q, const Polygon& p) {
    return winding_inside(q, p.vertices());
}

struct MbrBox {
    double minx, miny, maxx, maxy;
};

inline MbrBox ring_box(const std::vector<GeoPoint>& ring) {
    MbrBox b{ring[0].x, ring[0].y, ring[0].x, ring[0].y};
    for (const GeoPoint& v : ring) {
        b.minx = std::min(b.minx, v.x);
        b.miny = std::min(b.miny, v.y);
        b.maxx = std::max(b.maxx, v.x);
        b.maxy = std::max(b.maxy, v.y);
    }
    return b;
}

// Monte Carlo rejection-sampling area estimate over the ring's bbox.
inline double mc_area(const Polygon& p, size_t samples, Rng& rng) {
    const MbrBox b = ring_box(p.vertices());
    size_t hits = 0;
    for (size_t i = 0; i < samples; ++i) {
        const GeoPoint q{rng.uniform(b.minx, b.maxx), rng.uniform(b.miny, b.maxy)};
        if (winding_inside(q, p)) ++hits;
    }
    return double(hits) / double(samples) * (b.maxx - b.minx) * (b.maxy - b.miny);
}

// Monte Carlo IoU estimate over the union of both bboxes.
inline double mc_iou(const Polygon& a, const Polygon& b, size_t samples, Rng& rng) {
    MbrBox ba = ring_box(a.vertices());
    const MbrBox bb = ring_box(b.vertices());
    ba.minx = std::min(ba.minx, bb.minx);
    ba.miny = std::min(ba.miny, bb.miny);
    ba.maxx = std::max(ba.maxx, bb.maxx);
    ba.maxy = std::max(ba.maxy, bb.maxy);
    size_t n_inter = 0, n_union = 0;
    for (size_t i = 0; i < samples; ++i) {
        const GeoPoint q{rng.uniform(ba.minx, ba.maxx), rng.uniform(ba.miny, ba.maxy)};
        const bool in_a = winding_inside(q, a);
        const bool in_b = winding_inside(q, b);
        if (in_a && in_b) ++n_inter;
        if (in_a || in_b) ++n_union;
    }
    return n_union ? double(n_inter) / double(n_union) : 0.0;
}

// Star-shaped polygon about `center`: radii drawn per equally spaced,
// jittered angles. Simple by construction.
inline Polygon random_star_polygon(Rng& rng, GeoPoint center, double rmin, double rmax,
                                   int k) {
    std::vector<GeoPoint> v;
    v.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double jitter = rng.uniform(-0.3, 0.3) * (2.0 * M_PI / k);
        const double ang = 2.0 * M_PI * i / k + jitter;
        const double r = rng.uniform(rmin, rmax);
        v.push_back({center.x + r * std::cos(ang), center.y + r * std::sin(ang)});
    }
    return Polygon(std::move(v));
}

inline Polygon random_convex_polygon(Rng& rng, GeoPoint center, double radius, int k) {
    using aoitr::geo::convex_hull;
    std::vector<GeoPoint> pts;
    pts.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        const double r = radius * std::sqrt(rng.uniform01());
        pts.push_back({center.x + r * std::cos(ang), center.y + r * std::sin(ang)});
    }
    // Hull of random points in a disc; retry until non-degenerate.
    for (int attempt = 0; attempt < 16; ++attempt) {
        try {
            return convex_hull(pts);
        } catch (const aoitr::Error&) {
            pts.push_back({center.x + rng.uniform(-radius, radius),
                           center.y + rng.uniform(-radius, radius)});
        }
    }
    throw aoitr::Error("random_convex_polygon: could not build hull");
}

inline Polygon unit_square() {
    return Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
}

}  // namespace oracle
