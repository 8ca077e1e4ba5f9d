#include "aoitr/roadcut.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aoitr/error.hpp"

namespace aoitr::roadcut {

namespace {

constexpr double kWeld = 1e-9;  // vertex snapping radius, degrees

struct Seg {
    GeoPoint a, b;
};

// Liang-Barsky segment/bbox clip; empty when fully outside.
std::optional<Seg> clip_to_bbox(GeoPoint a, GeoPoint b, const BBox& bb) {
    double t0 = 0.0, t1 = 1.0;
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - bb.min.x, bb.max.x - a.x, a.y - bb.min.y,
                         bb.max.y - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return std::nullopt;
            continue;
        }
        const double r = q[i] / p[i];
        if (p[i] < 0.0) {
            if (r > t1) return std::nullopt;
            t0 = std::max(t0, r);
        } else {
            if (r < t0) return std::nullopt;
            t1 = std::min(t1, r);
        }
    }
    if (t1 - t0 <= 0.0) return std::nullopt;
    return Seg{GeoPoint(a.x + t0 * dx, a.y + t0 * dy),
               GeoPoint(a.x + t1 * dx, a.y + t1 * dy)};
}

double dist2(GeoPoint a, GeoPoint b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return dx * dx + dy * dy;
}

// Merge nearly coincident endpoints/intersections into canonical vertices.
class VertexPool {
  public:
    int intern(GeoPoint p) {
        for (size_t i = 0; i < pts_.size(); ++i)
            if (dist2(pts_[i], p) <= kWeld * kWeld) return int(i);
        pts_.push_back(p);
        return int(pts_.size()) - 1;
    }
    const GeoPoint& operator[](int i) const { return pts_[size_t(i)]; }
    size_t size() const { return pts_.size(); }

  private:
    std::vector<GeoPoint> pts_;
};

// Parameters of every split point along segment s (intersections with other
// segments, plus endpoints of touching segments).
std::vector<double> split_params(const Seg& s, const std::vector<Seg>& all,
                                 size_t self) {
    std::vector<double> ts = {0.0, 1.0};
    const double ex = s.b.x - s.a.x, ey = s.b.y - s.a.y;
    const double len2 = ex * ex + ey * ey;
    auto on_seg_param = [&](GeoPoint p) -> std::optional<double> {
        const double t = ((p.x - s.a.x) * ex + (p.y - s.a.y) * ey) / len2;
        if (t < -1e-12 || t > 1.0 + 1e-12) return std::nullopt;
        const GeoPoint q(s.a.x + t * ex, s.a.y + t * ey);
        if (dist2(q, p) > kWeld * kWeld) return std::nullopt;
        return std::clamp(t, 0.0, 1.0);
    };
    for (size_t j = 0; j < all.size(); ++j) {
        if (j == self) continue;
        const Seg& o = all[j];
        const double fx = o.b.x - o.a.x, fy = o.b.y - o.a.y;
        const double denom = ex * fy - ey * fx;
        if (std::abs(denom) > 1e-18) {
            const double wx = o.a.x - s.a.x, wy = o.a.y - s.a.y;
            const double t = (wx * fy - wy * fx) / denom;
            const double u = (wx * ey - wy * ex) / denom;
            if (t >= -1e-12 && t <= 1.0 + 1e-12 && u >= -1e-12 && u <= 1.0 + 1e-12)
                ts.push_back(std::clamp(t, 0.0, 1.0));
        }
        // endpoints resting on s (T-junctions, collinear touches) split it too
        if (auto t = on_seg_param(o.a)) ts.push_back(*t);
        if (auto t = on_seg_param(o.b)) ts.push_back(*t);
    }
    std::sort(ts.begin(), ts.end());
    return ts;
}

}  // namespace

PlanarFaces polygonize(const RoadNetwork& roads, const BBox& bbox) {
    roads.validate();

    std::vector<Seg> segs;
    const GeoPoint c1 = bbox.min, c3 = bbox.max;
    const GeoPoint c2(c3.x, c1.y), c4(c1.x, c3.y);
    segs.push_back({c1, c2});
    segs.push_back({c2, c3});
    segs.push_back({c3, c4});
    segs.push_back({c4, c1});
    for (const auto& [i, j] : roads.segments) {
        if (auto s = clip_to_bbox(roads.nodes[size_t(i)], roads.nodes[size_t(j)], bbox))
            segs.push_back(*s);
    }

    // Split at intersections, weld vertices, dedupe edges.
    VertexPool pool;
    std::vector<std::pair<int, int>> edges;
    auto add_edge = [&edges](int u, int v) {
        if (u == v) return;
        const auto e = std::minmax(u, v);
        const std::pair<int, int> key{e.first, e.second};
        if (std::find(edges.begin(), edges.end(), key) == edges.end())
            edges.push_back(key);
    };
    for (size_t i = 0; i < segs.size(); ++i) {
        const auto ts = split_params(segs[i], segs, i);
        const Seg& s = segs[i];
        int prev = -1;
        double prev_t = -1.0;
        for (double t : ts) {
            if (prev >= 0 && t - prev_t < 1e-12) continue;
            const GeoPoint p(s.a.x + t * (s.b.x - s.a.x), s.a.y + t * (s.b.y - s.a.y));
            const int v = pool.intern(p);
            if (prev >= 0 && v != prev) add_edge(prev, v);
            if (prev < 0 || v != prev) {
                prev = v;
                prev_t = t;
            }
        }
    }

    // Adjacency; iteratively prune dead ends (they bound no face).
    std::vector<std::vector<int>> adj(pool.size());
    for (const auto& [u, v] : edges) {
        adj[size_t(u)].push_back(v);
        adj[size_t(v)].push_back(u);
    }
    bool pruned = true;
    while (pruned) {
        pruned = false;
        for (size_t u = 0; u < adj.size(); ++u) {
            if (adj[u].size() != 1) continue;
            const int v = adj[u][0];
            adj[u].clear();
            auto& av = adj[size_t(v)];
            av.erase(std::remove(av.begin(), av.end(), int(u)), av.end());
            pruned = true;
        }
    }

    // Sort neighbors by angle for the half-edge walk.
    std::vector<std::vector<std::pair<double, int>>> fan(pool.size());
    for (size_t u = 0; u < adj.size(); ++u) {
        for (int v : adj[u]) {
            const GeoPoint d = pool[v] - pool[int(u)];
            fan[u].push_back({std::atan2(d.y, d.x), v});
        }
        std::sort(fan[u].begin(), fan[u].end());
    }

    // Trace faces: from half-edge (u, v), continue with the clockwise-next
    // edge after (v, u) around v, keeping the interior on the left.
    std::map<std::pair<int, int>, bool> used;
    for (size_t u = 0; u < fan.size(); ++u)
        for (const auto& [ang, v] : fan[u]) used[{int(u), v}] = false;

    PlanarFaces out;
    out.bbox = bbox;
    for (auto& [he, seen] : used) {
        if (seen) continue;
        std::vector<int> cycle;
        int cu = he.first, cv = he.second;
        while (true) {
            auto it = used.find({cu, cv});
            require(it != used.end() && !it->second, "face walk revisited a half-edge");
            it->second = true;
            cycle.push_back(cu);
            const auto& f = fan[size_t(cv)];
            const GeoPoint back = pool[cu] - pool[cv];
            const double ain = std::atan2(back.y, back.x);
            // strictly-previous angle in the ccw order = next edge clockwise
            size_t k = 0;
            while (k < f.size() && f[k].first < ain - 1e-15) ++k;
            const size_t pick = (k == 0 ? f.size() : k) - 1;
            cu = cv;
            cv = f[pick].second;
            if (cu == he.first && cv == he.second) break;
            require(cycle.size() <= used.size(), "face walk failed to close");
        }
        if (cycle.size() < 3) continue;
        std::vector<GeoPoint> ring;
        ring.reserve(cycle.size());
        for (int vi : cycle) ring.push_back(pool[vi]);
        double area2 = 0.0;
        for (size_t i = 1; i + 1 < ring.size(); ++i) {
            // shifted shoelace: stays accurate at geographic magnitudes
            const GeoPoint a = ring[i] - ring[0];
            const GeoPoint b = ring[i + 1] - ring[0];
            area2 += a.x * b.y - a.y * b.x;
        }
        if (area2 <= kWeld) continue;  // outer face (negative) or sliver
        out.faces.push_back(Polygon(ring));
    }
    return out;
}

std::optional<Polygon> roadcut_aoi(GeoPoint location, const PlanarFaces& faces) {
    const Polygon* best = nullptr;
    double best_area = 0.0;
    for (const Polygon& f : faces.faces) {
        if (geo::point_on_boundary(location, f)) return std::nullopt;  // on a road
        if (!geo::point_in_polygon(location, f)) continue;
        const double a = geo::polygon_area(f);
        if (!best || a < best_area) {
            best = &f;
            best_area = a;
        }
    }
    if (!best) return std::nullopt;
    // A containing face the size of the whole bbox means no road loop
    // encloses the point; that is a miss, not an AOI.
    if (best_area >= faces.bbox.area() * (1.0 - 1e-12)) return std::nullopt;
    return *best;
}

std::optional<Polygon> roadcut_aoi(const POI& core, const PlanarFaces& faces) {
    core.validate();
    return roadcut_aoi(core.location, faces);
}

}  // namespace aoitr::roadcut
