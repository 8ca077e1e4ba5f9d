#include "aoitr/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace aoitr::geo {

double cross(GeoPoint o, GeoPoint a, GeoPoint b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double dot(GeoPoint a, GeoPoint b) { return a.x * b.x + a.y * b.y; }

double norm(GeoPoint a) { return std::hypot(a.x, a.y); }

double dist(GeoPoint a, GeoPoint b) { return norm(b - a); }

double dist_point_segment(GeoPoint q, GeoPoint a, GeoPoint b) {
    const GeoPoint ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 <= 0.0) return dist(q, a);
    double t = dot(q - a, ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return dist(q, a + ab * t);
}

bool is_finite(GeoPoint p) { return std::isfinite(p.x) && std::isfinite(p.y); }

BBox::BBox(GeoPoint lo, GeoPoint hi) : min(lo), max(hi) {
    require(is_finite(lo) && is_finite(hi), "bbox corners must be finite");
    require(lo.x < hi.x && lo.y < hi.y, "bbox min must be componentwise below max");
}

static int sig(double v) { return (v > kEps) - (v < -kEps); }

double signed_area(const std::vector<GeoPoint>& ring) {
    double s = 0.0;
    const size_t n = ring.size();
    // Shoelace about the first vertex: raw cross terms at geographic
    // coordinate magnitudes cancel catastrophically (~1e-12 absolute on
    // window-sized areas of ~1e-5), which matters to exact-area callers.
    const GeoPoint o = ring.empty() ? GeoPoint{} : ring[0];
    for (size_t i = 1; i + 1 < n; ++i) {
        const GeoPoint a = ring[i] - o;
        const GeoPoint b = ring[i + 1] - o;
        s += a.x * b.y - a.y * b.x;
    }
    return s / 2.0;
}

Polygon::Polygon(std::vector<GeoPoint> vertices) : verts_(std::move(vertices)) {
    require(verts_.size() >= 3, "polygon needs at least 3 vertices");
    for (const GeoPoint& v : verts_)
        require(is_finite(v), "polygon vertices must be finite");
    if (signed_area(verts_) < 0.0) std::reverse(verts_.begin(), verts_.end());
}

BBox Polygon::bounds() const {
    require(!verts_.empty(), "bounds of empty polygon");
    GeoPoint lo = verts_[0], hi = verts_[0];
    for (const GeoPoint& v : verts_) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
    }
    // Degenerate rings still need a box; pad by eps so BBox stays valid.
    if (hi.x - lo.x < kEps) hi.x = lo.x + kEps;
    if (hi.y - lo.y < kEps) hi.y = lo.y + kEps;
    return BBox(lo, hi);
}

GeoPoint Polygon::centroid() const {
    require(!verts_.empty(), "centroid of empty polygon");
    const double a = signed_area(verts_);
    if (std::abs(a) < 1e-12) {
        GeoPoint m{0, 0};
        for (const GeoPoint& v : verts_) m = m + v;
        return m * (1.0 / double(verts_.size()));
    }
    double cx = 0.0, cy = 0.0;
    const size_t n = verts_.size();
    for (size_t i = 0; i < n; ++i) {
        const GeoPoint& p = verts_[i];
        const GeoPoint& q = verts_[(i + 1) % n];
        const double w = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * w;
        cy += (p.y + q.y) * w;
    }
    return {cx / (6.0 * a), cy / (6.0 * a)};
}

static bool segments_properly_intersect(GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d) {
    const int d1 = sig(cross(c, d, a));
    const int d2 = sig(cross(c, d, b));
    const int d3 = sig(cross(a, b, c));
    const int d4 = sig(cross(a, b, d));
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return false;
}

bool Polygon::is_simple() const {
    const size_t n = verts_.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        const GeoPoint a = verts_[i];
        const GeoPoint b = verts_[(i + 1) % n];
        for (size_t j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;  // adjacent
            const GeoPoint c = verts_[j];
            const GeoPoint d = verts_[(j + 1) % n];
            if (segments_properly_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

Polygon Polygon::translated(GeoPoint d) const {
    std::vector<GeoPoint> v = verts_;
    for (GeoPoint& p : v) p = p + d;
    return Polygon(std::move(v));
}

Polygon Polygon::scaled(double s, GeoPoint about) const {
    std::vector<GeoPoint> v = verts_;
    for (GeoPoint& p : v) p = about + (p - about) * s;
    return Polygon(std::move(v));
}

const char* const kCategoryNames[20] = {
    "Exhibition hall, cultural center",
    "Hospital",
    "Natural scenic spots, gardens",
    "Gas/other energy station",
    "Government agencies, civil society organization",
    "Kindergarten",
    "Star hotel",
    "Leisure and entertainment place",
    "Industrial Park",
    "Car service area, parking lot",
    "University, vocational technical school",
    "City square, park square",
    "Office building, industrial building",
    "Primary and secondary school",
    "Residential area",
    "Train station, airport",
    "Shopping mall",
    "Factory",
    "Company",
    "Other",
};

void POI::validate() const {
    require(is_finite(location), "POI location must be finite");
    require(category >= 0 && category <= 19, "POI category outside taxonomy 0..19");
}

void RoadNetwork::validate() const {
    const int n = int(nodes.size());
    for (const GeoPoint& p : nodes) require(is_finite(p), "road node must be finite");
    for (auto [a, b] : segments) {
        require(a >= 0 && a < n && b >= 0 && b < n, "road segment index out of range");
        require(dist(nodes[a], nodes[b]) > kEps, "zero-length road segment");
    }
}

static size_t count_distinct(const std::vector<GeoPoint>& v) {
    size_t distinct = 0;
    for (size_t i = 0; i < v.size(); ++i) {
        bool dup = false;
        for (size_t j = 0; j < i && !dup; ++j) dup = dist(v[i], v[j]) <= kEps;
        if (!dup) ++distinct;
    }
    return distinct;
}

double polygon_area(const Polygon& p) {
    require(p.size() >= 3 && count_distinct(p.vertices()) >= 3,
            "degenerate polygon: fewer than 3 distinct vertices");
    return std::abs(signed_area(p.vertices()));
}

bool point_on_boundary(GeoPoint q, const Polygon& p, double eps) {
    const size_t n = p.size();
    for (size_t i = 0; i < n; ++i)
        if (dist_point_segment(q, p[i], p[(i + 1) % n]) <= eps) return true;
    return false;
}

bool point_in_polygon(GeoPoint q, const Polygon& p) {
    require(p.size() >= 3, "point_in_polygon needs a valid polygon");
    if (point_on_boundary(q, p)) return true;
    bool inside = false;
    const size_t n = p.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const GeoPoint& a = p[i];
        const GeoPoint& b = p[j];
        if ((a.y > q.y) != (b.y > q.y) &&
            q.x < (b.x - a.x) * (q.y - a.y) / (b.y - a.y) + a.x)
            inside = !inside;
    }
    return inside;
}

// --- polygon intersection via signed triangle decomposition --------------
//
// area(A n B) = | sum over edge pairs of the signed intersection area of
// triangles (o, a1, a2) and (o, b1, b2) |. Works for arbitrary simple
// polygons; each triangle pair is clipped with Sutherland-Hodgman.

namespace {

// Clip `poly` to the half-plane left of directed line (a, b), in place.
void clip_halfplane(std::vector<GeoPoint>& poly, GeoPoint a, GeoPoint b) {
    static thread_local std::vector<GeoPoint> out;
    out.clear();
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const GeoPoint p = poly[i];
        const GeoPoint q = poly[(i + 1) % n];
        const double sp = cross(a, b, p);
        const double sq = cross(a, b, q);
        if (sp >= -kEps) out.push_back(p);
        if ((sp > kEps && sq < -kEps) || (sp < -kEps && sq > kEps)) {
            const double t = sp / (sp - sq);
            out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
        }
    }
    poly = out;
}

double tri_tri_signed_inter(GeoPoint o, GeoPoint a, GeoPoint b, GeoPoint c, GeoPoint d) {
    const int s1 = sig(cross(o, a, b));
    const int s2 = sig(cross(o, c, d));
    if (s1 == 0 || s2 == 0) return 0.0;
    if (s1 < 0) std::swap(a, b);
    if (s2 < 0) std::swap(c, d);
    std::vector<GeoPoint> poly = {o, a, b};
    clip_halfplane(poly, o, c);
    if (poly.size() >= 3) clip_halfplane(poly, c, d);
    if (poly.size() >= 3) clip_halfplane(poly, d, o);
    if (poly.size() < 3) return 0.0;
    const double area = std::abs(signed_area(poly));
    return (s1 * s2 < 0) ? -area : area;
}

}  // namespace

double polygon_intersection_area(const Polygon& a, const Polygon& b) {
    require(a.size() >= 3 && b.size() >= 3, "intersection of invalid polygon");
    // Shift to a local origin for numerical headroom; areas are invariant.
    const GeoPoint o = a.bounds().center();
    double total = 0.0;
    const size_t na = a.size(), nb = b.size();
    for (size_t i = 0; i < na; ++i) {
        const GeoPoint a1 = a[i] - o;
        const GeoPoint a2 = a[(i + 1) % na] - o;
        for (size_t j = 0; j < nb; ++j) {
            const GeoPoint b1 = b[j] - o;
            const GeoPoint b2 = b[(j + 1) % nb] - o;
            total += tri_tri_signed_inter({0, 0}, a1, a2, b1, b2);
        }
    }
    return std::abs(total);
}

double polygon_iou(const Polygon& a, const Polygon& b) {
    const double area_a = polygon_area(a);
    const double area_b = polygon_area(b);
    require(area_a > 1e-12 && area_b > 1e-12, "polygon_iou: degenerate (zero-area) input");
    const double inter = std::min(polygon_intersection_area(a, b), std::min(area_a, area_b));
    const double uni = area_a + area_b - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

IouStats mean_iou(const std::vector<std::pair<Polygon, Polygon>>& pairs) {
    require(!pairs.empty(), "mean_iou over empty input");
    IouStats st;
    st.per_pair.reserve(pairs.size());
    size_t high = 0;
    for (const auto& [p, q] : pairs) {
        const double iou = polygon_iou(p, q);
        st.per_pair.push_back(iou);
        st.mean_iou += iou;
        if (iou > kHighIouThreshold) ++high;
    }
    st.mean_iou /= double(pairs.size());
    st.high_iou_rate = double(high) / double(pairs.size());
    return st;
}

Polygon convex_hull(const std::vector<GeoPoint>& points) {
    require(points.size() >= 3, "convex hull needs at least 3 points");
    std::vector<GeoPoint> pts = points;
    std::sort(pts.begin(), pts.end(), [](GeoPoint a, GeoPoint b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](GeoPoint a, GeoPoint b) { return dist(a, b) <= kEps; }),
              pts.end());
    require(pts.size() >= 3, "convex hull needs 3 distinct points");

    const size_t n = pts.size();
    std::vector<GeoPoint> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower chain
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
        hull[k++] = pts[i];
    }
    for (size_t i = n - 1, lower = k + 1; i-- > 0;) {  // upper chain
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= kEps) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);  // last point equals the first
    require(hull.size() >= 3, "convex hull degenerate: points are collinear");
    return Polygon(std::move(hull));
}

GeoPoint geo_to_pixel(GeoPoint pt, const BBox& bbox, double width, double height) {
    require(bbox.width() > kEps && bbox.height() > kEps, "zero-extent bbox");
    require(width > 0 && height > 0, "raster dimensions must be positive");
    return {(pt.x - bbox.min.x) / bbox.width() * width,
            (bbox.max.y - pt.y) / bbox.height() * height};
}

GeoPoint pixel_to_geo(GeoPoint px, const BBox& bbox, double width, double height) {
    require(bbox.width() > kEps && bbox.height() > kEps, "zero-extent bbox");
    require(width > 0 && height > 0, "raster dimensions must be positive");
    return {bbox.min.x + px.x / width * bbox.width(),
            bbox.max.y - px.y / height * bbox.height()};
}

}  // namespace aoitr::geo
