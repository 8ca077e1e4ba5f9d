#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aoitr/error.hpp"

namespace aoitr::geo {

// Geometric predicate tolerance. Pipeline coordinates live in [0,1] patch
// space (geographic degrees only at the I/O boundary), so a fixed absolute
// epsilon is adequate; exact arithmetic is out of scope.
constexpr double kEps = 1e-9;

struct GeoPoint {
    double x = 0.0;  // longitude-like
    double y = 0.0;  // latitude-like

    GeoPoint operator+(GeoPoint o) const { return {x + o.x, y + o.y}; }
    GeoPoint operator-(GeoPoint o) const { return {x - o.x, y - o.y}; }
    GeoPoint operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const GeoPoint&) const = default;
};

double cross(GeoPoint o, GeoPoint a, GeoPoint b);  // (a-o) x (b-o)
double dot(GeoPoint a, GeoPoint b);
double norm(GeoPoint a);
double dist(GeoPoint a, GeoPoint b);
double dist_point_segment(GeoPoint q, GeoPoint a, GeoPoint b);
bool is_finite(GeoPoint p);

struct BBox {
    GeoPoint min, max;

    BBox() : min{0, 0}, max{1, 1} {}
    BBox(GeoPoint lo, GeoPoint hi);

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double area() const { return width() * height(); }
    GeoPoint center() const { return {(min.x + max.x) / 2, (min.y + max.y) / 2}; }
    bool contains(GeoPoint p, double eps = kEps) const {
        return p.x >= min.x - eps && p.x <= max.x + eps && p.y >= min.y - eps &&
               p.y <= max.y + eps;
    }
};

// Closed polygon stored as an open ring (first vertex != last). Orientation
// is canonicalized to counter-clockwise on construction. Degenerate
// (zero-area) rings are storable so regression outputs always have a home;
// area/IoU operations reject them where their contracts say so.
class Polygon {
  public:
    Polygon() = default;  // empty, invalid until assigned
    explicit Polygon(std::vector<GeoPoint> vertices);

    const std::vector<GeoPoint>& vertices() const { return verts_; }
    size_t size() const { return verts_.size(); }
    bool empty() const { return verts_.empty(); }
    const GeoPoint& operator[](size_t i) const { return verts_[i]; }

    BBox bounds() const;
    GeoPoint centroid() const;  // area centroid; vertex mean when degenerate
    bool is_simple() const;     // no two non-adjacent edges intersect

    Polygon translated(GeoPoint d) const;
    Polygon scaled(double s, GeoPoint about) const;

  private:
    std::vector<GeoPoint> verts_;
};

enum class PoiKind { core, entrance, generic };

struct POI {
    std::string id;
    GeoPoint location;
    int category = 0;  // taxonomy code, 0..19
    PoiKind kind = PoiKind::generic;
    std::string parent_id;  // empty = none

    void validate() const;
};

extern const char* const kCategoryNames[20];

struct RoadNetwork {
    std::vector<GeoPoint> nodes;
    std::vector<std::pair<int, int>> segments;  // node index pairs

    void validate() const;
    bool empty() const { return segments.empty(); }
};

// --- operations ---------------------------------------------------------

// Shoelace area, orientation independent. Errors on rings with fewer than
// three distinct vertices; collinear-but-distinct rings return 0.
double polygon_area(const Polygon& p);

double signed_area(const std::vector<GeoPoint>& ring);

// Even-odd ray crossing; points on the boundary count as inside (entrance
// POIs sit exactly on fences).
bool point_in_polygon(GeoPoint q, const Polygon& p);

bool point_on_boundary(GeoPoint q, const Polygon& p, double eps = kEps);

// Intersection area of two simple polygons via signed triangle
// decomposition; convexity is not assumed.
double polygon_intersection_area(const Polygon& a, const Polygon& b);

// area(a n b) / area(a u b). Errors on degenerate (near-zero-area) input.
double polygon_iou(const Polygon& a, const Polygon& b);

struct IouStats {
    double mean_iou = 0.0;
    double high_iou_rate = 0.0;  // fraction of pairs with IoU > 0.75
    std::vector<double> per_pair;
};

// IoU > this counts as "high" quality.
constexpr double kHighIouThreshold = 0.75;

IouStats mean_iou(const std::vector<std::pair<Polygon, Polygon>>& pairs);

// Minimal convex polygon containing all points (monotone chain), CCW.
// Errors on fewer than three points or an all-collinear set.
Polygon convex_hull(const std::vector<GeoPoint>& points);

// Geo <-> pixel affine map for a raster of `width` x `height` pixels covering
// `bbox`. Image-space origin is the top-left: the bbox min corner maps to
// pixel (0, height) and the max corner to (width, 0); x grows right, y grows
// down. Points outside the bbox map outside the raster range.
GeoPoint geo_to_pixel(GeoPoint pt, const BBox& bbox, double width, double height);
GeoPoint pixel_to_geo(GeoPoint px, const BBox& bbox, double width, double height);

}  // namespace aoitr::geo
