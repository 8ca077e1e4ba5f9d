#include "aoitr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "aoitr/error.hpp"

namespace aoitr::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
    return h;
}

GeoPoint scene_center(int i) {
    return {116.0 + (i % 100) * 0.02, 30.0 + (i / 100) * 0.02};
}

BBox polygon_bbox(const Polygon& p) {
    GeoPoint lo = p.vertices()[0], hi = p.vertices()[0];
    for (const GeoPoint& v : p.vertices()) {
        lo.x = std::min(lo.x, v.x);
        lo.y = std::min(lo.y, v.y);
        hi.x = std::max(hi.x, v.x);
        hi.y = std::max(hi.y, v.y);
    }
    return BBox(lo, hi);
}

bool strictly_inside(GeoPoint p, const Polygon& poly) {
    return geo::point_in_polygon(p, poly) && !geo::point_on_boundary(p, poly);
}

// Star polygon: radial jitter around mean_r, one smoothing pass, optional
// deep bite over a short arc. Radii are capped at max_r so the shape stays
// inside its road block and raster window.
Polygon star_polygon(GeoPoint center, double mean_r, int verts, double irregularity,
                     bool notch, double max_r, Rng& rng, double* notch_angle) {
    std::vector<double> radii(verts);
    for (double& r : radii) r = mean_r * (1.0 + irregularity * rng.uniform(-1.0, 1.0));
    std::vector<double> sm(verts);
    for (int k = 0; k < verts; ++k)
        sm[k] = 0.25 * radii[(k + verts - 1) % verts] + 0.5 * radii[k] +
                0.25 * radii[(k + 1) % verts];
    const double phase = rng.uniform(0.0, 2.0 * kPi / verts);
    *notch_angle = 0.0;
    if (notch) {
        const int at = int(rng.uniform_int(std::uint64_t(verts)));
        const int len = std::max(2, verts / 6);
        for (int j = 0; j < len; ++j) sm[(at + j) % verts] *= 0.35;
        *notch_angle = phase + 2.0 * kPi * (at + 0.5 * (len - 1)) / verts;
    }
    std::vector<GeoPoint> ring(verts);
    for (int k = 0; k < verts; ++k) {
        const double r = std::min(sm[k], max_r);
        const double a = phase + 2.0 * kPi * k / verts;
        ring[size_t(k)] = {center.x + r * std::cos(a), center.y + r * std::sin(a)};
    }
    return Polygon(std::move(ring));
}

// Full lattice, or an open neighborhood: every edge touching the AOI block's
// corners is torn out, so the roads left (far scene borders) neither reach
// the raster window nor close any loop around the core.
geo::RoadNetwork lattice_roads(const BBox& scene, int k, int ci, bool open) {
    geo::RoadNetwork r;
    const int n = k + 1;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            r.nodes.push_back({scene.min.x + scene.width() * i / k,
                               scene.min.y + scene.height() * j / k});
    auto blocked = [&](int at) {
        const int i = at % n, j = at / n;
        return open && (i == ci || i == ci + 1) && (j == ci || j == ci + 1);
    };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const int at = j * n + i;
            if (i + 1 < n && !blocked(at) && !blocked(at + 1)) r.segments.push_back({at, at + 1});
            if (j + 1 < n && !blocked(at) && !blocked(at + n)) r.segments.push_back({at, at + n});
        }
    return r;
}

GeoPoint sample_in_bbox(const BBox& b, Rng& rng) {
    return {rng.uniform(b.min.x, b.max.x), rng.uniform(b.min.y, b.max.y)};
}

GeoPoint sample_inside(const Polygon& p, Rng& rng) {
    const BBox b = polygon_bbox(p);
    for (int tries = 0; tries < 4096; ++tries) {
        const GeoPoint g = sample_in_bbox(b, rng);
        if (strictly_inside(g, p)) return g;
    }
    fail("sample_inside: polygon too thin to hit");
}

GeoSample make_positive(const WorldConfig& cfg, int index, Rng& rng) {
    GeoSample s;
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%06d", index);
    s.id = buf;

    const GeoPoint sc = scene_center(index);
    const double half = cfg.scene_span_deg / 2;
    const BBox scene({sc.x - half, sc.y - half}, {sc.x + half, sc.y + half});
    const int k = cfg.road_cells;
    const bool open = rng.uniform01() < cfg.open_fraction;
    s.roads = lattice_roads(scene, k, k / 2, open);

    int cat;
    if (cfg.category_weights.empty()) {
        cat = cfg.categories[size_t(index) % cfg.categories.size()];
    } else {
        cat = cfg.categories[rng.weighted_choice(cfg.category_weights)];
    }

    // AOI block: the lattice cell at the scene middle, so the raster window
    // (centered on the core) always sees the surrounding roads.
    const double cw = cfg.scene_span_deg / k;
    const int ci = k / 2;
    const GeoPoint cell_center{scene.min.x + (ci + 0.5) * cw,
                               scene.min.y + (ci + 0.5) * cw};
    const GeoPoint aoi_center{cell_center.x + rng.uniform(-0.04, 0.04) * cw,
                              cell_center.y + rng.uniform(-0.04, 0.04) * cw};

    const double ratio = rng.uniform(cfg.min_area_ratio, cfg.max_area_ratio);
    const double mean_r = cw * std::sqrt(ratio / kPi);
    const double cap = std::min(0.44 * cw, 0.365 * cfg.window_deg);
    const int verts =
        cfg.min_vertices + int(rng.uniform_int(std::uint64_t(cfg.max_vertices - cfg.min_vertices + 1)));
    const bool notch = rng.uniform01() < cfg.notch_fraction;
    double notch_angle = 0.0;
    s.truth = star_polygon(aoi_center, std::min(mean_r, cap), verts, cfg.irregularity,
                           notch, cap, rng, &notch_angle);
    s.candidate = s.truth;

    double min_r = cap;
    for (const GeoPoint& v : s.truth.vertices())
        min_r = std::min(min_r, geo::dist(aoi_center, v));
    GeoPoint core_pos;
    if (notch) {
        // away from the bite, where the kernel of the star shrank
        core_pos = {aoi_center.x + 0.3 * mean_r * std::cos(notch_angle + kPi),
                    aoi_center.y + 0.3 * mean_r * std::sin(notch_angle + kPi)};
    } else {
        const double a = rng.uniform(0.0, 2.0 * kPi);
        const double d = rng.uniform(0.0, 0.3) * min_r;
        core_pos = {aoi_center.x + d * std::cos(a), aoi_center.y + d * std::sin(a)};
    }
    for (int tries = 0; tries < 8 && !strictly_inside(core_pos, s.truth); ++tries)
        core_pos = {aoi_center.x + (core_pos.x - aoi_center.x) * 0.5,
                    aoi_center.y + (core_pos.y - aoi_center.y) * 0.5};
    if (!strictly_inside(core_pos, s.truth)) core_pos = aoi_center;
    s.core = {s.id + "-core", core_pos, cat, geo::PoiKind::core, ""};

    const auto& ring = s.truth.vertices();
    const int n_ent = 1 + int(rng.uniform_int(3));
    for (int e = 0; e < n_ent; ++e) {
        const size_t edge = rng.uniform_int(ring.size());
        const GeoPoint a = ring[edge], b = ring[(edge + 1) % ring.size()];
        const double t = rng.uniform(0.25, 0.75);
        geo::POI p{s.id + "-e" + std::to_string(e),
                   {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t},
                   cat,
                   geo::PoiKind::entrance,
                   s.core.id};
        s.entrances.push_back(p);
    }

    const int n_sub = 3 + int(rng.uniform_int(4));
    for (int p = 0; p < n_sub; ++p)
        s.scene_pois.push_back({s.id + "-p" + std::to_string(p), sample_inside(s.truth, rng),
                                cat, geo::PoiKind::generic, s.core.id});

    s.raster = render_scene(s, cfg.patch_px, cfg.window_deg);
    for (const GeoPoint& v : s.truth.vertices())
        require(s.raster.bbox.contains(v), "generated AOI leaks out of its raster window");

    s.lbs = sample_lbs(s, cfg, rng);
    for (int l = 0; l < cfg.logistics_records; ++l) {
        const size_t pick = rng.uniform_int(s.entrances.size() + s.scene_pois.size());
        const geo::POI& p = pick < s.entrances.size()
                                ? s.entrances[pick]
                                : s.scene_pois[pick - s.entrances.size()];
        s.logistics.push_back({p.id, p.location});
    }

    s.label = {true, data::Provenance::library_positive};
    return s;
}

}  // namespace

void WorldConfig::validate() const {
    require(samples >= 0, "samples must be nonnegative");
    require(!categories.empty(), "need at least one category");
    for (int c : categories) require(c >= 0 && c < 20, "category code out of range");
    require(category_weights.empty() || category_weights.size() == categories.size(),
            "category_weights must match categories");
    for (double w : category_weights) require(w >= 0.0, "negative category weight");
    if (!category_weights.empty()) {
        const double sum = std::accumulate(category_weights.begin(), category_weights.end(), 0.0);
        require(std::abs(sum - 1.0) <= 1e-9, "category weights must sum to 1");
    }
    require(min_vertices >= 5 && max_vertices >= min_vertices && max_vertices <= 64,
            "vertex count range infeasible");
    require(irregularity >= 0.0 && irregularity <= 0.5, "irregularity outside [0, 0.5]");
    require(notch_fraction >= 0.0 && notch_fraction <= 1.0, "notch_fraction outside [0,1]");
    require(min_area_ratio > 0.0 && max_area_ratio >= min_area_ratio && max_area_ratio <= 0.9,
            "area ratio range infeasible");
    require(road_cells >= 1 && road_cells <= 8, "road_cells outside [1, 8]");
    require(open_fraction >= 0.0 && open_fraction <= 1.0, "open_fraction outside [0,1]");
    require(lbs_points >= 0 && logistics_records >= 0, "negative sample sizes");
    require(leakage >= 0.0 && leakage < 1.0, "leakage outside [0,1)");
    require(negative_fraction >= 0.0 && negative_fraction <= 1.0,
            "negative_fraction outside [0,1]");
    require(patch_px >= 16 && patch_px <= 1024, "patch_px outside [16, 1024]");
    require(window_deg > 0.0 && scene_span_deg > 0.0, "degenerate extents");
    // keeps the raster window inside the scene for any core in the middle block
    require(window_deg <= scene_span_deg / 2, "window too large for the scene");
}

std::array<double, 24> category_profile(int category) {
    std::array<double, 24> w;
    w.fill(1.0);
    switch (category) {
        case 14:  // residential: evening and night heavy
            for (int h = 0; h < 24; ++h) {
                if (h >= 18) w[h] = 4.0;
                else if (h < 6) w[h] = 3.0;
                else if (h < 8) w[h] = 2.0;
                else if (h == 8 || h == 17) w[h] = 1.0;
                else w[h] = 0.5;
            }
            break;
        case 13:  // school: class hours
            for (int h = 0; h < 24; ++h)
                w[h] = (h >= 8 && h <= 17) ? (h == 10 ? 5.0 : 3.0) : 0.4;
            break;
        case 8:  // industrial park: work shift
            for (int h = 0; h < 24; ++h)
                w[h] = (h >= 8 && h <= 19) ? (h == 14 ? 4.5 : 3.0) : 0.5;
            break;
        case 9:  // parking: commute peaks, evening one on top
            for (int h = 0; h < 24; ++h) {
                w[h] = 0.8;
                if (h >= 7 && h <= 10) w[h] = 3.0;
                if (h >= 16 && h <= 19) w[h] = 2.8;
                if (h == 17) w[h] = 3.5;
            }
            break;
        default:
            break;  // uniform fallback
    }
    return w;
}

std::array<std::uint8_t, 3> category_base_color(int category) {
    switch (category) {
        case 14: return {135, 110, 100};  // residential roofs
        case 13: return {170, 160, 140};  // school yards
        case 8: return {90, 85, 90};      // industrial sheds
        case 9: return {105, 105, 110};   // parking asphalt
        default: return {150, 140, 130};
    }
}

img::RasterPatch render_scene(const GeoSample& s, int patch_px, double window_deg) {
    require(patch_px > 0 && window_deg > 0.0, "render_scene: bad raster geometry");
    require(s.truth.size() >= 3, "render_scene: sample has no truth polygon");
    const GeoPoint c = s.core.location;
    const double half = window_deg / 2;
    const BBox bb({c.x - half, c.y - half}, {c.x + half, c.y + half});
    img::RasterPatch out(patch_px, patch_px, bb);
    out.source_tiles = {"synthetic:" + s.id};

    const auto base = category_base_color(s.core.category);
    const double degpx = window_deg / patch_px;
    Rng noise(fnv1a(s.id) ^ 0x72656e646572ull);
    for (int y = 0; y < patch_px; ++y) {
        for (int x = 0; x < patch_px; ++x) {
            const GeoPoint g =
                geo::pixel_to_geo({x + 0.5, y + 0.5}, bb, patch_px, patch_px);
            bool road = false;
            for (const auto& seg : s.roads.segments) {
                if (geo::dist_point_segment(g, s.roads.nodes[size_t(seg.first)],
                                            s.roads.nodes[size_t(seg.second)]) <= degpx) {
                    road = true;
                    break;
                }
            }
            if (road) {
                for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = kRoadColor[size_t(ch)];
                continue;
            }
            const auto& col = geo::point_in_polygon(g, s.truth) ? base : kBackgroundColor;
            const int n = int(noise.uniform_int(2 * kTextureNoise + 1)) - kTextureNoise;
            for (int ch = 0; ch < 3; ++ch)
                out.at(y, x, ch) = std::uint8_t(std::clamp(int(col[size_t(ch)]) + n, 0, 255));
        }
    }
    return out;
}

std::vector<LBSPoint> sample_lbs(const GeoSample& s, const WorldConfig& cfg, Rng& rng) {
    require(s.truth.size() >= 3, "sample_lbs: sample has no truth polygon");
    require(s.raster.h > 0, "sample_lbs: raster window not set yet");
    const auto prof = category_profile(s.core.category);
    const std::vector<double> w(prof.begin(), prof.end());
    const BBox tb = polygon_bbox(s.truth);
    const BBox pb = s.raster.bbox;

    std::vector<LBSPoint> out;
    out.reserve(size_t(cfg.lbs_points));
    for (int i = 0; i < cfg.lbs_points; ++i) {
        LBSPoint p;
        const int day = int(rng.uniform_int(7));
        const int hour = int(rng.weighted_choice(w));
        const int sec = int(rng.uniform_int(3600));
        p.t = kT0 + std::int64_t(day) * 86400 + std::int64_t(hour) * 3600 + sec;

        const bool want_inside = rng.uniform01() >= cfg.leakage;
        bool placed = false;
        for (int tries = 0; tries < 4096 && !placed; ++tries) {
            const GeoPoint g = sample_in_bbox(want_inside ? tb : pb, rng);
            if (geo::point_in_polygon(g, s.truth) == want_inside) {
                p.location = g;
                placed = true;
            }
        }
        require(placed, "sample_lbs: rejection sampling starved");
        out.push_back(p);
    }
    return out;
}

GeoSample corrupt_sample(const GeoSample& s, CorruptMode mode, Rng& rng) {
    require(s.label.reliable, "corrupt_sample wants a positive sample");
    GeoSample out = s;
    const BBox tb = polygon_bbox(s.truth);

    if (mode == CorruptMode::low_iou) {
        const double sx = rng.uniform01() < 0.5 ? 1.0 : -1.0;
        const double sy = rng.uniform01() < 0.5 ? 1.0 : -1.0;
        Polygon cand =
            s.truth.translated({0.45 * tb.width() * sx, 0.25 * tb.height() * sy});
        if (geo::polygon_iou(cand, s.truth) >= 0.75)
            cand = s.truth.scaled(0.55, s.truth.centroid());
        require(geo::polygon_iou(cand, s.truth) < 0.75,
                "corrupt_sample: could not push IoU below the threshold");
        out.candidate = cand;
        out.label = {false, data::Provenance::low_iou_negative};
        return out;
    }

    // expired: the whole compound (truth + activity) moved one bbox-width
    // away; the candidate keeps the stale outline, the core its old listing.
    const double sx = rng.uniform01() < 0.5 ? 1.0 : -1.0;
    const GeoPoint d{1.1 * tb.width() * sx, 0.0};
    out.truth = s.truth.translated(d);
    out.candidate = s.truth;
    for (auto& e : out.entrances) e.location = e.location + d;
    for (auto& p : out.scene_pois) p.location = p.location + d;
    for (auto& l : out.logistics) l.location = l.location + d;
    for (auto& q : out.lbs) q.location = q.location + d;
    out.label = {false, data::Provenance::expired_negative};
    return out;
}

std::vector<GeoSample> generate_world(const WorldConfig& cfg) {
    cfg.validate();
    const Rng base(cfg.seed);
    std::vector<GeoSample> out;
    out.reserve(size_t(cfg.samples));
    for (int i = 0; i < cfg.samples; ++i) {
        Rng rng = base.fork(std::uint64_t(i));
        GeoSample s = make_positive(cfg, i, rng);
        if (rng.uniform01() < cfg.negative_fraction) {
            const CorruptMode mode =
                rng.uniform01() < 0.5 ? CorruptMode::expired : CorruptMode::low_iou;
            s = corrupt_sample(s, mode, rng);
            s.raster = render_scene(s, cfg.patch_px, cfg.window_deg);
        }
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace aoitr::synth
