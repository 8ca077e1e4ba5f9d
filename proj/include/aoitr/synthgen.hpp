#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aoitr/dataset.hpp"
#include "aoitr/geometry.hpp"
#include "aoitr/rng.hpp"

namespace aoitr::synth {

using data::GeoSample;
using data::LBSPoint;
using geo::BBox;
using geo::GeoPoint;
using geo::Polygon;

// World-clock origin: a Monday 00:00 UTC. weekday(t) below yields 0 for it.
constexpr std::int64_t kT0 = 1716768000;

inline int weekday_of(std::int64_t t) { return int((t / 86400 + 3) % 7); }  // 0 = Monday
inline int hour_of(std::int64_t t) { return int((t / 3600) % 24); }

struct WorldConfig {
    std::uint64_t seed = 1;
    int samples = 100;
    std::vector<int> categories = {14, 13, 8, 9};  // taxonomy codes
    std::vector<double> category_weights;  // empty: exact round-robin balance

    // Shape family: star polygons built from radial perturbation of a circle.
    int min_vertices = 9;
    int max_vertices = 16;
    double irregularity = 0.25;       // radial jitter as a fraction of the mean radius
    double notch_fraction = 0.25;     // share of shapes with a deep bite (non-star core views)
    double min_area_ratio = 0.35;     // AOI area over road-cell area
    double max_area_ratio = 0.65;

    int road_cells = 3;          // lattice density: road_cells x road_cells blocks
    double open_fraction = 0.25; // share of scenes whose roads form no loop

    int lbs_points = 96;
    int logistics_records = 12;
    double leakage = 0.1;  // LBS points landing outside the polygon
    double negative_fraction = 0.0;

    int patch_px = 128;           // square raster size
    double window_deg = 0.006;    // raster window side, degrees
    double scene_span_deg = 0.015;

    void validate() const;
};

// 24 hourly activity weights (unnormalized). Known categories get distinct
// peaks (residential evening-heavy, school/industrial daytime); anything
// else falls back to a uniform profile.
std::array<double, 24> category_profile(int category);

// Flat paint colors for the raster; tests compare region means against them.
std::array<std::uint8_t, 3> category_base_color(int category);
constexpr std::array<std::uint8_t, 3> kBackgroundColor = {205, 215, 195};
constexpr std::array<std::uint8_t, 3> kRoadColor = {52, 52, 56};
constexpr int kTextureNoise = 12;  // uniform +-noise added per pixel (not on roads)

enum class CorruptMode { expired, low_iou };

// Deterministic per seed; sample i draws from an independent substream, so
// the sequence is stable under any generation order.
std::vector<GeoSample> generate_world(const WorldConfig& cfg);

// Category texture inside the truth polygon, roads overdrawn, noisy
// background. Deterministic in the sample content alone.
img::RasterPatch render_scene(const GeoSample& s, int patch_px, double window_deg);

// Timestamped activity points: hours from the category profile, locations
// inside the polygon except for a `leakage` share pushed outside.
std::vector<LBSPoint> sample_lbs(const GeoSample& s, const WorldConfig& cfg, Rng& rng);

// Negative construction. "expired": the library polygon goes stale - truth
// and the activity around it move away while `candidate` keeps the old
// outline. "low_iou": a displaced candidate guaranteed IoU < 0.75 vs truth.
GeoSample corrupt_sample(const GeoSample& s, CorruptMode mode, Rng& rng);

}  // namespace aoitr::synth
