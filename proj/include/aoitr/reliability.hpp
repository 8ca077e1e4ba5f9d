#pragma once

#include <string>
#include <vector>

#include "aoitr/dataset.hpp"
#include "aoitr/model.hpp"
#include "aoitr/nn.hpp"
#include "aoitr/rng.hpp"

namespace aoitr::rel {

using data::GeoSample;
using data::LBSPoint;
using data::LogisticsRecord;
using geo::POI;
using geo::Polygon;
using nn::Mat;

// Share of subsidiary locations (POIs as a set, logistics as a multiset so
// frequently used POIs weigh more) that actually fall inside the polygon.
// Boundary counts as inside. Throws when both sets are empty.
double feature_partial(const std::vector<POI>& sub_pois,
                       const std::vector<LogisticsRecord>& logistics, const Polygon& p);

struct BetaResult {
    double value = 0.0;
    bool degenerate = false;  // fewer than 3 non-collinear subsidiary POIs
};
// IoU between the convex hull of the subsidiary POIs and the polygon.
BetaResult feature_beta(const std::vector<POI>& sub_pois, const Polygon& p);

// Count of core-kind POIs of the given category inside the polygon.
int feature_delta(const std::vector<POI>& pois, int category, const Polygon& p);

struct FlowHistogram {
    Mat d;  // 7 x 24, rows Monday..Sunday; sums to 1 unless empty
    bool empty = false;
};
// Bucket inside-polygon activity by (weekday, hour) in a fixed per-world
// timezone (offset in hours from the synthetic clock).
FlowHistogram flow_histogram(const std::vector<LBSPoint>& points, const Polygon& p,
                             int tz_offset_hours = 0);

struct BasicFeatures {
    int category = 0;      // one-hot over 20 codes when flattened
    double area_norm = 0;  // polygon area over patch bbox area
    double bearing = 0;    // radians, centroid -> core, east = 0 (cos/sin when flattened)
    double offset_norm = 0;  // centroid->core distance over sqrt(polygon area)
};
BasicFeatures basic_features(const GeoSample& s, const Polygon& p);

// Assembled classifier input, fixed documented order:
//   [0..19]   category one-hot
//   [20]      normalized polygon area
//   [21..22]  bearing cos, sin
//   [23]      normalized core offset
//   [24]      partial rate
//   [25..26]  beta, beta-degenerate flag
//   [27]      delta count
//   [28]      flow-empty flag
//   [29..196] flow histogram, row-major 7x24
//   [197..]   image embedding (decoder category output, d_model wide)
constexpr int kFeatureBase = 197;
std::vector<double> extract_features(const model::ModelParams& mp, const GeoSample& s);

struct CascadeConfig {
    int in_dim = 0;  // set from the data
    int h1 = 64, h2 = 16;
    double lr = 1e-3;
    int batch = 32;
    int epochs = 80;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Cascade {
    CascadeConfig cfg;
    nn::ParamStore store;
};

Cascade make_cascade(const CascadeConfig& cfg);

// Logits for a row-per-sample feature matrix.
nn::Var cascade_logits(nn::Tape& t, nn::Binder& b, const Cascade& c, const Mat& x);

// Seeded minibatch training; throws if only one class is present.
// Returns the mean training loss per epoch.
std::vector<double> cascade_train(Cascade& c, const std::vector<std::vector<double>>& X,
                                  const std::vector<int>& y);

// Sigmoid scores, one per row of X.
std::vector<double> cascade_scores(const Cascade& c,
                                   const std::vector<std::vector<double>>& X);

// Rank-based AUC with tie averaging; throws on single-class input.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct PRPoint {
    double threshold = 0, precision = 0, recall = 0;
};
struct PRResult {
    bool attainable = false;
    PRPoint chosen;               // lowest threshold meeting the target (max recall),
                                  // or the max-precision point when unattainable
    std::vector<PRPoint> curve;   // one point per distinct score cut, descending
};
PRResult pr_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                      double target_precision = 0.80);

// CSV exports: feature matrix (documented column order + label) and PR curve.
void write_feature_csv(const std::string& path, const std::vector<std::vector<double>>& X,
                       const std::vector<int>& y, int embed_dim);
void write_pr_csv(const std::string& path, const PRResult& pr);

}  // namespace aoitr::rel
