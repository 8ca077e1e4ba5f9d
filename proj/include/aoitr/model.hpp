#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "aoitr/dataset.hpp"
#include "aoitr/imagery.hpp"
#include "aoitr/nn.hpp"
#include "aoitr/sampling.hpp"

namespace aoitr::model {

using data::GeoSample;
using geo::BBox;
using geo::GeoPoint;
using geo::POI;
using geo::Polygon;
using img::QueryMapOut;
using img::RasterPatch;
using img::TokenGridOut;
using nn::Binder;
using nn::Mat;
using nn::ParamStore;
using nn::Tape;
using nn::Var;
using sampling::ReferencePoints;

// Modality drops for the ablation study. The query drops zero the matching
// content query inside the forward pass; road_refs swaps the reference
// assembly for the plain bbox fallback ring; imagery replaces the patch with
// seeded noise (geometry intact, texture gone).
enum class Ablation { none, core_location, category, road_refs, imagery };

const char* ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& s);

struct ModelConfig {
    int n_points = 24;
    int d_model = 64;
    int enc_layers = 2;
    int dec_layers = 2;
    int heads = 4;
    int c_mid = 16;  // conv stem mid width
    double lr = 1e-3;
    int batch = 16;
    int epochs = 10;
    int threads = 1;
    std::uint64_t seed = 1;
    Ablation ablation = Ablation::none;

    void validate() const;  // n >= 3, d divisible by heads and by 4, positives
};

struct ModelParams {
    ModelConfig cfg;
    ParamStore store;
    nn::ConvStem tok_stem, qry_stem;
    int pc_table = -1;  // 20 x d, one learnable row per taxonomy category
    std::vector<nn::EncoderBlockParams> enc;
    std::vector<nn::DecoderBlockParams> dec;
    nn::LayerNormParams enc_ln, dec_ln;  // final norms, applied when layers > 0
    int head_init_w = -1, head_init_b = -1;  // d x 2, 1 x 2
    int head_res_w = -1, head_res_b = -1;    // d x 2n, 1 x 2n
};

ModelParams make_model(const ModelConfig& cfg);

// On-tape multimodal content queries.
struct ContentQueries {
    Var P_L;  // 1 x d, bilinear-sampled at the core POI
    Var P_C;  // 1 x d, learnable category row
    Var R_L;  // n x d, bilinear-sampled at the reference points
};

// Detached prediction, normalized patch coordinates.
struct PolygonPrediction {
    Mat p_init, p_res, p_hat;  // n x 2 each; p_hat = p_init + p_res exactly
};

struct ForwardOut {
    PolygonPrediction pred;
    Mat o_cat;  // 1 x d decoder category output, consumed by reliability
};

// Normalized patch coordinates: u right, v down (image row order).
Mat normalize_points(const std::vector<GeoPoint>& pts, const BBox& bbox);
std::vector<GeoPoint> denormalize_points(const Mat& uv, const BBox& bbox);

Var bilinear_sample(Tape& t, const QueryMapOut& fmap, Var pts);

ContentQueries build_content_queries(Tape& t, Binder& b, const ModelParams& mp,
                                     const POI& core, const ReferencePoints& refs,
                                     const QueryMapOut& fmap, const BBox& patch_bbox,
                                     int patch_h, int patch_w);

Var encode(Tape& t, Binder& b, const ModelParams& mp, const TokenGridOut& tokens);

// Positional queries: sinusoidal encodings of the n reference locations plus
// the core location (category token), normalized to the patch.
Mat query_posenc(const ReferencePoints& refs, const POI& core, const BBox& patch_bbox,
                 int d);

struct DecodeOut {
    Var O_ref;  // n x d
    Var O_cat;  // 1 x d
};
DecodeOut decode(Tape& t, Binder& b, const ModelParams& mp, const ContentQueries& q,
                 const Mat& posenc, Var memory);

struct HeadOut {
    Var p_init, p_res, p_hat;  // n x 2
};
HeadOut regression_head(Tape& t, Binder& b, const ModelParams& mp, Var O_ref, Var O_cat);

Var l1_loss(Tape& t, Var p_hat, const Mat& gt);

// Ground truth + priors for one sample, ready for the tape. `patch` points
// into the sample except under the imagery ablation, where `owned` holds the
// noise raster (shared so copies stay valid).
struct ModelInput {
    POI core;
    ReferencePoints refs;
    Mat gt;  // n x 2 normalized boundary sample
    const RasterPatch* patch = nullptr;
    std::shared_ptr<const RasterPatch> owned;
};
ModelInput make_input(const GeoSample& s, int n_points);
ModelInput make_input(const GeoSample& s, const ModelConfig& cfg);

ForwardOut forward(const ModelParams& mp, const ModelInput& in);

struct EvalResult {
    double miou = 0.0;
    double high_iou_rate = 0.0;  // share of samples with IoU > threshold
    std::map<int, std::pair<int, double>> per_category;  // cat -> (count, mIoU)
    std::vector<double> per_sample;
};
EvalResult evaluate(const std::vector<GeoSample>& ds, const ModelParams& mp);

struct EpochLog {
    int epoch = 0;
    double loss = 0.0, miou = 0.0, high_iou = 0.0;
};

// Adaptive-moment training of the L1 objective over reliable samples.
// eval_ds drives the per-epoch mIoU columns (pass the training set to watch
// fit). Writes the metric log to csv_path when nonempty. Aborts on
// non-finite loss.
std::vector<EpochLog> train(ModelParams& mp, const std::vector<GeoSample>& train_ds,
                            const std::vector<GeoSample>& eval_ds,
                            const std::string& csv_path = "");

void save_model(const std::string& path, const ModelParams& mp);
ModelParams load_model(const std::string& path);

// Chunked index parallelism; results must be written to per-index slots so
// reductions stay order-deterministic for any thread count.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace aoitr::model
