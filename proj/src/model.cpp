#include "aoitr/model.hpp"

#include <atomic>
#include <optional>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "aoitr/error.hpp"

namespace aoitr::model {

using nlohmann::json;

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::none: return "none";
        case Ablation::core_location: return "core_location";
        case Ablation::category: return "category";
        case Ablation::road_refs: return "road_refs";
        case Ablation::imagery: return "imagery";
    }
    fail("unknown ablation value");
}

Ablation ablation_from_name(const std::string& s) {
    for (Ablation a : {Ablation::none, Ablation::core_location, Ablation::category,
                       Ablation::road_refs, Ablation::imagery})
        if (s == ablation_name(a)) return a;
    fail("unknown ablation name: " + s);
}

void ModelConfig::validate() const {
    require(n_points >= 3, "n_points must be at least 3");
    require(d_model > 0 && heads > 0 && d_model % heads == 0,
            "d_model must be a positive multiple of the head count");
    require(d_model % 4 == 0, "d_model must be divisible by 4 for 2-d posenc");
    require(enc_layers >= 0 && dec_layers >= 0, "layer counts must be nonnegative");
    require(c_mid > 0, "c_mid must be positive");
    require(lr >= 0.0 && std::isfinite(lr), "lr must be finite and nonnegative");
    require(batch > 0 && epochs >= 0, "batch must be positive, epochs nonnegative");
    require(threads >= 1, "threads must be at least 1");
}

ModelParams make_model(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams mp;
    mp.cfg = cfg;
    Rng rng(cfg.seed);
    const int d = cfg.d_model;
    mp.tok_stem = nn::make_conv_stem(mp.store, rng, "tok_stem", 3, cfg.c_mid, d);
    mp.qry_stem = nn::make_conv_stem(mp.store, rng, "qry_stem", 3, cfg.c_mid, d);
    mp.pc_table = mp.store.add("pc_table", nn::xavier_init(rng, 20, d, d, d));
    for (int i = 0; i < cfg.enc_layers; ++i)
        mp.enc.push_back(nn::make_encoder_block(mp.store, rng,
                                                "enc" + std::to_string(i), d, 4 * d));
    mp.enc_ln = nn::make_layernorm(mp.store, "enc_final_ln", d);
    for (int i = 0; i < cfg.dec_layers; ++i)
        mp.dec.push_back(nn::make_decoder_block(mp.store, rng,
                                                "dec" + std::to_string(i), d, 4 * d));
    mp.dec_ln = nn::make_layernorm(mp.store, "dec_final_ln", d);
    mp.head_init_w = mp.store.add("head_init_w", nn::xavier_init(rng, d, 2, d, 2));
    mp.head_init_b = mp.store.add("head_init_b", Mat(1, 2));
    mp.head_res_w = mp.store.add(
        "head_res_w", nn::xavier_init(rng, d, 2 * cfg.n_points, d, 2 * cfg.n_points));
    mp.head_res_b = mp.store.add("head_res_b", Mat(1, 2 * cfg.n_points));
    return mp;
}

Mat normalize_points(const std::vector<GeoPoint>& pts, const BBox& bbox) {
    Mat uv(int(pts.size()), 2);
    for (size_t i = 0; i < pts.size(); ++i) {
        uv.at(int(i), 0) = (pts[i].x - bbox.min.x) / bbox.width();
        uv.at(int(i), 1) = (bbox.max.y - pts[i].y) / bbox.height();
    }
    return uv;
}

std::vector<GeoPoint> denormalize_points(const Mat& uv, const BBox& bbox) {
    require(uv.cols == 2, "uv must be n x 2");
    std::vector<GeoPoint> pts(size_t(uv.rows));
    for (int i = 0; i < uv.rows; ++i) {
        pts[size_t(i)] = GeoPoint(bbox.min.x + uv.at(i, 0) * bbox.width(),
                                  bbox.max.y - uv.at(i, 1) * bbox.height());
    }
    return pts;
}

Var bilinear_sample(Tape& t, const QueryMapOut& fmap, Var pts) {
    return t.bilinear(fmap.features, fmap.gh, fmap.gw, pts);
}

ContentQueries build_content_queries(Tape& t, Binder& b, const ModelParams& mp,
                                     const POI& core, const ReferencePoints& refs,
                                     const QueryMapOut& fmap, const BBox& patch_bbox,
                                     int patch_h, int patch_w) {
    core.validate();
    const int n = mp.cfg.n_points;
    require(int(refs.size()) == n, "reference count does not match n_points");

    Mat core_pt(1, 2);
    {
        auto [fx, fy] = img::geo_to_feature(core.location, patch_bbox, patch_h,
                                            patch_w, fmap.gh, fmap.gw);
        core_pt.v = {fx, fy};
    }
    Mat ref_pts(n, 2);
    for (int k = 0; k < n; ++k) {
        auto [fx, fy] = img::geo_to_feature(refs.points[size_t(k)], patch_bbox,
                                            patch_h, patch_w, fmap.gh, fmap.gw);
        ref_pts.at(k, 0) = fx;
        ref_pts.at(k, 1) = fy;
    }

    ContentQueries q;
    const int d = mp.cfg.d_model;
    q.P_L = mp.cfg.ablation == Ablation::core_location
                ? t.leaf(Mat(1, d))
                : bilinear_sample(t, fmap, t.leaf(core_pt));
    q.R_L = bilinear_sample(t, fmap, t.leaf(ref_pts));
    q.P_C = mp.cfg.ablation == Ablation::category
                ? t.leaf(Mat(1, d))
                : t.slice_rows(b[mp.pc_table], core.category, core.category + 1);
    return q;
}

Var encode(Tape& t, Binder& b, const ModelParams& mp, const TokenGridOut& tokens) {
    require(t.val(tokens.tokens).cols == mp.cfg.d_model, "token width != d_model");
    Var x = t.add(tokens.tokens, t.leaf(tokens.posenc));
    for (const auto& blk : mp.enc) x = nn::encoder_block(t, b, blk, x, mp.cfg.heads);
    if (!mp.enc.empty()) x = nn::layernorm(t, b, mp.enc_ln, x);
    return x;
}

Mat query_posenc(const ReferencePoints& refs, const POI& core, const BBox& patch_bbox,
                 int d) {
    std::vector<std::pair<double, double>> xy;
    xy.reserve(refs.size() + 1);
    auto norm = [&patch_bbox](GeoPoint p) {
        return std::pair<double, double>{(p.x - patch_bbox.min.x) / patch_bbox.width(),
                                         (patch_bbox.max.y - p.y) / patch_bbox.height()};
    };
    for (const GeoPoint& p : refs.points) xy.push_back(norm(p));
    xy.push_back(norm(core.location));
    return nn::posenc_points(xy, d);
}

DecodeOut decode(Tape& t, Binder& b, const ModelParams& mp, const ContentQueries& q,
                 const Mat& posenc, Var memory) {
    const int n = mp.cfg.n_points, d = mp.cfg.d_model;
    require(t.val(q.R_L).rows == n && t.val(q.R_L).cols == d, "R_L must be n x d");
    require(t.val(q.P_L).rows == 1 && t.val(q.P_C).rows == 1, "P_L/P_C must be 1 x d");
    require(posenc.rows == n + 1 && posenc.cols == d, "query posenc must be (n+1) x d");
    require(t.val(memory).cols == d, "memory width != d_model");

    Var x = t.concat_rows({t.add_rowvec(q.R_L, q.P_L), q.P_C});
    x = t.add(x, t.leaf(posenc));
    for (const auto& blk : mp.dec)
        x = nn::decoder_block(t, b, blk, x, memory, mp.cfg.heads);
    if (!mp.dec.empty()) x = nn::layernorm(t, b, mp.dec_ln, x);
    return {t.slice_rows(x, 0, n), t.slice_rows(x, n, n + 1)};
}

HeadOut regression_head(Tape& t, Binder& b, const ModelParams& mp, Var O_ref,
                        Var O_cat) {
    const int n = mp.cfg.n_points;
    require(t.val(O_ref).rows == n, "O_ref must have n rows");
    require(t.val(O_cat).rows == 1, "O_cat must have one row");
    HeadOut h;
    h.p_init = t.sigmoid(
        t.add_rowvec(t.matmul(O_ref, b[mp.head_init_w]), b[mp.head_init_b]));
    Var res = t.add_rowvec(t.matmul(O_cat, b[mp.head_res_w]), b[mp.head_res_b]);
    h.p_res = t.reshape(t.scale(t.tanh_(res), 0.25), n, 2);
    h.p_hat = t.add(h.p_init, h.p_res);
    return h;
}

Var l1_loss(Tape& t, Var p_hat, const Mat& gt) {
    require(t.val(p_hat).same_shape(gt), "prediction/ground-truth shape mismatch");
    return t.sum_all(t.abs_(t.sub(p_hat, t.leaf(gt))));
}

ModelInput make_input(const GeoSample& s, int n_points) {
    ModelConfig cfg;
    cfg.n_points = n_points;
    return make_input(s, cfg);
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
    return h;
}

}  // namespace

ModelInput make_input(const GeoSample& s, const ModelConfig& cfg) {
    ModelInput in;
    in.core = s.core;
    in.patch = &s.raster;
    const BBox& bbox = s.raster.bbox;

    if (cfg.ablation == Ablation::imagery) {
        // same window, texture replaced by seeded noise
        auto noisy = std::make_shared<RasterPatch>(s.raster);
        Rng rng(cfg.seed ^ fnv1a(s.id));
        for (auto& px : noisy->pixels) px = std::uint8_t(rng.uniform_int(256));
        in.owned = noisy;
        in.patch = in.owned.get();
    }

    const bool drop_refs = cfg.ablation == Ablation::road_refs;
    const geo::RoadNetwork no_roads;
    const std::vector<POI> no_entrances;
    auto road_refs = sampling::sample_road_refs(drop_refs ? no_roads : s.roads,
                                                s.core.location, cfg.n_points, bbox);
    in.refs = sampling::assemble_refs(road_refs, drop_refs ? no_entrances : s.entrances,
                                      bbox, s.core.location);
    auto gt = sampling::sample_boundary(s.truth, s.core.location, cfg.n_points);
    in.gt = normalize_points(gt.points, bbox);
    return in;
}

namespace {

struct TapeRun {
    Tape tape;
    std::optional<Binder> binder;
    HeadOut head;
    Var o_cat{};
    Var loss{};
};

// Shared forward graph for training and inference.
void run_model(const ModelParams& mp, const ModelInput& in, bool train, TapeRun& r) {
    require(in.patch != nullptr, "input has no raster patch");
    Tape& t = r.tape;
    r.binder.emplace(t, mp.store, train);
    Binder& b = *r.binder;
    img::TokenGridOut tokens = img::token_projection(t, b, mp.tok_stem, *in.patch);
    Var memory = encode(t, b, mp, tokens);
    img::QueryMapOut fmap = img::query_projection(t, b, mp.qry_stem, *in.patch);
    ContentQueries q = build_content_queries(t, b, mp, in.core, in.refs, fmap,
                                             in.patch->bbox, in.patch->h, in.patch->w);
    Mat posenc = query_posenc(in.refs, in.core, in.patch->bbox, mp.cfg.d_model);
    DecodeOut dec = decode(t, b, mp, q, posenc, memory);
    r.head = regression_head(t, b, mp, dec.O_ref, dec.O_cat);
    r.o_cat = dec.O_cat;
    if (train) r.loss = l1_loss(t, r.head.p_hat, in.gt);
}

}  // namespace

ForwardOut forward(const ModelParams& mp, const ModelInput& in) {
    TapeRun r;
    run_model(mp, in, false, r);
    ForwardOut out;
    out.pred.p_init = r.tape.val(r.head.p_init);
    out.pred.p_res = r.tape.val(r.head.p_res);
    out.pred.p_hat = r.tape.val(r.head.p_hat);
    out.o_cat = r.tape.val(r.o_cat);
    return out;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    const int nt = std::min(std::max(threads, 1), n);
    if (nt == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(size_t(nt));
    for (int w = 0; w < nt; ++w) {
        pool.emplace_back([&next, &fn, n] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

EvalResult evaluate(const std::vector<GeoSample>& ds, const ModelParams& mp) {
    require(!ds.empty(), "evaluate needs a nonempty dataset");
    EvalResult er;
    er.per_sample.assign(ds.size(), 0.0);
    std::vector<int> cats(ds.size(), 0);
    parallel_for(int(ds.size()), mp.cfg.threads, [&](int i) {
        const GeoSample& s = ds[size_t(i)];
        cats[size_t(i)] = s.core.category;
        ModelInput in = make_input(s, mp.cfg);
        ForwardOut fo = forward(mp, in);
        double iou = 0.0;
        try {
            Polygon pred(denormalize_points(fo.pred.p_hat, s.raster.bbox));
            iou = geo::polygon_iou(pred, s.truth);
        } catch (const Error&) {
            iou = 0.0;  // degenerate prediction scores zero
        }
        er.per_sample[size_t(i)] = iou;
    });
    double sum = 0.0;
    int high = 0;
    std::map<int, std::pair<int, double>> agg;
    for (size_t i = 0; i < ds.size(); ++i) {
        sum += er.per_sample[i];
        if (er.per_sample[i] > geo::kHighIouThreshold) ++high;
        auto& slot = agg[cats[i]];
        slot.first += 1;
        slot.second += er.per_sample[i];
    }
    er.miou = sum / double(ds.size());
    er.high_iou_rate = double(high) / double(ds.size());
    for (auto& [cat, cnt_sum] : agg)
        er.per_category[cat] = {cnt_sum.first, cnt_sum.second / cnt_sum.first};
    return er;
}

std::vector<EpochLog> train(ModelParams& mp, const std::vector<GeoSample>& train_ds,
                            const std::vector<GeoSample>& eval_ds,
                            const std::string& csv_path) {
    mp.cfg.validate();
    require(!train_ds.empty(), "train needs a nonempty dataset");
    require(!eval_ds.empty(), "train needs a nonempty eval set");

    std::vector<ModelInput> inputs;
    std::vector<size_t> usable;
    for (size_t i = 0; i < train_ds.size(); ++i) {
        if (!train_ds[i].label.reliable) continue;  // regression trains on positives
        inputs.push_back(make_input(train_ds[i], mp.cfg));
        usable.push_back(i);
    }
    require(!inputs.empty(), "no reliable samples to train on");

    Rng shuffle_rng(mp.cfg.seed ^ 0x5e5510f2u);
    nn::Adam opt({mp.cfg.lr, 0.9, 0.999, 1e-8});
    std::vector<EpochLog> logs;

    for (int epoch = 0; epoch < mp.cfg.epochs; ++epoch) {
        std::vector<size_t> order(inputs.size());
        std::iota(order.begin(), order.end(), size_t(0));
        shuffle_rng.shuffle(order);

        double epoch_loss_sum = 0.0;
        size_t seen = 0;
        int batch_no = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += size_t(mp.cfg.batch), ++batch_no) {
            const size_t bn = std::min(order.size() - b0, size_t(mp.cfg.batch));
            std::vector<double> losses(bn, 0.0);
            std::vector<std::vector<Mat>> grads(bn);
            parallel_for(int(bn), mp.cfg.threads, [&](int j) {
                TapeRun r;
                run_model(mp, inputs[order[b0 + size_t(j)]], true, r);
                r.tape.backward(r.loss);
                losses[size_t(j)] = r.tape.val(r.loss).v[0];
                r.binder->accumulate_grads(r.tape, grads[size_t(j)]);
            });
            // Reduce in slot order so the trajectory is thread-count invariant.
            std::vector<Mat> total(mp.store.size());
            for (size_t j = 0; j < bn; ++j) {
                if (!std::isfinite(losses[j])) {
                    std::ostringstream os;
                    os << "training diverged: non-finite loss at epoch " << epoch
                       << ", batch " << batch_no << ", sample "
                       << usable[order[b0 + j]] << " (lr " << mp.cfg.lr << ")";
                    fail(os.str());
                }
                for (size_t p = 0; p < total.size(); ++p) {
                    if (grads[j][p].size() == 0) continue;
                    if (total[p].size() == 0)
                        total[p] = Mat(grads[j][p].rows, grads[j][p].cols);
                    for (int k = 0; k < grads[j][p].size(); ++k)
                        total[p].v[k] += grads[j][p].v[k];
                }
                epoch_loss_sum += losses[j];
            }
            for (auto& g : total)
                for (double& x : g.v) x /= double(bn);
            opt.step(mp.store, total);
            seen += bn;
        }

        EpochLog log;
        log.epoch = epoch;
        log.loss = epoch_loss_sum / double(seen);
        EvalResult er = evaluate(eval_ds, mp);
        log.miou = er.miou;
        log.high_iou = er.high_iou_rate;
        logs.push_back(log);

        if (!csv_path.empty()) {
            std::ofstream f(csv_path);
            require(f.good(), "cannot write metric log: " + csv_path);
            f << "epoch,loss,mIoU,highIoU\n";
            char buf[160];
            for (const EpochLog& l : logs) {
                std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", l.epoch,
                              l.loss, l.miou, l.high_iou);
                f << buf;
            }
        }
    }
    return logs;
}

void save_model(const std::string& path, const ModelParams& mp) {
    json meta;
    meta["kind"] = "aoitr-model";
    meta["config"] = {{"n_points", mp.cfg.n_points}, {"d_model", mp.cfg.d_model},
                      {"enc_layers", mp.cfg.enc_layers}, {"dec_layers", mp.cfg.dec_layers},
                      {"heads", mp.cfg.heads}, {"c_mid", mp.cfg.c_mid},
                      {"lr", mp.cfg.lr}, {"batch", mp.cfg.batch},
                      {"epochs", mp.cfg.epochs}, {"threads", mp.cfg.threads},
                      {"seed", mp.cfg.seed},
                      {"ablation", ablation_name(mp.cfg.ablation)}};
    nn::save_checkpoint(path, mp.store, meta.dump());
}

ModelParams load_model(const std::string& path) {
    nn::ParamStore raw;
    const std::string meta_str = nn::load_checkpoint(path, raw);
    json meta = json::parse(meta_str, nullptr, false);
    require(!meta.is_discarded() && meta.value("kind", "") == "aoitr-model",
            "not a model checkpoint: " + path);
    const json& c = meta.at("config");
    ModelConfig cfg;
    cfg.n_points = c.at("n_points").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.enc_layers = c.at("enc_layers").get<int>();
    cfg.dec_layers = c.at("dec_layers").get<int>();
    cfg.heads = c.at("heads").get<int>();
    cfg.c_mid = c.at("c_mid").get<int>();
    cfg.lr = c.at("lr").get<double>();
    cfg.batch = c.at("batch").get<int>();
    cfg.epochs = c.at("epochs").get<int>();
    cfg.threads = c.at("threads").get<int>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.ablation = ablation_from_name(c.value("ablation", "none"));

    ModelParams mp = make_model(cfg);
    require(raw.size() == mp.store.size(), "checkpoint parameter count mismatch");
    for (size_t i = 0; i < raw.size(); ++i) {
        const int j = mp.store.find(raw[int(i)].name);
        require(j >= 0, "unknown parameter in checkpoint: " + raw[int(i)].name);
        require(mp.store[j].value.same_shape(raw[int(i)].value),
                "parameter shape mismatch: " + raw[int(i)].name);
        mp.store[j].value = raw[int(i)].value;
    }
    return mp;
}

}  // namespace aoitr::model
