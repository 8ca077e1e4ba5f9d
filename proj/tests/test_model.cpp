#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "aoitr/model.hpp"
#include "support.hpp"
#include "support_nn.hpp"

using namespace aoitr;
using namespace aoitr::model;
using geo::GeoPoint;
using geo::POI;
using geo::PoiKind;
using geo::Polygon;
using nn::Mat;
using nn::Tape;
using nn::Var;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.n_points = 6;
    cfg.d_model = 8;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.heads = 2;
    cfg.c_mid = 4;
    cfg.batch = 4;
    cfg.epochs = 3;
    cfg.seed = 7;
    return cfg;
}

// Hand-rolled sample: square AOI inside a 32x32 patch with a road loop and
// one entrance, enough structure for every model path.
data::GeoSample tiny_sample(std::uint64_t seed) {
    Rng rng(seed);
    const double x0 = 116.30, y0 = 39.90, span = 0.0015;
    geo::BBox bbox(GeoPoint(x0, y0), GeoPoint(x0 + span, y0 + span));
    data::GeoSample s;
    s.id = "s" + std::to_string(seed);

    const GeoPoint c = bbox.center();
    const double r = span * (0.18 + 0.08 * rng.uniform01());
    s.truth = Polygon({GeoPoint(c.x - r, c.y - r), GeoPoint(c.x + r, c.y - r),
                       GeoPoint(c.x + r, c.y + r), GeoPoint(c.x - r, c.y + r)});
    s.candidate = s.truth;
    s.core = POI{"core", GeoPoint(c.x + r * 0.1, c.y - r * 0.15), 14, PoiKind::core, ""};

    const double fr = r * 1.6;  // road loop fencing the AOI
    s.roads.nodes = {GeoPoint(c.x - fr, c.y - fr), GeoPoint(c.x + fr, c.y - fr),
                     GeoPoint(c.x + fr, c.y + fr), GeoPoint(c.x - fr, c.y + fr)};
    s.roads.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};

    s.entrances = {POI{"ent", GeoPoint(c.x + r, c.y), 14, PoiKind::entrance, "core"}};

    s.raster = img::RasterPatch(32, 32, bbox);
    for (auto& b : s.raster.pixels) b = std::uint8_t(rng.uniform_int(256));
    return s;
}

std::vector<data::GeoSample> tiny_dataset(int n) {
    std::vector<data::GeoSample> ds;
    for (int i = 0; i < n; ++i) ds.push_back(tiny_sample(100 + std::uint64_t(i)));
    return ds;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config validation") {
    CHECK_NOTHROW(tiny_config().validate());
    ModelConfig bad = tiny_config();
    bad.n_points = 2;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = tiny_config();
    bad.d_model = 10;  // not divisible by heads=2? it is; but not by 4
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = tiny_config();
    bad.heads = 3;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("content queries: identical refs, permutation, and category errors") {
    ModelParams mp = make_model(tiny_config());
    const int n = mp.cfg.n_points, d = mp.cfg.d_model;
    geo::BBox bbox(GeoPoint(0.0, 0.0), GeoPoint(1.0, 1.0));

    Rng rng(5);
    Mat fvals = oracle::random_mat(rng, 16, d);
    auto queries_for = [&](const std::vector<GeoPoint>& pts, Tape& t, nn::Binder& b) {
        img::QueryMapOut fm;
        fm.features = t.leaf(fvals);
        fm.gh = fm.gw = 4;
        sampling::ReferencePoints refs;
        refs.points = pts;
        refs.tags.assign(pts.size(), sampling::RefTag::road);
        POI core{"c", GeoPoint(0.5, 0.5), 13, PoiKind::core, ""};
        return build_content_queries(t, b, mp, core, refs, fm, bbox, 32, 32);
    };

    // all refs at the same location -> identical R_L rows
    {
        Tape t;
        nn::Binder b(t, mp.store, false);
        std::vector<GeoPoint> same(size_t(n), GeoPoint(0.31, 0.62));
        ContentQueries q = queries_for(same, t, b);
        const Mat& rl = t.val(q.R_L);
        REQUIRE(rl.rows == n);
        for (int k = 1; k < n; ++k)
            for (int c = 0; c < d; ++c) CHECK(rl.at(k, c) == rl.at(0, c));
        // P_C is the category row of the table
        const Mat& table = mp.store[mp.pc_table].value;
        for (int c = 0; c < d; ++c) CHECK(t.val(q.P_C).at(0, c) == table.at(13, c));
    }

    // swapping two refs permutes exactly those R_L rows
    {
        std::vector<GeoPoint> pts;
        for (int k = 0; k < n; ++k)
            pts.push_back(GeoPoint(0.1 + 0.12 * k, 0.8 - 0.09 * k));
        Tape t1;
        nn::Binder b1(t1, mp.store, false);
        Mat a = t1.val(queries_for(pts, t1, b1).R_L);
        std::swap(pts[1], pts[4]);
        Tape t2;
        nn::Binder b2(t2, mp.store, false);
        Mat b = t2.val(queries_for(pts, t2, b2).R_L);
        for (int c = 0; c < d; ++c) {
            CHECK(a.at(1, c) == b.at(4, c));
            CHECK(a.at(4, c) == b.at(1, c));
            CHECK(a.at(0, c) == b.at(0, c));
            CHECK(a.at(5, c) == b.at(5, c));
        }
    }

    // invalid category is rejected
    {
        Tape t;
        nn::Binder b(t, mp.store, false);
        img::QueryMapOut fm;
        fm.features = t.leaf(fvals);
        fm.gh = fm.gw = 4;
        sampling::ReferencePoints refs;
        refs.points.assign(size_t(n), GeoPoint(0.5, 0.5));
        refs.tags.assign(size_t(n), sampling::RefTag::road);
        POI core{"c", GeoPoint(0.5, 0.5), 99, PoiKind::core, ""};
        CHECK_THROWS_AS(
            build_content_queries(t, b, mp, core, refs, fm, bbox, 32, 32), Error);
    }
}

TEST_CASE("content queries: gradient reaches the feature map and the category row") {
    ModelParams mp = make_model(tiny_config());
    const int n = mp.cfg.n_points;
    geo::BBox bbox(GeoPoint(0.0, 0.0), GeoPoint(1.0, 1.0));
    Rng rng(6);

    Tape t;
    nn::Binder b(t, mp.store, true);
    img::QueryMapOut fm;
    fm.features = t.leaf(oracle::random_mat(rng, 16, mp.cfg.d_model), true);
    fm.gh = fm.gw = 4;
    sampling::ReferencePoints refs;
    for (int k = 0; k < n; ++k)
        refs.points.push_back(GeoPoint(0.1 + 0.13 * k, 0.15 + 0.11 * k));
    refs.tags.assign(size_t(n), sampling::RefTag::road);
    POI core{"c", GeoPoint(0.52, 0.48), 8, PoiKind::core, ""};

    ContentQueries q = build_content_queries(t, b, mp, core, refs, fm, bbox, 32, 32);
    Var loss = t.add(t.add(t.sum_all(q.R_L), t.sum_all(q.P_L)), t.sum_all(q.P_C));
    t.backward(loss);

    double fmap_gmass = 0.0;
    for (double g : t.grad(fm.features).v) fmap_gmass += std::abs(g);
    CHECK(fmap_gmass > double(n));  // every sampled point contributes weight 1

    const Mat& tg = t.grad(b[mp.pc_table]);
    double cat_row = 0.0, other_rows = 0.0;
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < mp.cfg.d_model; ++c)
            (r == 8 ? cat_row : other_rows) += std::abs(tg.at(r, c));
    CHECK(cat_row == doctest::Approx(mp.cfg.d_model));
    CHECK(other_rows == 0.0);
}

TEST_CASE("encode: zero layers is exactly tokens plus positional encodings") {
    ModelConfig cfg = tiny_config();
    cfg.enc_layers = 0;
    ModelParams mp = make_model(cfg);
    Rng rng(7);
    Tape t;
    nn::Binder b(t, mp.store, false);
    img::TokenGridOut tokens;
    tokens.gh = tokens.gw = 2;
    tokens.tokens = t.leaf(oracle::random_mat(rng, 4, cfg.d_model));
    tokens.posenc = nn::posenc_grid(2, 2, cfg.d_model);
    Var mem = encode(t, b, mp, tokens);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < cfg.d_model; ++c)
            CHECK(t.val(mem).at(r, c) ==
                  t.val(tokens.tokens).at(r, c) + tokens.posenc.at(r, c));
}

TEST_CASE("decode: zero layers returns the assembled query tokens; N+1 rows") {
    ModelConfig cfg = tiny_config();
    cfg.enc_layers = 0;
    cfg.dec_layers = 0;
    ModelParams mp = make_model(cfg);
    const int n = cfg.n_points, d = cfg.d_model;
    Rng rng(8);

    Tape t;
    nn::Binder b(t, mp.store, false);
    ContentQueries q;
    q.R_L = t.leaf(oracle::random_mat(rng, n, d));
    q.P_L = t.leaf(oracle::random_mat(rng, 1, d));
    q.P_C = t.leaf(oracle::random_mat(rng, 1, d));
    Mat posenc = oracle::random_mat(rng, n + 1, d);
    Var memory = t.leaf(oracle::random_mat(rng, 4, d));

    DecodeOut out = decode(t, b, mp, q, posenc, memory);
    CHECK(t.val(out.O_ref).rows == n);
    CHECK(t.val(out.O_cat).rows == 1);
    for (int k = 0; k < n; ++k)
        for (int c = 0; c < d; ++c)
            CHECK(t.val(out.O_ref).at(k, c) ==
                  t.val(q.R_L).at(k, c) + t.val(q.P_L).at(0, c) + posenc.at(k, c));
    for (int c = 0; c < d; ++c)
        CHECK(t.val(out.O_cat).at(0, c) == t.val(q.P_C).at(0, c) + posenc.at(n, c));
}

TEST_CASE("decode: cross-attention rows over memory sum to 1") {
    ModelParams mp = make_model(tiny_config());
    const int d = mp.cfg.d_model;
    Rng rng(9);
    Tape t;
    nn::Binder b(t, mp.store, false);
    Var x = t.leaf(oracle::random_mat(rng, mp.cfg.n_points + 1, d));
    Var memory = t.leaf(oracle::random_mat(rng, 5, d));
    std::vector<Var> rows;
    (void)nn::decoder_block(t, b, mp.dec[0], x, memory, mp.cfg.heads, &rows);
    REQUIRE(rows.size() == size_t(mp.cfg.heads));  // cross-attention, per head
    for (Var A : rows) {
        const Mat& m = t.val(A);
        CHECK(m.rows == mp.cfg.n_points + 1);
        CHECK(m.cols == 5);  // one weight per memory token
        for (int r = 0; r < m.rows; ++r) {
            double s = 0.0;
            for (int c = 0; c < m.cols; ++c) s += m.at(r, c);
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("regression head: zero weights center the init; p_hat identity") {
    ModelParams mp = make_model(tiny_config());
    const int n = mp.cfg.n_points, d = mp.cfg.d_model;
    for (int pid : {mp.head_init_w, mp.head_init_b, mp.head_res_w, mp.head_res_b})
        for (double& x : mp.store[pid].value.v) x = 0.0;

    Rng rng(10);
    Tape t;
    nn::Binder b(t, mp.store, false);
    Var O_ref = t.leaf(oracle::random_mat(rng, n, d));
    Var O_cat = t.leaf(oracle::random_mat(rng, 1, d));
    HeadOut h = regression_head(t, b, mp, O_ref, O_cat);
    for (double v : t.val(h.p_init).v) CHECK(v == 0.5);
    for (double v : t.val(h.p_res).v) CHECK(v == 0.0);
    for (double v : t.val(h.p_hat).v) CHECK(v == 0.5);

    // nonzero weights: p_hat - p_init = p_res bitwise, p_res bounded by 0.25
    ModelParams mp2 = make_model(tiny_config());
    Tape t2;
    nn::Binder b2(t2, mp2.store, false);
    Var O_ref2 = t2.leaf(oracle::random_mat(rng, n, d));
    Var O_cat2 = t2.leaf(oracle::random_mat(rng, 1, d));
    HeadOut h2 = regression_head(t2, b2, mp2, O_ref2, O_cat2);
    for (int k = 0; k < n * 2; ++k) {
        CHECK(t2.val(h2.p_hat).v[size_t(k)] ==
              t2.val(h2.p_init).v[size_t(k)] + t2.val(h2.p_res).v[size_t(k)]);
        CHECK(std::abs(t2.val(h2.p_res).v[size_t(k)]) < 0.25);
        CHECK(t2.val(h2.p_init).v[size_t(k)] > 0.0);
        CHECK(t2.val(h2.p_init).v[size_t(k)] < 1.0);
    }
}

TEST_CASE("l1 loss: zero at equality, sum convention, shape errors") {
    Tape t;
    Mat gt(1, 2);
    gt.v = {0.4, 0.6};
    Mat pred = gt;
    CHECK(t.val(l1_loss(t, t.leaf(pred), gt)).v[0] == 0.0);

    pred.v = {0.4 + 0.1, 0.6 - 0.2};  // off by (0.1, -0.2) -> 0.3
    CHECK(t.val(l1_loss(t, t.leaf(pred), gt)).v[0] == doctest::Approx(0.3));

    Mat wrong(2, 2);
    CHECK_THROWS_AS((void)l1_loss(t, t.leaf(wrong), gt), Error);
}

TEST_CASE("make_input: refs and normalized ground truth") {
    data::GeoSample s = tiny_sample(1);
    s.validate();
    ModelInput in = make_input(s, 12);
    CHECK(in.refs.size() == 12);
    CHECK(in.gt.rows == 12);
    CHECK(in.gt.cols == 2);
    for (double v : in.gt.v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // ground truth denormalizes back onto the truth boundary
    auto pts = denormalize_points(in.gt, s.raster.bbox);
    for (const GeoPoint& p : pts) CHECK(geo::point_on_boundary(p, s.truth, 1e-9));
}

TEST_CASE("forward: deterministic, bounded outputs, category embedding exposed") {
    ModelParams mp = make_model(tiny_config());
    data::GeoSample s = tiny_sample(2);
    ModelInput in = make_input(s, mp.cfg.n_points);
    ForwardOut a = forward(mp, in);
    ForwardOut b = forward(mp, in);
    CHECK(a.pred.p_hat.v == b.pred.p_hat.v);  // bit-identical
    CHECK(a.o_cat.v == b.o_cat.v);
    CHECK(a.o_cat.rows == 1);
    CHECK(a.o_cat.cols == mp.cfg.d_model);
    CHECK(a.pred.p_hat.rows == mp.cfg.n_points);
    for (int k = 0; k < mp.cfg.n_points * 2; ++k) {
        CHECK(a.pred.p_hat.v[size_t(k)] > -0.25);
        CHECK(a.pred.p_hat.v[size_t(k)] < 1.25);
        CHECK(a.pred.p_hat.v[size_t(k)] ==
              a.pred.p_init.v[size_t(k)] + a.pred.p_res.v[size_t(k)]);
    }
}

TEST_CASE("evaluate: constant-offset predictor matches the direct IoU oracle") {
    // Zero every parameter, then bias the offset head so the prediction is a
    // fixed square; evaluate() must report exactly the directly computed IoU.
    ModelConfig cfg = tiny_config();
    cfg.n_points = 4;
    ModelParams mp = make_model(cfg);
    for (size_t i = 0; i < mp.store.size(); ++i)
        for (double& x : mp.store[int(i)].value.v) x = 0.0;
    // p_init = 0.5 everywhere; choose p_res so p_hat walks the square
    // (0.3,0.3)-(0.7,0.7) in normalized (u, v-down) coordinates.
    const double off = std::atanh(0.8);  // 0.25*tanh = +/-0.2
    const double uv[4][2] = {{-off, -off}, {off, -off}, {off, off}, {-off, off}};
    Mat& rb = mp.store[mp.head_res_b].value;
    for (int k = 0; k < 4; ++k) {
        rb.at(0, 2 * k) = uv[k][0];
        rb.at(0, 2 * k + 1) = uv[k][1];
    }

    std::vector<data::GeoSample> ds = tiny_dataset(3);
    EvalResult er = evaluate(ds, mp);
    for (size_t i = 0; i < ds.size(); ++i) {
        ModelInput in = make_input(ds[i], cfg.n_points);
        ForwardOut fo = forward(mp, in);
        Polygon pred(denormalize_points(fo.pred.p_hat, ds[i].raster.bbox));
        const double want = geo::polygon_iou(pred, ds[i].truth);
        CHECK(er.per_sample[i] == doctest::Approx(want).epsilon(1e-12));
        CHECK(want > 0.0);  // squares overlap by construction
    }
    // weighted per-category means reproduce the overall mean
    double wsum = 0.0;
    int cnt = 0;
    for (const auto& [cat, p] : er.per_category) {
        wsum += p.first * p.second;
        cnt += p.first;
    }
    CHECK(cnt == int(ds.size()));
    CHECK(er.miou == doctest::Approx(wsum / cnt).epsilon(1e-12));
}

TEST_CASE("evaluate: all-degenerate predictions score zero") {
    ModelParams mp = make_model(tiny_config());
    for (size_t i = 0; i < mp.store.size(); ++i)
        for (double& x : mp.store[int(i)].value.v) x = 0.0;  // p_hat all (0.5,0.5)
    std::vector<data::GeoSample> ds = tiny_dataset(2);
    EvalResult er = evaluate(ds, mp);
    CHECK(er.miou == 0.0);
    CHECK(er.high_iou_rate == 0.0);
}

TEST_CASE("train: zero learning rate leaves parameters untouched") {
    ModelConfig cfg = tiny_config();
    cfg.lr = 0.0;
    cfg.epochs = 1;
    ModelParams mp = make_model(cfg);
    std::vector<Mat> before;
    for (size_t i = 0; i < mp.store.size(); ++i) before.push_back(mp.store[int(i)].value);
    std::vector<data::GeoSample> ds = tiny_dataset(4);
    (void)train(mp, ds, ds);
    for (size_t i = 0; i < mp.store.size(); ++i)
        CHECK(mp.store[int(i)].value.v == before[i].v);
}

TEST_CASE("train: loss is non-increasing over the first 10 steps (<=1 increase)") {
    ModelConfig cfg = tiny_config();
    cfg.lr = 2e-4;
    cfg.batch = 4;   // full dataset per step
    cfg.epochs = 10; // 1 step per epoch -> 10 steps
    ModelParams mp = make_model(cfg);
    std::vector<data::GeoSample> ds = tiny_dataset(4);
    auto logs = train(mp, ds, ds);
    REQUIRE(logs.size() == 10);
    int increases = 0;
    for (size_t i = 1; i < logs.size(); ++i)
        if (logs[i].loss > logs[i - 1].loss + 1e-12) ++increases;
    CHECK(increases <= 1);
}

TEST_CASE("train: poisoned parameters abort with a divergence diagnostic") {
    ModelConfig cfg = tiny_config();
    cfg.epochs = 1;
    ModelParams mp = make_model(cfg);
    mp.store[mp.head_init_w].value.v[0] = std::nan("");
    std::vector<data::GeoSample> ds = tiny_dataset(2);
    bool threw = false;
    try {
        (void)train(mp, ds, ds);
    } catch (const Error& e) {
        threw = true;
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("train: deterministic trajectory and metric csv format") {
    namespace fs = std::filesystem;
    const std::string csv = (fs::temp_directory_path() / "aoitr_train_log.csv").string();
    auto run = [&csv] {
        ModelConfig cfg = tiny_config();
        cfg.epochs = 3;
        ModelParams mp = make_model(cfg);
        std::vector<data::GeoSample> ds = tiny_dataset(4);
        return train(mp, ds, ds, csv);
    };
    auto la = run();
    auto lb = run();
    REQUIRE(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) {
        CHECK(la[i].loss == lb[i].loss);  // bit-identical
        CHECK(la[i].miou == lb[i].miou);
    }
    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    CHECK(header == "epoch,loss,mIoU,highIoU");
    int rows = 0;
    for (std::string line; std::getline(f, line) && !line.empty();) ++rows;
    CHECK(rows == 3);
    std::remove(csv.c_str());
}

TEST_CASE("train: loss drops substantially on a small fixed set") {
    ModelConfig cfg = tiny_config();
    cfg.lr = 3e-3;
    cfg.batch = 4;
    cfg.epochs = 60;
    ModelParams mp = make_model(cfg);
    std::vector<data::GeoSample> ds = tiny_dataset(4);
    auto logs = train(mp, ds, ds);
    REQUIRE(!logs.empty());
    CHECK(logs.back().loss < 0.5 * logs.front().loss);
    CHECK(logs.back().miou > logs.front().miou);
}

TEST_CASE("checkpoint: save/load round trip preserves values and behavior") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "aoitr_model_ck.bin").string();
    ModelParams mp = make_model(tiny_config());
    save_model(path, mp);
    ModelParams back = load_model(path);
    CHECK(back.cfg.n_points == mp.cfg.n_points);
    CHECK(back.cfg.d_model == mp.cfg.d_model);
    REQUIRE(back.store.size() == mp.store.size());
    for (size_t i = 0; i < mp.store.size(); ++i)
        CHECK(back.store[int(i)].value.v == mp.store[int(i)].value.v);

    data::GeoSample s = tiny_sample(3);
    ModelInput in = make_input(s, mp.cfg.n_points);
    CHECK(forward(mp, in).pred.p_hat.v == forward(back, in).pred.p_hat.v);
    std::remove(path.c_str());
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(97);
    for (auto& h : hits) h = 0;
    parallel_for(97, 4, [&](int i) { hits[size_t(i)] += 1; });
    for (auto& h : hits) CHECK(h.load() == 1);
    parallel_for(0, 4, [](int) { FAIL("must not run"); });
}

TEST_CASE("ablations: each drop removes exactly its modality") {
    const data::GeoSample s = tiny_sample(9);
    ModelConfig cfg = tiny_config();

    // query drops zero the matching content query and nothing else
    auto queries_under = [&](Ablation a) {
        cfg.ablation = a;
        ModelParams mp = make_model(cfg);
        ModelInput in = make_input(s, cfg);
        Tape t;
        nn::Binder b(t, mp.store, false);
        img::QueryMapOut fm = img::query_projection(t, b, mp.qry_stem, *in.patch);
        ContentQueries q = build_content_queries(t, b, mp, in.core, in.refs, fm,
                                                 in.patch->bbox, in.patch->h,
                                                 in.patch->w);
        return std::tuple<Mat, Mat, Mat>{t.val(q.P_L), t.val(q.P_C), t.val(q.R_L)};
    };
    const auto [pl0, pc0, rl0] = queries_under(Ablation::none);
    const auto [pl1, pc1, rl1] = queries_under(Ablation::core_location);
    for (double v : pl1.v) CHECK(v == 0.0);
    CHECK(pc1.v == pc0.v);
    CHECK(rl1.v == rl0.v);
    const auto [pl2, pc2, rl2] = queries_under(Ablation::category);
    for (double v : pc2.v) CHECK(v == 0.0);
    CHECK(pl2.v == pl0.v);

    // road_refs falls back to the bbox ring: every ref truncated at the border
    cfg.ablation = Ablation::road_refs;
    ModelInput ref_in = make_input(s, cfg);
    for (sampling::RefTag tag : ref_in.refs.tags)
        CHECK(tag == sampling::RefTag::truncated);
    cfg.ablation = Ablation::none;
    ModelInput full_in = make_input(s, cfg);
    const bool any_prior =
        std::any_of(full_in.refs.tags.begin(), full_in.refs.tags.end(),
                    [](sampling::RefTag t) { return t != sampling::RefTag::truncated; });
    CHECK(any_prior);  // the road loop + entrance do reach the full assembly
    CHECK(full_in.gt.v == ref_in.gt.v);  // ground truth untouched

    // imagery swaps in deterministic noise, window geometry intact
    cfg.ablation = Ablation::imagery;
    ModelInput img_in = make_input(s, cfg);
    REQUIRE(img_in.patch != &s.raster);
    CHECK(img_in.patch->h == s.raster.h);
    CHECK(img_in.patch->bbox.min.x == s.raster.bbox.min.x);
    CHECK(img_in.patch->pixels != s.raster.pixels);
    ModelInput img_in2 = make_input(s, cfg);
    CHECK(img_in.patch->pixels == img_in2.patch->pixels);

    // checkpoint round-trips the switch
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "aoitr_abl_ck.bin").string();
    ModelParams mp = make_model(cfg);
    save_model(path, mp);
    CHECK(load_model(path).cfg.ablation == Ablation::imagery);
    std::remove(path.c_str());

    CHECK(ablation_from_name(ablation_name(Ablation::road_refs)) ==
          Ablation::road_refs);
    CHECK_THROWS_AS(ablation_from_name("bogus"), Error);
}

}  // TEST_SUITE
