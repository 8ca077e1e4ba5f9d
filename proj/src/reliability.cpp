#include "aoitr/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "aoitr/error.hpp"
#include "aoitr/synthgen.hpp"

namespace aoitr::rel {

using nn::Binder;
using nn::Tape;
using nn::Var;

double feature_partial(const std::vector<POI>& sub_pois,
                       const std::vector<LogisticsRecord>& logistics, const Polygon& p) {
    require(p.size() >= 3, "feature_partial: degenerate polygon");
    const size_t total = sub_pois.size() + logistics.size();
    require(total > 0, "feature_partial: no subsidiary locations, rate undefined");
    size_t in = 0;
    for (const POI& q : sub_pois) in += geo::point_in_polygon(q.location, p);
    for (const LogisticsRecord& l : logistics) in += geo::point_in_polygon(l.location, p);
    return double(in) / double(total);
}

BetaResult feature_beta(const std::vector<POI>& sub_pois, const Polygon& p) {
    require(p.size() >= 3, "feature_beta: degenerate polygon");
    std::vector<geo::GeoPoint> pts;
    pts.reserve(sub_pois.size());
    for (const POI& q : sub_pois) pts.push_back(q.location);
    // fewer than 3 non-collinear points span no area: flag instead of failing
    if (pts.size() < 3) return {0.0, true};
    Polygon hull;
    try {
        hull = geo::convex_hull(pts);
    } catch (const Error&) {
        return {0.0, true};
    }
    if (hull.size() < 3) return {0.0, true};
    return {geo::polygon_iou(hull, p), false};
}

int feature_delta(const std::vector<POI>& pois, int category, const Polygon& p) {
    require(p.size() >= 3, "feature_delta: degenerate polygon");
    int n = 0;
    for (const POI& q : pois)
        if (q.kind == geo::PoiKind::core && q.category == category &&
            geo::point_in_polygon(q.location, p))
            ++n;
    return n;
}

FlowHistogram flow_histogram(const std::vector<LBSPoint>& points, const Polygon& p,
                             int tz_offset_hours) {
    require(p.size() >= 3, "flow_histogram: degenerate polygon");
    FlowHistogram out;
    out.d = Mat(7, 24);
    int inside = 0;
    for (const LBSPoint& q : points) {
        if (!geo::point_in_polygon(q.location, p)) continue;
        const std::int64_t t = q.t + std::int64_t(tz_offset_hours) * 3600;
        out.d.at(synth::weekday_of(t), synth::hour_of(t)) += 1.0;
        ++inside;
    }
    if (inside == 0) {
        out.empty = true;
        return out;
    }
    for (double& v : out.d.v) v /= inside;
    return out;
}

BasicFeatures basic_features(const GeoSample& s, const Polygon& p) {
    const double area = geo::polygon_area(p);  // throws on degenerate input
    require(area > 0.0, "basic_features: polygon has no area");
    require(s.raster.bbox.area() > 0.0, "basic_features: sample patch has no extent");
    BasicFeatures f;
    f.category = s.core.category;
    f.area_norm = area / s.raster.bbox.area();
    const geo::GeoPoint c = p.centroid();
    const geo::GeoPoint d = s.core.location - c;
    f.offset_norm = geo::norm(d) / std::sqrt(area);
    f.bearing = (d.x == 0.0 && d.y == 0.0) ? 0.0 : std::atan2(d.y, d.x);
    return f;
}

std::vector<double> extract_features(const model::ModelParams& mp, const GeoSample& s) {
    const Polygon& p = s.candidate;  // the polygon under review
    std::vector<POI> sub = s.entrances;
    sub.insert(sub.end(), s.scene_pois.begin(), s.scene_pois.end());

    const BasicFeatures basic = basic_features(s, p);
    const double partial = feature_partial(sub, s.logistics, p);
    const BetaResult beta = feature_beta(sub, p);
    std::vector<POI> cores = sub;
    cores.push_back(s.core);
    const int delta = feature_delta(cores, s.core.category, p);
    const FlowHistogram flow = flow_histogram(s.lbs, p);

    const model::ForwardOut fo = model::forward(mp, model::make_input(s, mp.cfg.n_points));
    require(fo.o_cat.rows == 1 && fo.o_cat.cols == mp.cfg.d_model,
            "extract_features: unexpected embedding shape");

    std::vector<double> x;
    x.reserve(size_t(kFeatureBase + mp.cfg.d_model));
    for (int c = 0; c < 20; ++c) x.push_back(c == basic.category ? 1.0 : 0.0);
    x.push_back(basic.area_norm);
    x.push_back(std::cos(basic.bearing));
    x.push_back(std::sin(basic.bearing));
    x.push_back(basic.offset_norm);
    x.push_back(partial);
    x.push_back(beta.value);
    x.push_back(beta.degenerate ? 1.0 : 0.0);
    x.push_back(double(delta));
    x.push_back(flow.empty ? 1.0 : 0.0);
    x.insert(x.end(), flow.d.v.begin(), flow.d.v.end());
    x.insert(x.end(), fo.o_cat.v.begin(), fo.o_cat.v.end());
    require(int(x.size()) == kFeatureBase + mp.cfg.d_model, "feature layout drifted");
    return x;
}

void CascadeConfig::validate() const {
    require(in_dim > 0, "cascade in_dim must be set from the data");
    require(h1 > 0 && h2 > 0, "cascade hidden sizes must be positive");
    require(lr > 0.0 && batch > 0 && epochs > 0, "bad cascade training config");
}

Cascade make_cascade(const CascadeConfig& cfg) {
    cfg.validate();
    Cascade c;
    c.cfg = cfg;
    Rng rng(cfg.seed ^ 0xca5cade5ull);
    c.store.add("w1", nn::xavier_init(rng, cfg.in_dim, cfg.h1, cfg.in_dim, cfg.h1));
    c.store.add("b1", Mat(1, cfg.h1));
    c.store.add("w2", nn::xavier_init(rng, cfg.h1, cfg.h2, cfg.h1, cfg.h2));
    c.store.add("b2", Mat(1, cfg.h2));
    c.store.add("w3", nn::xavier_init(rng, cfg.h2, 1, cfg.h2, 1));
    c.store.add("b3", Mat(1, 1));
    return c;
}

Var cascade_logits(Tape& t, Binder& b, const Cascade& c, const Mat& x) {
    require(x.cols == c.cfg.in_dim, "cascade_logits: feature width mismatch");
    const int w1 = c.store.find("w1"), b1 = c.store.find("b1");
    const int w2 = c.store.find("w2"), b2 = c.store.find("b2");
    const int w3 = c.store.find("w3"), b3 = c.store.find("b3");
    Var h = t.relu(t.add_rowvec(t.matmul(t.leaf(x), b[w1]), b[b1]));
    h = t.relu(t.add_rowvec(t.matmul(h, b[w2]), b[b2]));
    return t.add_rowvec(t.matmul(h, b[w3]), b[b3]);
}

namespace {

Mat pack_rows(const std::vector<std::vector<double>>& X, const std::vector<size_t>& rows,
              int cols) {
    Mat m(int(rows.size()), cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        require(int(X[rows[i]].size()) == cols, "ragged feature matrix");
        std::copy(X[rows[i]].begin(), X[rows[i]].end(), m.v.begin() + long(i) * cols);
    }
    return m;
}

}  // namespace

std::vector<double> cascade_train(Cascade& c, const std::vector<std::vector<double>>& X,
                                  const std::vector<int>& y) {
    require(X.size() == y.size(), "cascade_train: features/labels length mismatch");
    require(!X.empty(), "cascade_train: empty training set");
    const int pos = int(std::count(y.begin(), y.end(), 1));
    require(pos > 0 && pos < int(y.size()),
            "cascade_train: need both classes, got a single-class set");

    nn::Adam opt({c.cfg.lr, 0.9, 0.999, 1e-8});
    Rng shuffle_rng(c.cfg.seed ^ 0x5e5510f2ull);
    std::vector<size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> epoch_loss;
    for (int epoch = 0; epoch < c.cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        int batches = 0;
        for (size_t b0 = 0; b0 < order.size(); b0 += size_t(c.cfg.batch)) {
            const size_t b1 = std::min(order.size(), b0 + size_t(c.cfg.batch));
            const std::vector<size_t> rows(order.begin() + long(b0), order.begin() + long(b1));
            const Mat xb = pack_rows(X, rows, c.cfg.in_dim);
            Mat yb(int(rows.size()), 1);
            for (size_t i = 0; i < rows.size(); ++i) yb.at(int(i), 0) = y[rows[i]];

            Tape t;
            Binder b(t, c.store, true);
            const Var loss = t.bce_with_logits(cascade_logits(t, b, c, xb), yb);
            const double lv = t.val(loss).at(0, 0);
            require(std::isfinite(lv), "cascade training diverged: non-finite loss");
            t.backward(loss);
            std::vector<Mat> grads;
            b.accumulate_grads(t, grads);
            opt.step(c.store, grads);
            loss_sum += lv;
            ++batches;
        }
        epoch_loss.push_back(loss_sum / batches);
    }
    return epoch_loss;
}

std::vector<double> cascade_scores(const Cascade& c,
                                   const std::vector<std::vector<double>>& X) {
    if (X.empty()) return {};
    std::vector<size_t> rows(X.size());
    std::iota(rows.begin(), rows.end(), 0);
    Tape t;
    Binder b(t, c.store, false);
    const Var z = t.sigmoid(cascade_logits(t, b, c, pack_rows(X, rows, c.cfg.in_dim)));
    const Mat& s = t.val(z);
    return std::vector<double>(s.v.begin(), s.v.end());
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    require(scores.size() == labels.size() && !scores.empty(), "roc_auc: bad inputs");
    std::vector<size_t> ix(scores.size());
    std::iota(ix.begin(), ix.end(), 0);
    std::sort(ix.begin(), ix.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // average ranks across ties, then Mann-Whitney
    std::vector<double> rank(scores.size());
    size_t i = 0;
    while (i < ix.size()) {
        size_t j = i;
        while (j + 1 < ix.size() && scores[ix[j + 1]] == scores[ix[i]]) ++j;
        const double r = (double(i) + double(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) rank[ix[k]] = r;
        i = j + 1;
    }
    double pos_ranks = 0.0;
    size_t n_pos = 0;
    for (size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == 1) {
            pos_ranks += rank[k];
            ++n_pos;
        }
    const size_t n_neg = labels.size() - n_pos;
    require(n_pos > 0 && n_neg > 0, "roc_auc: need both classes");
    return (pos_ranks - double(n_pos) * (double(n_pos) + 1.0) / 2.0) /
           (double(n_pos) * double(n_neg));
}

PRResult pr_threshold(const std::vector<double>& scores, const std::vector<int>& labels,
                      double target_precision) {
    require(scores.size() == labels.size() && !scores.empty(), "pr_threshold: bad inputs");
    require(target_precision > 0.0 && target_precision <= 1.0,
            "pr_threshold: target outside (0,1]");
    const int n_pos = int(std::count(labels.begin(), labels.end(), 1));
    require(n_pos > 0 && n_pos < int(labels.size()), "pr_threshold: need both classes");

    std::vector<size_t> ix(scores.size());
    std::iota(ix.begin(), ix.end(), 0);
    std::sort(ix.begin(), ix.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    PRResult out;
    int tp = 0, fp = 0;
    for (size_t k = 0; k < ix.size(); ++k) {
        tp += labels[ix[k]] == 1;
        fp += labels[ix[k]] != 1;
        // recompute exactly at each distinct score cut (predict >= threshold)
        if (k + 1 < ix.size() && scores[ix[k + 1]] == scores[ix[k]]) continue;
        PRPoint pt;
        pt.threshold = scores[ix[k]];
        pt.precision = double(tp) / double(tp + fp);
        pt.recall = double(tp) / double(n_pos);
        out.curve.push_back(pt);
    }
    for (const PRPoint& pt : out.curve) {
        if (pt.precision < target_precision) continue;
        // lowest qualifying threshold = farthest along the sweep = max recall
        if (!out.attainable || pt.threshold < out.chosen.threshold) {
            out.attainable = true;
            out.chosen = pt;
        }
    }
    if (!out.attainable) {
        out.chosen = *std::max_element(out.curve.begin(), out.curve.end(),
                                       [](const PRPoint& a, const PRPoint& b) {
                                           return a.precision < b.precision;
                                       });
    }
    return out;
}

void write_feature_csv(const std::string& path, const std::vector<std::vector<double>>& X,
                       const std::vector<int>& y, int embed_dim) {
    require(X.size() == y.size(), "write_feature_csv: features/labels mismatch");
    std::ofstream out(path);
    require(out.good(), "cannot open for write: " + path);
    for (int c = 0; c < 20; ++c) out << "cat" << c << ",";
    out << "area,bearing_cos,bearing_sin,offset,partial,beta,beta_degenerate,delta,"
           "flow_empty";
    for (int w = 0; w < 7; ++w)
        for (int h = 0; h < 24; ++h) out << ",d_w" << w << "_h" << h;
    for (int e = 0; e < embed_dim; ++e) out << ",emb" << e;
    out << ",label\n";
    char buf[32];
    for (size_t i = 0; i < X.size(); ++i) {
        require(int(X[i].size()) == kFeatureBase + embed_dim,
                "write_feature_csv: row width mismatch");
        for (double v : X[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << y[i] << '\n';
    }
    require(out.good(), "short write: " + path);
}

void write_pr_csv(const std::string& path, const PRResult& pr) {
    std::ofstream out(path);
    require(out.good(), "cannot open for write: " + path);
    out << "threshold,precision,recall\n";
    char buf[96];
    for (const PRPoint& pt : pr.curve) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", pt.threshold, pt.precision,
                      pt.recall);
        out << buf;
    }
    require(out.good(), "short write: " + path);
}

}  // namespace aoitr::rel
