#include "aoitr/nn.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace aoitr::nn {

using nlohmann::json;

int ParamStore::add(std::string name, Mat init) {
    require(find(name) < 0, "duplicate parameter name: " + name);
    params_.push_back({std::move(name), std::move(init), Mat(), Mat()});
    return int(params_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
    for (size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return int(i);
    return -1;
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const Param& p : params_) n += size_t(p.value.size());
    return n;
}

Var Binder::operator[](int pid) {
    require(pid >= 0 && size_t(pid) < bound_.size(), "parameter id out of range");
    if (!bound_[pid].valid())
        bound_[pid] = tape_->leaf((*store_)[pid].value, train_);
    return bound_[pid];
}

void Binder::accumulate_grads(const Tape& tape, std::vector<Mat>& accum) const {
    accum.resize(store_->size());
    for (size_t i = 0; i < bound_.size(); ++i) {
        if (!bound_[i].valid()) continue;
        const Mat* g = nullptr;
        try {
            g = &tape.grad(bound_[i]);
        } catch (const Error&) {
            continue;  // bound but off the loss path
        }
        if (accum[i].size() == 0) accum[i] = Mat(g->rows, g->cols);
        for (int k = 0; k < g->size(); ++k) accum[i].v[k] += g->v[k];
    }
}

void Adam::step(ParamStore& store, const std::vector<Mat>& grads) {
    require(grads.size() == store.size(), "gradient list size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].size() == 0) continue;
        Param& p = store[int(i)];
        require(grads[i].same_shape(p.value), "gradient shape mismatch: " + p.name);
        if (p.m.size() == 0) {
            p.m = Mat(p.value.rows, p.value.cols);
            p.v = Mat(p.value.rows, p.value.cols);
        }
        for (int k = 0; k < p.value.size(); ++k) {
            const double g = grads[i].v[k];
            p.m.v[k] = cfg_.beta1 * p.m.v[k] + (1.0 - cfg_.beta1) * g;
            p.v.v[k] = cfg_.beta2 * p.v.v[k] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = p.m.v[k] / bc1;
            const double vhat = p.v.v[k] / bc2;
            p.value.v[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

Mat xavier_init(Rng& rng, int rows, int cols, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / double(fan_in + fan_out));
    Mat m(rows, cols);
    for (double& x : m.v) x = rng.uniform(-a, a);
    return m;
}

// --- positional encodings ----------------------------------------------------

void posenc2d(double x, double y, int d, double* out) {
    require(d % 4 == 0, "posenc width must be divisible by 4");
    const int pairs = d / 4;
    for (int i = 0; i < pairs; ++i) {
        const double w = M_PI * double(i + 1);  // linear frequency ladder
        out[2 * i] = std::sin(w * x);
        out[2 * i + 1] = std::cos(w * x);
        out[d / 2 + 2 * i] = std::sin(w * y);
        out[d / 2 + 2 * i + 1] = std::cos(w * y);
    }
}

Mat posenc_grid(int gh, int gw, int d) {
    Mat pe(gh * gw, d);
    for (int y = 0; y < gh; ++y)
        for (int x = 0; x < gw; ++x)
            posenc2d((x + 0.5) / gw, (y + 0.5) / gh, d, &pe.v[size_t(y * gw + x) * d]);
    return pe;
}

Mat posenc_points(const std::vector<std::pair<double, double>>& xy, int d) {
    Mat pe(int(xy.size()), d);
    for (size_t i = 0; i < xy.size(); ++i)
        posenc2d(xy[i].first, xy[i].second, d, &pe.v[i * d]);
    return pe;
}

// --- blocks -------------------------------------------------------------------

LayerNormParams make_layernorm(ParamStore& ps, const std::string& prefix, int d) {
    LayerNormParams p;
    p.gamma = ps.add(prefix + ".gamma", Mat(1, d, 1.0));
    p.beta = ps.add(prefix + ".beta", Mat(1, d, 0.0));
    return p;
}

AttentionParams make_attention(ParamStore& ps, Rng& rng, const std::string& prefix,
                               int d) {
    AttentionParams p;
    p.wq = ps.add(prefix + ".wq", xavier_init(rng, d, d, d, d));
    p.bq = ps.add(prefix + ".bq", Mat(1, d));
    p.wk = ps.add(prefix + ".wk", xavier_init(rng, d, d, d, d));
    p.bk = ps.add(prefix + ".bk", Mat(1, d));
    p.wv = ps.add(prefix + ".wv", xavier_init(rng, d, d, d, d));
    p.bv = ps.add(prefix + ".bv", Mat(1, d));
    p.wo = ps.add(prefix + ".wo", xavier_init(rng, d, d, d, d));
    p.bo = ps.add(prefix + ".bo", Mat(1, d));
    return p;
}

FfnParams make_ffn(ParamStore& ps, Rng& rng, const std::string& prefix, int d,
                   int hidden) {
    FfnParams p;
    p.w1 = ps.add(prefix + ".w1", xavier_init(rng, d, hidden, d, hidden));
    p.b1 = ps.add(prefix + ".b1", Mat(1, hidden));
    p.w2 = ps.add(prefix + ".w2", xavier_init(rng, hidden, d, hidden, d));
    p.b2 = ps.add(prefix + ".b2", Mat(1, d));
    return p;
}

EncoderBlockParams make_encoder_block(ParamStore& ps, Rng& rng,
                                      const std::string& prefix, int d,
                                      int ffn_hidden) {
    EncoderBlockParams p;
    p.ln1 = make_layernorm(ps, prefix + ".ln1", d);
    p.attn = make_attention(ps, rng, prefix + ".attn", d);
    p.ln2 = make_layernorm(ps, prefix + ".ln2", d);
    p.ffn = make_ffn(ps, rng, prefix + ".ffn", d, ffn_hidden);
    return p;
}

DecoderBlockParams make_decoder_block(ParamStore& ps, Rng& rng,
                                      const std::string& prefix, int d,
                                      int ffn_hidden) {
    DecoderBlockParams p;
    p.ln1 = make_layernorm(ps, prefix + ".ln1", d);
    p.self_attn = make_attention(ps, rng, prefix + ".self", d);
    p.ln2 = make_layernorm(ps, prefix + ".ln2", d);
    p.cross_attn = make_attention(ps, rng, prefix + ".cross", d);
    p.ln3 = make_layernorm(ps, prefix + ".ln3", d);
    p.ffn = make_ffn(ps, rng, prefix + ".ffn", d, ffn_hidden);
    return p;
}

Var layernorm(Tape& t, Binder& b, const LayerNormParams& p, Var x) {
    return t.layernorm_rows(x, b[p.gamma], b[p.beta]);
}

Var attention(Tape& t, Binder& b, const AttentionParams& p, Var q, Var kv, int heads,
              std::vector<Var>* attn_rows) {
    const int d = t.val(q).cols;
    require(t.val(kv).cols == d, "attention: query/kv width mismatch");
    require(heads > 0 && d % heads == 0, "attention: d_model not divisible by heads");
    const int dh = d / heads;
    Var Q = t.add_rowvec(t.matmul(q, b[p.wq]), b[p.bq]);
    Var K = t.add_rowvec(t.matmul(kv, b[p.wk]), b[p.bk]);
    Var V = t.add_rowvec(t.matmul(kv, b[p.wv]), b[p.bv]);
    std::vector<Var> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        Var Qh = t.slice_cols(Q, h * dh, (h + 1) * dh);
        Var Kh = t.slice_cols(K, h * dh, (h + 1) * dh);
        Var Vh = t.slice_cols(V, h * dh, (h + 1) * dh);
        Var scores = t.scale(t.matmul(Qh, t.transpose(Kh)), 1.0 / std::sqrt(double(dh)));
        Var A = t.softmax_rows(scores);
        if (attn_rows) attn_rows->push_back(A);
        outs.push_back(t.matmul(A, Vh));
    }
    Var cat = heads == 1 ? outs[0] : t.concat_cols(outs);
    return t.add_rowvec(t.matmul(cat, b[p.wo]), b[p.bo]);
}

Var ffn(Tape& t, Binder& b, const FfnParams& p, Var x) {
    Var h = t.relu(t.add_rowvec(t.matmul(x, b[p.w1]), b[p.b1]));
    return t.add_rowvec(t.matmul(h, b[p.w2]), b[p.b2]);
}

Var encoder_block(Tape& t, Binder& b, const EncoderBlockParams& p, Var x, int heads,
                  std::vector<Var>* attn_rows) {
    Var n1 = layernorm(t, b, p.ln1, x);
    x = t.add(x, attention(t, b, p.attn, n1, n1, heads, attn_rows));
    x = t.add(x, ffn(t, b, p.ffn, layernorm(t, b, p.ln2, x)));
    return x;
}

Var decoder_block(Tape& t, Binder& b, const DecoderBlockParams& p, Var x, Var memory,
                  int heads, std::vector<Var>* attn_rows) {
    Var n1 = layernorm(t, b, p.ln1, x);
    x = t.add(x, attention(t, b, p.self_attn, n1, n1, heads, nullptr));
    x = t.add(x, attention(t, b, p.cross_attn, layernorm(t, b, p.ln2, x), memory,
                           heads, attn_rows));
    x = t.add(x, ffn(t, b, p.ffn, layernorm(t, b, p.ln3, x)));
    return x;
}

ConvStem make_conv_stem(ParamStore& ps, Rng& rng, const std::string& prefix, int c_in,
                        int c_mid, int d_out) {
    ConvStem p;
    p.c_in = c_in;
    p.c_mid = c_mid;
    p.d_out = d_out;
    p.w1 = ps.add(prefix + ".w1",
                  xavier_init(rng, c_mid, c_in * 16, c_in * 16, c_mid * 16));
    p.b1 = ps.add(prefix + ".b1", Mat(1, c_mid));
    p.w2 = ps.add(prefix + ".w2",
                  xavier_init(rng, d_out, c_mid * 4, c_mid * 4, d_out * 4));
    p.b2 = ps.add(prefix + ".b2", Mat(1, d_out));
    return p;
}

Var conv_stem_forward(Tape& t, Binder& b, const ConvStem& p, Var img, int H, int W,
                      int* gh, int* gw) {
    require(H % 8 == 0 && W % 8 == 0, "stem input must be divisible by 8");
    Var h1 = t.relu(t.conv2d(img, H, W, b[p.w1], b[p.b1], 4, 4));
    Var h2 = t.conv2d(h1, H / 4, W / 4, b[p.w2], b[p.b2], 2, 2);
    if (gh) *gh = H / 8;
    if (gw) *gw = W / 8;
    return h2;  // d_out x (gh*gw)
}

// --- checkpoint I/O ------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'A', 'O', 'I', 'T', 'R', 'C', 'K', '1'};
}

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json) {
    json header;
    header["meta"] = meta_json.empty() ? json::object() : json::parse(meta_json);
    header["params"] = json::array();
    for (size_t i = 0; i < store.size(); ++i) {
        const Param& p = store[int(i)];
        header["params"].push_back(
            {{"name", p.name}, {"rows", p.value.rows}, {"cols", p.value.cols}});
    }
    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    const uint32_t version = 1;
    const uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(hs.data(), std::streamsize(hs.size()));
    for (size_t i = 0; i < store.size(); ++i) {
        const Mat& m = store[int(i)].value;
        out.write(reinterpret_cast<const char*>(m.v.data()),
                  std::streamsize(m.v.size() * sizeof(double)));
    }
    require(out.good(), "checkpoint write failed: " + path);
}

std::string load_checkpoint(const std::string& path, ParamStore& store) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    require(in.good() && std::memcmp(magic, kMagic, 8) == 0,
            "bad checkpoint magic: " + path);
    uint32_t version = 0;
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&hlen), 8);
    require(in.good() && version == 1, "unsupported checkpoint version");
    std::string hs(hlen, '\0');
    in.read(hs.data(), std::streamsize(hlen));
    require(in.good(), "truncated checkpoint header");
    const json header = json::parse(hs);
    ParamStore fresh;
    for (const json& jp : header.at("params")) {
        const int rows = jp.at("rows").get<int>();
        const int cols = jp.at("cols").get<int>();
        Mat m(rows, cols);
        in.read(reinterpret_cast<char*>(m.v.data()),
                std::streamsize(m.v.size() * sizeof(double)));
        require(in.good(), "truncated checkpoint payload");
        fresh.add(jp.at("name").get<std::string>(), std::move(m));
    }
    store = std::move(fresh);
    return header.at("meta").dump();
}

}  // namespace aoitr::nn
