#pragma once

#include <string>
#include <vector>

#include "aoitr/rng.hpp"
#include "aoitr/tensor.hpp"

namespace aoitr::nn {

// Named parameter with Adam moment slots. Values live here between steps;
// each forward pass copies them into tape leaves, so tapes never alias the
// store.
struct Param {
    std::string name;
    Mat value;
    Mat m, v;  // Adam moments, sized on first update
};

class ParamStore {
  public:
    int add(std::string name, Mat init);
    Param& operator[](int i) { return params_[i]; }
    const Param& operator[](int i) const { return params_[i]; }
    size_t size() const { return params_.size(); }
    int find(const std::string& name) const;  // -1 when absent
    size_t scalar_count() const;

  private:
    std::vector<Param> params_;
};

// Binds store parameters into one tape as leaves, lazily. In eval mode the
// leaves carry no gradient slots, which skips the whole backward path.
class Binder {
  public:
    Binder(Tape& tape, const ParamStore& store, bool train = true)
        : tape_(&tape), store_(&store), bound_(store.size()), train_(train) {}

    Var operator[](int pid);

    // After tape.backward(): adds each bound parameter's gradient into
    // `accum` (indexed like the store; empty Mat means untouched).
    void accumulate_grads(const Tape& tape, std::vector<Mat>& accum) const;

  private:
    Tape* tape_;
    const ParamStore* store_;
    std::vector<Var> bound_;
    bool train_;
};

struct AdamConfig {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(ParamStore& store, const std::vector<Mat>& grads);
    int64_t steps() const { return t_; }

  private:
    AdamConfig cfg_;
    int64_t t_ = 0;
};

Mat xavier_init(Rng& rng, int rows, int cols, int fan_in, int fan_out);

// 2-D sinusoidal positional encoding for a normalized location in [0,1]^2.
// First d/2 dims encode x, last d/2 encode y; sin/cos pairs at linearly
// spaced frequencies (no aliasing at desk grid sizes). d % 4 == 0.
void posenc2d(double x, double y, int d, double* out);
Mat posenc_grid(int gh, int gw, int d);  // (gh*gw) x d at cell centers
Mat posenc_points(const std::vector<std::pair<double, double>>& xy, int d);

// --- transformer building blocks (pre-norm residual) -----------------------

struct LayerNormParams {
    int gamma = -1, beta = -1;
};
struct AttentionParams {
    int wq = -1, bq = -1, wk = -1, bk = -1, wv = -1, bv = -1, wo = -1, bo = -1;
};
struct FfnParams {
    int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
};
struct EncoderBlockParams {
    LayerNormParams ln1;
    AttentionParams attn;
    LayerNormParams ln2;
    FfnParams ffn;
};
struct DecoderBlockParams {
    LayerNormParams ln1;
    AttentionParams self_attn;
    LayerNormParams ln2;
    AttentionParams cross_attn;
    LayerNormParams ln3;
    FfnParams ffn;
};

LayerNormParams make_layernorm(ParamStore& ps, const std::string& prefix, int d);
AttentionParams make_attention(ParamStore& ps, Rng& rng, const std::string& prefix,
                               int d);
FfnParams make_ffn(ParamStore& ps, Rng& rng, const std::string& prefix, int d,
                   int hidden);
EncoderBlockParams make_encoder_block(ParamStore& ps, Rng& rng,
                                      const std::string& prefix, int d, int ffn_hidden);
DecoderBlockParams make_decoder_block(ParamStore& ps, Rng& rng,
                                      const std::string& prefix, int d, int ffn_hidden);

Var layernorm(Tape& t, Binder& b, const LayerNormParams& p, Var x);

// q: Nq x d attends over kv: Nkv x d -> Nq x d. When attn_rows is non-null,
// the per-head softmax Vars (each Nq x Nkv, rows summing to 1) are appended
// for introspection.
Var attention(Tape& t, Binder& b, const AttentionParams& p, Var q, Var kv, int heads,
              std::vector<Var>* attn_rows = nullptr);

Var ffn(Tape& t, Binder& b, const FfnParams& p, Var x);

Var encoder_block(Tape& t, Binder& b, const EncoderBlockParams& p, Var x, int heads,
                  std::vector<Var>* attn_rows = nullptr);
Var decoder_block(Tape& t, Binder& b, const DecoderBlockParams& p, Var x, Var memory,
                  int heads, std::vector<Var>* attn_rows = nullptr);

// Two-stage strided conv stem (k4s4 -> relu -> k2s2), net stride 8.
struct ConvStem {
    int w1 = -1, b1 = -1, w2 = -1, b2 = -1;
    int c_in = 0, c_mid = 0, d_out = 0;
};
ConvStem make_conv_stem(ParamStore& ps, Rng& rng, const std::string& prefix, int c_in,
                        int c_mid, int d_out);
// img: c_in x (H*W); returns d_out x (gh*gw) channel-major feature map with
// gh = H/8, gw = W/8. H and W must be divisible by 8.
Var conv_stem_forward(Tape& t, Binder& b, const ConvStem& p, Var img, int H, int W,
                      int* gh, int* gw);

// --- checkpoint I/O ----------------------------------------------------------

// Versioned binary checkpoint: magic + JSON header (param names/shapes +
// caller metadata) + raw float64 little-endian payload.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const std::string& meta_json);
// Returns metadata JSON; store is replaced (names and shapes validated by
// the caller if it created the store first).
std::string load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace aoitr::nn
