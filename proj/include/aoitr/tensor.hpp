#pragma once

#include <functional>
#include <vector>

#include "aoitr/error.hpp"

namespace aoitr::nn {

// Row-major 64-bit matrix. Scalars are 1x1, row vectors 1xC. All training
// math is double precision so finite-difference gradient checks are
// meaningful.
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {
        require(r >= 0 && c >= 0, "negative matrix shape");
    }

    double& at(int r, int c) { return v[size_t(r) * cols + c]; }
    double at(int r, int c) const { return v[size_t(r) * cols + c]; }
    int size() const { return rows * cols; }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Node handle into a Tape.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

// Dynamic reverse-mode tape. Creation order is a topological order, so
// backward() is a reverse sweep over the node list. One tape per forward
// pass; parameters enter as leaves (values copied), so concurrent tapes
// never share mutable state.
class Tape {
  public:
    Var leaf(Mat value, bool needs_grad = false);

    // elementwise / broadcast
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var add_rowvec(Var a, Var row);  // row is 1xC, broadcast over a's rows

    // linear algebra
    Var matmul(Var a, Var b);
    Var transpose(Var a);

    // nonlinearities
    Var relu(Var a);
    Var tanh_(Var a);
    Var sigmoid(Var a);
    Var abs_(Var a);

    // normalization
    Var softmax_rows(Var a);
    Var layernorm_rows(Var a, Var gamma, Var beta);  // gamma/beta 1xC

    // shape plumbing
    Var reshape(Var a, int rows, int cols);
    Var slice_rows(Var a, int r0, int r1);
    Var slice_cols(Var a, int c0, int c1);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);

    // reductions
    Var sum_all(Var a);
    Var mean_all(Var a);

    // fmap is (H*W)xd with row index y*W+x; pts is Nx2 continuous (x, y)
    // grid coordinates, clamped to the grid. Four-neighbor bilinear mix,
    // differentiable in both fmap and pts.
    Var bilinear(Var fmap, int H, int W, Var pts);

    // img is Cin x (H*W); weight Cout x (Cin*k*k); bias 1 x Cout. Valid
    // convolution with stride s; (H-k) and (W-k) must divide s.
    Var conv2d(Var img, int H, int W, Var weight, Var bias, int k, int s);

    // Binary cross-entropy over logits z (Nx1) against constant targets
    // (Nx1 of 0/1), mean-reduced. Numerically stable softplus form.
    Var bce_with_logits(Var z, const Mat& targets);

    const Mat& val(Var x) const;
    const Mat& grad(Var x) const;

    // Seeds d(root)=1 and accumulates gradients into every needs-grad node.
    // root must be scalar (1x1).
    void backward(Var root);

    size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Mat val;
        Mat grad;  // allocated on first touch
        bool needs_grad = false;
        std::function<void(Tape&)> back;  // nullptr for leaves
    };

    std::vector<Node> nodes_;

    int push(Mat val, bool needs_grad, std::function<void(Tape&)> back);
    Mat& gslot(int idx);
    const Node& node(Var x) const;
    bool ng(Var x) const { return node(x).needs_grad; }
};

}  // namespace aoitr::nn
