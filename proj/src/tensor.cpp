#include "aoitr/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace aoitr::nn {

namespace {

void axpy(Mat& dst, const Mat& src, double s = 1.0) {
    for (int i = 0; i < dst.size(); ++i) dst.v[i] += s * src.v[i];
}

}  // namespace

int Tape::push(Mat val, bool needs_grad, std::function<void(Tape&)> back) {
    nodes_.push_back({std::move(val), Mat(), needs_grad, std::move(back)});
    return int(nodes_.size()) - 1;
}

Mat& Tape::gslot(int idx) {
    Node& n = nodes_[idx];
    if (n.grad.size() == 0) n.grad = Mat(n.val.rows, n.val.cols);
    return n.grad;
}

const Tape::Node& Tape::node(Var x) const {
    require(x.idx >= 0 && size_t(x.idx) < nodes_.size(), "dangling tape handle");
    return nodes_[x.idx];
}

const Mat& Tape::val(Var x) const { return node(x).val; }

const Mat& Tape::grad(Var x) const {
    const Node& n = node(x);
    require(n.grad.size() > 0, "gradient not computed for this node");
    return n.grad;
}

Var Tape::leaf(Mat value, bool needs_grad) {
    return {push(std::move(value), needs_grad, nullptr)};
}

void Tape::backward(Var root) {
    require(node(root).val.rows == 1 && node(root).val.cols == 1,
            "backward root must be scalar");
    gslot(root.idx).v[0] = 1.0;
    // Creation order is topological; reverse sweep visits children first.
    // Nodes with untouched grads are off the path from the root.
    for (int i = root.idx; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.back && n.grad.size() > 0) n.back(*this);
    }
}

// --- elementwise / broadcast ----------------------------------------------

Var Tape::add(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    require(A.same_shape(B), "add: shape mismatch");
    Mat out = A;
    axpy(out, B);
    const bool needs = ng(a) || ng(b);
    const int ai = a.idx, bi = b.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, bi](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            if (t.nodes_[ai].needs_grad) axpy(t.gslot(ai), g);
            if (t.nodes_[bi].needs_grad) axpy(t.gslot(bi), g);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::sub(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    require(A.same_shape(B), "sub: shape mismatch");
    Mat out = A;
    axpy(out, B, -1.0);
    const bool needs = ng(a) || ng(b);
    const int ai = a.idx, bi = b.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, bi](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            if (t.nodes_[ai].needs_grad) axpy(t.gslot(ai), g);
            if (t.nodes_[bi].needs_grad) axpy(t.gslot(bi), g, -1.0);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::mul(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    require(A.same_shape(B), "mul: shape mismatch");
    Mat out = A;
    for (int i = 0; i < out.size(); ++i) out.v[i] *= B.v[i];
    const bool needs = ng(a) || ng(b);
    const int ai = a.idx, bi = b.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, bi](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            if (t.nodes_[ai].needs_grad) {
                Mat& ga = t.gslot(ai);
                const Mat& B2 = t.nodes_[bi].val;
                for (int i = 0; i < g.size(); ++i) ga.v[i] += g.v[i] * B2.v[i];
            }
            if (t.nodes_[bi].needs_grad) {
                Mat& gb = t.gslot(bi);
                const Mat& A2 = t.nodes_[ai].val;
                for (int i = 0; i < g.size(); ++i) gb.v[i] += g.v[i] * A2.v[i];
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::scale(Var a, double s) {
    Mat out = val(a);
    for (double& x : out.v) x *= s;
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, s](Tape& t) { axpy(t.gslot(ai), t.nodes_[self].grad, s); };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::add_rowvec(Var a, Var row) {
    const Mat& A = val(a);
    const Mat& R = val(row);
    require(R.rows == 1 && R.cols == A.cols, "add_rowvec: need 1xC row");
    Mat out = A;
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) out.at(r, c) += R.at(0, c);
    const bool needs = ng(a) || ng(row);
    const int ai = a.idx, ri = row.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, ri](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            if (t.nodes_[ai].needs_grad) axpy(t.gslot(ai), g);
            if (t.nodes_[ri].needs_grad) {
                Mat& gr = t.gslot(ri);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) gr.at(0, c) += g.at(r, c);
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- linear algebra ---------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    const Mat& A = val(a);
    const Mat& B = val(b);
    require(A.cols == B.rows, "matmul: inner dimensions differ");
    Mat out(A.rows, B.cols);
    // ikj order keeps the inner loop contiguous.
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const double aik = A.at(i, k);
            if (aik == 0.0) continue;
            const double* brow = &B.v[size_t(k) * B.cols];
            double* orow = &out.v[size_t(i) * out.cols];
            for (int j = 0; j < B.cols; ++j) orow[j] += aik * brow[j];
        }
    const bool needs = ng(a) || ng(b);
    const int ai = a.idx, bi = b.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, bi](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& A2 = t.nodes_[ai].val;
            const Mat& B2 = t.nodes_[bi].val;
            if (t.nodes_[ai].needs_grad) {  // dA += g * B^T
                Mat& ga = t.gslot(ai);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) {
                        const double gij = g.at(i, j);
                        if (gij == 0.0) continue;
                        for (int k = 0; k < B2.rows; ++k)
                            ga.at(i, k) += gij * B2.at(k, j);
                    }
            }
            if (t.nodes_[bi].needs_grad) {  // dB += A^T * g
                Mat& gb = t.gslot(bi);
                for (int i = 0; i < A2.rows; ++i)
                    for (int k = 0; k < A2.cols; ++k) {
                        const double aik = A2.at(i, k);
                        if (aik == 0.0) continue;
                        for (int j = 0; j < g.cols; ++j)
                            gb.at(k, j) += aik * g.at(i, j);
                    }
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::transpose(Var a) {
    const Mat& A = val(a);
    Mat out(A.cols, A.rows);
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) out.at(c, r) = A.at(r, c);
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.gslot(ai);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga.at(c, r) += g.at(r, c);
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- nonlinearities ---------------------------------------------------------

Var Tape::relu(Var a) {
    Mat out = val(a);
    for (double& x : out.v) x = std::max(x, 0.0);
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& A = t.nodes_[ai].val;
            Mat& ga = t.gslot(ai);
            for (int i = 0; i < g.size(); ++i)
                if (A.v[i] > 0.0) ga.v[i] += g.v[i];
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::tanh_(Var a) {
    Mat out = val(a);
    for (double& x : out.v) x = std::tanh(x);
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& Y = t.nodes_[self].val;
            Mat& ga = t.gslot(ai);
            for (int i = 0; i < g.size(); ++i)
                ga.v[i] += g.v[i] * (1.0 - Y.v[i] * Y.v[i]);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::sigmoid(Var a) {
    Mat out = val(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& Y = t.nodes_[self].val;
            Mat& ga = t.gslot(ai);
            for (int i = 0; i < g.size(); ++i)
                ga.v[i] += g.v[i] * Y.v[i] * (1.0 - Y.v[i]);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::abs_(Var a) {
    Mat out = val(a);
    for (double& x : out.v) x = std::abs(x);
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& A = t.nodes_[ai].val;
            Mat& ga = t.gslot(ai);
            for (int i = 0; i < g.size(); ++i) {
                const double s = (A.v[i] > 0.0) - (A.v[i] < 0.0);
                ga.v[i] += g.v[i] * s;
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- normalization ----------------------------------------------------------

Var Tape::softmax_rows(Var a) {
    const Mat& A = val(a);
    Mat out = A;
    for (int r = 0; r < A.rows; ++r) {
        double m = -1e300;
        for (int c = 0; c < A.cols; ++c) m = std::max(m, A.at(r, c));
        double z = 0.0;
        for (int c = 0; c < A.cols; ++c) z += (out.at(r, c) = std::exp(A.at(r, c) - m));
        for (int c = 0; c < A.cols; ++c) out.at(r, c) /= z;
    }
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& Y = t.nodes_[self].val;
            Mat& ga = t.gslot(ai);
            for (int r = 0; r < g.rows; ++r) {
                double dotp = 0.0;
                for (int c = 0; c < g.cols; ++c) dotp += g.at(r, c) * Y.at(r, c);
                for (int c = 0; c < g.cols; ++c)
                    ga.at(r, c) += Y.at(r, c) * (g.at(r, c) - dotp);
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::layernorm_rows(Var a, Var gamma, Var beta) {
    constexpr double kLnEps = 1e-5;
    const Mat& A = val(a);
    const Mat& G = val(gamma);
    const Mat& B = val(beta);
    require(G.rows == 1 && G.cols == A.cols && B.rows == 1 && B.cols == A.cols,
            "layernorm: gamma/beta must be 1xC");
    const int C = A.cols;
    Mat out(A.rows, C);
    Mat xhat(A.rows, C);  // cached for backward via closure copy
    std::vector<double> inv_std(A.rows);
    for (int r = 0; r < A.rows; ++r) {
        double mu = 0.0;
        for (int c = 0; c < C; ++c) mu += A.at(r, c);
        mu /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
            const double d = A.at(r, c) - mu;
            var += d * d;
        }
        var /= C;
        const double is = 1.0 / std::sqrt(var + kLnEps);
        inv_std[r] = is;
        for (int c = 0; c < C; ++c) {
            xhat.at(r, c) = (A.at(r, c) - mu) * is;
            out.at(r, c) = G.at(0, c) * xhat.at(r, c) + B.at(0, c);
        }
    }
    const bool needs = ng(a) || ng(gamma) || ng(beta);
    const int ai = a.idx, gi = gamma.idx, bi = beta.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, gi, bi, xhat = std::move(xhat),
                inv_std = std::move(inv_std)](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& G2 = t.nodes_[gi].val;
            const int C2 = g.cols;
            if (t.nodes_[gi].needs_grad) {
                Mat& gg = t.gslot(gi);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < C2; ++c)
                        gg.at(0, c) += g.at(r, c) * xhat.at(r, c);
            }
            if (t.nodes_[bi].needs_grad) {
                Mat& gb = t.gslot(bi);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < C2; ++c) gb.at(0, c) += g.at(r, c);
            }
            if (t.nodes_[ai].needs_grad) {
                Mat& ga = t.gslot(ai);
                for (int r = 0; r < g.rows; ++r) {
                    double mean_h = 0.0, mean_hx = 0.0;
                    for (int c = 0; c < C2; ++c) {
                        const double h = g.at(r, c) * G2.at(0, c);
                        mean_h += h;
                        mean_hx += h * xhat.at(r, c);
                    }
                    mean_h /= C2;
                    mean_hx /= C2;
                    for (int c = 0; c < C2; ++c) {
                        const double h = g.at(r, c) * G2.at(0, c);
                        ga.at(r, c) +=
                            inv_std[r] * (h - mean_h - xhat.at(r, c) * mean_hx);
                    }
                }
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- shape plumbing ---------------------------------------------------------

Var Tape::reshape(Var a, int rows, int cols) {
    const Mat& A = val(a);
    require(rows * cols == A.size(), "reshape: element count mismatch");
    Mat out = A;
    out.rows = rows;
    out.cols = cols;
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) { axpy(t.gslot(ai), t.nodes_[self].grad); };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::slice_rows(Var a, int r0, int r1) {
    const Mat& A = val(a);
    require(0 <= r0 && r0 < r1 && r1 <= A.rows, "slice_rows: bad range");
    Mat out(r1 - r0, A.cols);
    std::copy(A.v.begin() + size_t(r0) * A.cols, A.v.begin() + size_t(r1) * A.cols,
              out.v.begin());
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, r0](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.gslot(ai);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga.at(r0 + r, c) += g.at(r, c);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Mat& A = val(a);
    require(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols: bad range");
    Mat out(A.rows, c1 - c0);
    for (int r = 0; r < A.rows; ++r)
        for (int c = c0; c < c1; ++c) out.at(r, c - c0) = A.at(r, c);
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai, c0](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            Mat& ga = t.gslot(ai);
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) ga.at(r, c0 + c) += g.at(r, c);
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_rows: empty input");
    int total = 0;
    const int cols = val(parts[0]).cols;
    bool needs = false;
    for (Var p : parts) {
        require(val(p).cols == cols, "concat_rows: column mismatch");
        total += val(p).rows;
        needs = needs || ng(p);
    }
    Mat out(total, cols);
    int r = 0;
    for (Var p : parts) {
        const Mat& P = val(p);
        std::copy(P.v.begin(), P.v.end(), out.v.begin() + size_t(r) * cols);
        r += P.rows;
    }
    std::vector<int> idxs;
    for (Var p : parts) idxs.push_back(p.idx);
    const int self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, idxs](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            int row = 0;
            for (int pi : idxs) {
                const int pr = t.nodes_[pi].val.rows;
                if (t.nodes_[pi].needs_grad) {
                    Mat& gp = t.gslot(pi);
                    for (int r2 = 0; r2 < pr; ++r2)
                        for (int c = 0; c < g.cols; ++c)
                            gp.at(r2, c) += g.at(row + r2, c);
                }
                row += pr;
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_cols: empty input");
    const int rows = val(parts[0]).rows;
    int total = 0;
    bool needs = false;
    for (Var p : parts) {
        require(val(p).rows == rows, "concat_cols: row mismatch");
        total += val(p).cols;
        needs = needs || ng(p);
    }
    Mat out(rows, total);
    int c0 = 0;
    for (Var p : parts) {
        const Mat& P = val(p);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < P.cols; ++c) out.at(r, c0 + c) = P.at(r, c);
        c0 += P.cols;
    }
    std::vector<int> idxs;
    for (Var p : parts) idxs.push_back(p.idx);
    const int self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, idxs](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            int col = 0;
            for (int pi : idxs) {
                const int pc = t.nodes_[pi].val.cols;
                if (t.nodes_[pi].needs_grad) {
                    Mat& gp = t.gslot(pi);
                    for (int r = 0; r < g.rows; ++r)
                        for (int c = 0; c < pc; ++c) gp.at(r, c) += g.at(r, col + c);
                }
                col += pc;
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- reductions -------------------------------------------------------------

Var Tape::sum_all(Var a) {
    const Mat& A = val(a);
    double s = 0.0;
    for (double x : A.v) s += x;
    Mat out(1, 1);
    out.v[0] = s;
    const bool needs = ng(a);
    const int ai = a.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ai](Tape& t) {
            const double g = t.nodes_[self].grad.v[0];
            Mat& ga = t.gslot(ai);
            for (double& x : ga.v) x += g;
        };
    return {push(std::move(out), needs, std::move(back))};
}

Var Tape::mean_all(Var a) {
    const int n = val(a).size();
    require(n > 0, "mean_all: empty matrix");
    return scale(sum_all(a), 1.0 / n);
}

// --- bilinear sampling (Eq. 1 pattern) ---------------------------------------

Var Tape::bilinear(Var fmap, int H, int W, Var pts) {
    const Mat& F = val(fmap);
    const Mat& P = val(pts);
    require(H >= 2 && W >= 2, "bilinear: grid must be at least 2x2");
    require(F.rows == H * W, "bilinear: fmap rows != H*W");
    require(P.cols == 2, "bilinear: pts must be Nx2");
    const int n = P.rows, d = F.cols;

    struct Corner {
        int x1, y1;
        double wx, wy;
        bool x_free, y_free;  // clamped coordinates get zero point-gradient
    };
    std::vector<Corner> corners(n);
    Mat out(n, d);
    for (int i = 0; i < n; ++i) {
        double x = P.at(i, 0), y = P.at(i, 1);
        const bool x_free = x > 0.0 && x < W - 1;
        const bool y_free = y > 0.0 && y < H - 1;
        x = std::clamp(x, 0.0, double(W - 1));
        y = std::clamp(y, 0.0, double(H - 1));
        const int x1 = std::min(int(std::floor(x)), W - 2);
        const int y1 = std::min(int(std::floor(y)), H - 2);
        const double wx = x - x1, wy = y - y1;
        corners[i] = {x1, y1, wx, wy, x_free, y_free};
        const double* f11 = &F.v[size_t(y1 * W + x1) * d];
        const double* f21 = &F.v[size_t(y1 * W + x1 + 1) * d];
        const double* f12 = &F.v[size_t((y1 + 1) * W + x1) * d];
        const double* f22 = &F.v[size_t((y1 + 1) * W + x1 + 1) * d];
        double* o = &out.v[size_t(i) * d];
        for (int c = 0; c < d; ++c)
            o[c] = (1 - wx) * (1 - wy) * f11[c] + wx * (1 - wy) * f21[c] +
                   (1 - wx) * wy * f12[c] + wx * wy * f22[c];
    }
    const bool needs = ng(fmap) || ng(pts);
    const int fi = fmap.idx, pi = pts.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, fi, pi, W, d, n, corners = std::move(corners)](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& F2 = t.nodes_[fi].val;
            const bool want_f = t.nodes_[fi].needs_grad;
            const bool want_p = t.nodes_[pi].needs_grad;
            Mat* gf = want_f ? &t.gslot(fi) : nullptr;
            Mat* gp = want_p ? &t.gslot(pi) : nullptr;
            for (int i = 0; i < n; ++i) {
                const Corner& cr = corners[i];
                const size_t r11 = size_t(cr.y1 * W + cr.x1);
                const size_t r21 = r11 + 1;
                const size_t r12 = size_t((cr.y1 + 1) * W + cr.x1);
                const size_t r22 = r12 + 1;
                const double* go = &g.v[size_t(i) * d];
                if (want_f) {
                    double* g11 = &gf->v[r11 * d];
                    double* g21 = &gf->v[r21 * d];
                    double* g12 = &gf->v[r12 * d];
                    double* g22 = &gf->v[r22 * d];
                    for (int c = 0; c < d; ++c) {
                        g11[c] += (1 - cr.wx) * (1 - cr.wy) * go[c];
                        g21[c] += cr.wx * (1 - cr.wy) * go[c];
                        g12[c] += (1 - cr.wx) * cr.wy * go[c];
                        g22[c] += cr.wx * cr.wy * go[c];
                    }
                }
                if (want_p) {
                    const double* f11 = &F2.v[r11 * d];
                    const double* f21 = &F2.v[r21 * d];
                    const double* f12 = &F2.v[r12 * d];
                    const double* f22 = &F2.v[r22 * d];
                    double dx = 0.0, dy = 0.0;
                    for (int c = 0; c < d; ++c) {
                        dx += go[c] * ((1 - cr.wy) * (f21[c] - f11[c]) +
                                       cr.wy * (f22[c] - f12[c]));
                        dy += go[c] * ((1 - cr.wx) * (f12[c] - f11[c]) +
                                       cr.wx * (f22[c] - f21[c]));
                    }
                    if (cr.x_free) gp->at(i, 0) += dx;
                    if (cr.y_free) gp->at(i, 1) += dy;
                }
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- convolution -------------------------------------------------------------

Var Tape::conv2d(Var img, int H, int W, Var weight, Var bias, int k, int s) {
    const Mat& I = val(img);
    const Mat& Wt = val(weight);
    const Mat& B = val(bias);
    require(I.cols == H * W, "conv2d: img cols != H*W");
    const int cin = I.rows;
    require(Wt.cols == cin * k * k, "conv2d: weight cols != Cin*k*k");
    const int cout = Wt.rows;
    require(B.rows == 1 && B.cols == cout, "conv2d: bias must be 1xCout");
    require(k >= 1 && s >= 1 && (H - k) % s == 0 && (W - k) % s == 0,
            "conv2d: kernel/stride must tile the image exactly");
    const int oh = (H - k) / s + 1, ow = (W - k) / s + 1;

    Mat out(cout, oh * ow);
    for (int co = 0; co < cout; ++co) {
        const double b = B.at(0, co);
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = b;
                for (int ci = 0; ci < cin; ++ci)
                    for (int ky = 0; ky < k; ++ky) {
                        const double* irow = &I.v[size_t(ci) * H * W +
                                                  size_t(oy * s + ky) * W + ox * s];
                        const double* wrow =
                            &Wt.v[size_t(co) * Wt.cols + size_t(ci) * k * k +
                                  size_t(ky) * k];
                        for (int kx = 0; kx < k; ++kx) acc += wrow[kx] * irow[kx];
                    }
                out.at(co, oy * ow + ox) = acc;
            }
    }
    const bool needs = ng(img) || ng(weight) || ng(bias);
    const int ii = img.idx, wi = weight.idx, bi = bias.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, ii, wi, bi, H, W, k, s, cin, cout, oh, ow](Tape& t) {
            const Mat& g = t.nodes_[self].grad;
            const Mat& I2 = t.nodes_[ii].val;
            const Mat& W2 = t.nodes_[wi].val;
            const bool want_i = t.nodes_[ii].needs_grad;
            const bool want_w = t.nodes_[wi].needs_grad;
            const bool want_b = t.nodes_[bi].needs_grad;
            Mat* gi = want_i ? &t.gslot(ii) : nullptr;
            Mat* gw = want_w ? &t.gslot(wi) : nullptr;
            Mat* gb = want_b ? &t.gslot(bi) : nullptr;
            for (int co = 0; co < cout; ++co)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        const double go = g.at(co, oy * ow + ox);
                        if (go == 0.0) continue;
                        if (want_b) gb->at(0, co) += go;
                        for (int ci = 0; ci < cin; ++ci)
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx) {
                                    const size_t ipix = size_t(ci) * H * W +
                                                        size_t(oy * s + ky) * W +
                                                        size_t(ox * s + kx);
                                    const size_t wpix = size_t(co) * W2.cols +
                                                        size_t(ci) * k * k +
                                                        size_t(ky) * k + kx;
                                    if (want_w) gw->v[wpix] += go * I2.v[ipix];
                                    if (want_i) gi->v[ipix] += go * W2.v[wpix];
                                }
                    }
        };
    return {push(std::move(out), needs, std::move(back))};
}

// --- losses -------------------------------------------------------------------

Var Tape::bce_with_logits(Var z, const Mat& targets) {
    const Mat& Z = val(z);
    require(Z.cols == 1 && targets.rows == Z.rows && targets.cols == 1,
            "bce_with_logits: z and targets must be Nx1");
    const int n = Z.rows;
    require(n > 0, "bce_with_logits: empty batch");
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double zi = Z.v[i], yi = targets.v[i];
        // max(z,0) - z*y + log(1 + exp(-|z|))
        loss += std::max(zi, 0.0) - zi * yi + std::log1p(std::exp(-std::abs(zi)));
    }
    Mat out(1, 1);
    out.v[0] = loss / n;
    const bool needs = ng(z);
    const int zi_ = z.idx, self = int(nodes_.size());
    std::function<void(Tape&)> back;
    if (needs)
        back = [self, zi_, targets, n](Tape& t) {
            const double g = t.nodes_[self].grad.v[0];
            const Mat& Z2 = t.nodes_[zi_].val;
            Mat& gz = t.gslot(zi_);
            for (int i = 0; i < n; ++i) {
                const double p = 1.0 / (1.0 + std::exp(-Z2.v[i]));
                gz.v[i] += g * (p - targets.v[i]) / n;
            }
        };
    return {push(std::move(out), needs, std::move(back))};
}

}  // namespace aoitr::nn
