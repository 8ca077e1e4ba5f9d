#include <doctest.h>

#include <cmath>

#include "aoitr/tensor.hpp"
#include "support_nn.hpp"

using namespace aoitr;
using namespace aoitr::nn;
using oracle::gradcheck;
using oracle::random_mat;
using oracle::random_mat_nonzero;

namespace {

constexpr double kTol = 1e-4;  // rel. err bound for all gradient checks

// Convenience: single-parameter scalar objective through a tape.
double check1(Rng& rng, const Mat& p0,
              const std::function<Var(Tape&, Var)>& build, int probes = 40) {
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var x = t.leaf(ps[0], true);
        Var root = build(t, x);
        if (grads) {
            t.backward(root);
            *grads = {t.grad(x)};
        }
        return t.val(root).v[0];
    };
    return gradcheck(eval, {p0}, rng, probes).max_rel_err;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul forward") {
    Tape t;
    Mat a(2, 3);
    a.v = {1, 2, 3, 4, 5, 6};
    Mat b(3, 2);
    b.v = {7, 8, 9, 10, 11, 12};
    Var c = t.matmul(t.leaf(a), t.leaf(b));
    CHECK(t.val(c).at(0, 0) == doctest::Approx(58));
    CHECK(t.val(c).at(0, 1) == doctest::Approx(64));
    CHECK(t.val(c).at(1, 0) == doctest::Approx(139));
    CHECK(t.val(c).at(1, 1) == doctest::Approx(154));
    CHECK_THROWS_AS((void)t.matmul(t.leaf(Mat(2, 3)), t.leaf(Mat(2, 3))), Error);
}

TEST_CASE("softmax rows are stochastic") {
    Rng rng(1);
    Tape t;
    Var y = t.softmax_rows(t.leaf(random_mat(rng, 5, 7, -4, 4)));
    for (int r = 0; r < 5; ++r) {
        double s = 0.0;
        for (int c = 0; c < 7; ++c) {
            s += t.val(y).at(r, c);
            CHECK(t.val(y).at(r, c) >= 0.0);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gradients: elementwise ops") {
    Rng rng(10);
    CHECK(check1(rng, random_mat(rng, 3, 4), [](Tape& t, Var x) {
              return t.mean_all(t.mul(x, t.scale(x, 0.5)));
          }) < kTol);
    CHECK(check1(rng, random_mat_nonzero(rng, 3, 4), [](Tape& t, Var x) {
              return t.sum_all(t.relu(x));
          }) < kTol);
    CHECK(check1(rng, random_mat_nonzero(rng, 3, 4), [](Tape& t, Var x) {
              return t.sum_all(t.abs_(x));
          }) < kTol);
    CHECK(check1(rng, random_mat(rng, 3, 4), [](Tape& t, Var x) {
              return t.sum_all(t.tanh_(x));
          }) < kTol);
    CHECK(check1(rng, random_mat(rng, 3, 4), [](Tape& t, Var x) {
              return t.sum_all(t.sigmoid(x));
          }) < kTol);
}

TEST_CASE("gradients: matmul chain with transpose") {
    Rng rng(11);
    const Mat a = random_mat(rng, 3, 4), b = random_mat(rng, 4, 5);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var va = t.leaf(ps[0], true), vb = t.leaf(ps[1], true);
        Var y = t.mean_all(t.matmul(t.transpose(t.matmul(va, vb)), va));
        if (grads) {
            t.backward(y);
            *grads = {t.grad(va), t.grad(vb)};
        }
        return t.val(y).v[0];
    };
    CHECK(gradcheck(eval, {a, b}, rng, 60).max_rel_err < kTol);
}

TEST_CASE("gradients: softmax") {
    Rng rng(12);
    CHECK(check1(rng, random_mat(rng, 4, 6, -3, 3), [](Tape& t, Var x) {
              Tape& tt = t;
              Var y = tt.softmax_rows(x);
              // weight by a fixed mask so the gradient is nontrivial
              Mat mask(4, 6);
              for (int i = 0; i < mask.size(); ++i) mask.v[i] = (i % 3) - 1.0;
              return tt.sum_all(tt.mul(y, tt.leaf(mask)));
          }, 60) < kTol);
}

TEST_CASE("gradients: layernorm with gamma and beta") {
    Rng rng(13);
    const Mat x = random_mat(rng, 5, 8), g = random_mat(rng, 1, 8, 0.5, 1.5),
              b = random_mat(rng, 1, 8);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var vx = t.leaf(ps[0], true), vg = t.leaf(ps[1], true),
            vb = t.leaf(ps[2], true);
        Mat mask(5, 8);
        for (int i = 0; i < mask.size(); ++i) mask.v[i] = std::sin(i * 0.7);
        Var y = t.sum_all(t.mul(t.layernorm_rows(vx, vg, vb), t.leaf(mask)));
        if (grads) {
            t.backward(y);
            *grads = {t.grad(vx), t.grad(vg), t.grad(vb)};
        }
        return t.val(y).v[0];
    };
    CHECK(gradcheck(eval, {x, g, b}, rng, 80).max_rel_err < kTol);
}

TEST_CASE("gradients: shape plumbing (slice/concat/reshape)") {
    Rng rng(14);
    const Mat a = random_mat(rng, 6, 4);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var x = t.leaf(ps[0], true);
        Var top = t.slice_rows(x, 0, 3);
        Var bottom = t.slice_rows(x, 3, 6);
        Var left = t.slice_cols(x, 0, 2);
        Var y = t.concat_rows({top, bottom});
        Var z = t.concat_cols({t.reshape(y, 6, 4), left});
        Var root = t.mean_all(t.mul(z, z));
        if (grads) {
            t.backward(root);
            *grads = {t.grad(x)};
        }
        return t.val(root).v[0];
    };
    CHECK(gradcheck(eval, {a}, rng, 50).max_rel_err < kTol);
}

TEST_CASE("gradients: add_rowvec broadcast") {
    Rng rng(15);
    const Mat a = random_mat(rng, 5, 3), r = random_mat(rng, 1, 3);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var va = t.leaf(ps[0], true), vr = t.leaf(ps[1], true);
        Var y = t.sum_all(t.tanh_(t.add_rowvec(va, vr)));
        if (grads) {
            t.backward(y);
            *grads = {t.grad(va), t.grad(vr)};
        }
        return t.val(y).v[0];
    };
    CHECK(gradcheck(eval, {a, r}, rng, 50).max_rel_err < kTol);
}

TEST_CASE("bilinear: exact on grid nodes and constant fields") {
    Tape t;
    Rng rng(16);
    const int H = 5, W = 7, d = 3;
    Mat f = random_mat(rng, H * W, d);
    Var vf = t.leaf(f);
    Mat pts(2, 2);
    pts.at(0, 0) = 4;  // exact node (x=4, y=2)
    pts.at(0, 1) = 2;
    pts.at(1, 0) = 6;  // corner node
    pts.at(1, 1) = 4;
    Var out = t.bilinear(vf, H, W, t.leaf(pts));
    for (int c = 0; c < d; ++c) {
        CHECK(t.val(out).at(0, c) == doctest::Approx(f.at(2 * W + 4, c)).epsilon(1e-12));
        CHECK(t.val(out).at(1, c) == doctest::Approx(f.at(4 * W + 6, c)).epsilon(1e-12));
    }
    Mat cf(H * W, 1, 3.25);  // constant field
    Mat anywhere(1, 2);
    anywhere.at(0, 0) = 3.721;
    anywhere.at(0, 1) = 1.113;
    Var o2 = t.bilinear(t.leaf(cf), H, W, t.leaf(anywhere));
    CHECK(t.val(o2).at(0, 0) == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("bilinear: reproduces any bilinear field to 1e-12 at 1000 points") {
    // Field f(x,y) = a*x + b*y + c*x*y + e is exactly bilinear, so the
    // four-neighbor mix must reproduce it to rounding.
    Rng rng(17);
    const int H = 9, W = 11;
    const double a = 0.7, b = -1.3, c = 0.42, e = 2.1;
    Mat f(H * W, 1);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) f.at(y * W + x, 0) = a * x + b * y + c * x * y + e;
    Tape t;
    Var vf = t.leaf(f);
    Mat pts(1000, 2);
    for (int i = 0; i < 1000; ++i) {
        pts.at(i, 0) = rng.uniform(0.0, W - 1.0);
        pts.at(i, 1) = rng.uniform(0.0, H - 1.0);
    }
    Var out = t.bilinear(vf, H, W, t.leaf(pts));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = pts.at(i, 0), y = pts.at(i, 1);
        const double want = a * x + b * y + c * x * y + e;
        worst = std::max(worst, std::abs(t.val(out).at(i, 0) - want));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("bilinear: output within corner bounds") {
    Rng rng(18);
    const int H = 6, W = 6, d = 2;
    Mat f = random_mat(rng, H * W, d);
    double fmin = 1e300, fmax = -1e300;
    for (double x : f.v) {
        fmin = std::min(fmin, x);
        fmax = std::max(fmax, x);
    }
    Tape t;
    Mat pts(200, 2);
    for (int i = 0; i < 200; ++i) {
        pts.at(i, 0) = rng.uniform(-2.0, W + 2.0);  // includes out-of-range clamps
        pts.at(i, 1) = rng.uniform(-2.0, H + 2.0);
    }
    Var out = t.bilinear(t.leaf(f), H, W, t.leaf(pts));
    for (double x : t.val(out).v) {
        CHECK(x >= fmin - 1e-12);
        CHECK(x <= fmax + 1e-12);
    }
}

TEST_CASE("gradients: bilinear w.r.t. fmap and points") {
    Rng rng(19);
    const int H = 5, W = 6, d = 4, n = 7;
    const Mat f = random_mat(rng, H * W, d);
    Mat pts(n, 2);
    for (int i = 0; i < n; ++i) {
        // keep fractional parts away from the floor kink
        pts.at(i, 0) = double(rng.uniform_int(W - 1)) + rng.uniform(0.2, 0.8);
        pts.at(i, 1) = double(rng.uniform_int(H - 1)) + rng.uniform(0.2, 0.8);
    }
    Mat mask = random_mat(rng, n, d);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var vf = t.leaf(ps[0], true), vp = t.leaf(ps[1], true);
        Var y = t.sum_all(t.mul(t.bilinear(vf, H, W, vp), t.leaf(mask)));
        if (grads) {
            t.backward(y);
            *grads = {t.grad(vf), t.grad(vp)};
        }
        return t.val(y).v[0];
    };
    CHECK(gradcheck(eval, {f, pts}, rng, 80).max_rel_err < kTol);
}

TEST_CASE("conv2d: forward shape and identity kernel") {
    Tape t;
    Mat img(1, 16);  // 1 x (4x4)
    for (int i = 0; i < 16; ++i) img.v[i] = i;
    Mat w(1, 4);  // 2x2 kernel picking the top-left pixel
    w.v = {1, 0, 0, 0};
    Mat b(1, 1);
    Var out = t.conv2d(t.leaf(img), 4, 4, t.leaf(w), t.leaf(b), 2, 2);
    REQUIRE(t.val(out).rows == 1);
    REQUIRE(t.val(out).cols == 4);
    CHECK(t.val(out).v == std::vector<double>{0, 2, 8, 10});
    CHECK_THROWS_AS((void)t.conv2d(t.leaf(img), 4, 4, t.leaf(w), t.leaf(b), 3, 2),
                    Error);
}

TEST_CASE("gradients: conv2d stack") {
    Rng rng(20);
    const int H = 6, W = 6;
    const Mat img = random_mat(rng, 2, H * W);
    const Mat w1 = random_mat(rng, 3, 2 * 2 * 2), b1 = random_mat(rng, 1, 3);
    const Mat w2 = random_mat(rng, 4, 3 * 3 * 3), b2 = random_mat(rng, 1, 4);
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t;
        Var vi = t.leaf(ps[0], true);
        Var vw1 = t.leaf(ps[1], true), vb1 = t.leaf(ps[2], true);
        Var vw2 = t.leaf(ps[3], true), vb2 = t.leaf(ps[4], true);
        Var h1 = t.tanh_(t.conv2d(vi, H, W, vw1, vb1, 2, 2));  // 3 x (3x3)
        Var h2 = t.conv2d(h1, 3, 3, vw2, vb2, 3, 1);           // 4 x 1
        Var y = t.mean_all(t.mul(h2, h2));
        if (grads) {
            t.backward(y);
            *grads = {t.grad(vi), t.grad(vw1), t.grad(vb1), t.grad(vw2), t.grad(vb2)};
        }
        return t.val(y).v[0];
    };
    CHECK(gradcheck(eval, {img, w1, b1, w2, b2}, rng, 100).max_rel_err < kTol);
}

TEST_CASE("bce_with_logits: value and gradient") {
    // At logit 0 the loss is ln 2 regardless of target.
    Tape t;
    Mat z(4, 1);
    Mat y(4, 1);
    y.v = {1, 0, 1, 0};
    Var loss = t.bce_with_logits(t.leaf(z), y);
    CHECK(t.val(loss).v[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Rng rng(21);
    const Mat z0 = random_mat(rng, 6, 1, -3, 3);
    Mat targets(6, 1);
    for (int i = 0; i < 6; ++i) targets.v[i] = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    auto eval = [&](const std::vector<Mat>& ps, std::vector<Mat>* grads) {
        Tape t2;
        Var vz = t2.leaf(ps[0], true);
        Var l = t2.bce_with_logits(vz, targets);
        if (grads) {
            t2.backward(l);
            *grads = {t2.grad(vz)};
        }
        return t2.val(l).v[0];
    };
    CHECK(gradcheck(eval, {z0}, rng, 30).max_rel_err < kTol);
}

TEST_CASE("l1 composition: value and subgradient sign") {
    Tape t;
    Mat p(1, 2);
    p.v = {0.1, -0.2};
    Mat gt(1, 2);  // zeros
    Var vp = t.leaf(p, true);
    Var loss = t.sum_all(t.abs_(t.sub(vp, t.leaf(gt))));
    CHECK(t.val(loss).v[0] == doctest::Approx(0.3).epsilon(1e-12));
    t.backward(loss);
    CHECK(t.grad(vp).v[0] == doctest::Approx(1.0));
    CHECK(t.grad(vp).v[1] == doctest::Approx(-1.0));
}

TEST_CASE("backward requires scalar root; grads unavailable before backward") {
    Tape t;
    Var x = t.leaf(Mat(2, 2, 1.0), true);
    Var y = t.add(x, x);
    CHECK_THROWS_AS(t.backward(y), Error);
    CHECK_THROWS_AS((void)t.grad(x), Error);
}

}  // TEST_SUITE
