#include <cmath>

#include "doctest.h"
#include "dtsst/numerics/grad_check.hpp"
#include "dtsst/numerics/ops.hpp"
#include "dtsst/numerics/rng.hpp"

using namespace dtsst;

namespace {

Mat<double> row(std::initializer_list<double> v) {
    Mat<double> m(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        m(0, i++) = x;
    }
    return m;
}

Mat<double> random_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1, double hi = 1) {
    Mat<double> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m(i) = rng.uniform(lo, hi);
    }
    return m;
}

} // namespace

TEST_CASE("conv1d reflect picks the mirrored left neighbour") {
    const Conv1dShape s{1, 1, 3, 1, Padding::reflect};
    const Mat<double> w = row({1, 0, 0});
    const Mat<double> y = conv1d<double>(row({1, 2, 3}), w, nullptr, s);
    CHECK(y == row({2, 1, 2}));
}

TEST_CASE("conv1d identity kernel with reflect padding is exact identity") {
    Rng rng(3);
    const Conv1dShape s{1, 1, 3, 1, Padding::reflect};
    const Mat<double> x = random_mat(rng, 1, 37, -5, 5);
    CHECK(conv1d<double>(x, row({0, 1, 0}), nullptr, s) == x);
    const Mat<float> xf = x.cast<float>();
    const Mat<float> wf = row({0, 1, 0}).cast<float>();
    CHECK(conv1d<float>(xf, wf, nullptr, s) == xf);
}

TEST_CASE("conv1d zero-mean kernel annihilates constants") {
    const Conv1dShape s{1, 1, 3, 1, Padding::reflect};
    const Mat<double> x = Mat<double>::Constant(1, 9, 4.25);
    const Mat<double> y = conv1d<double>(x, row({-1, 2, -1}), nullptr, s);
    CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conv1d output length and errors") {
    const Conv1dShape strided{1, 4, 5, 8, Padding::zero};
    CHECK(strided.output_length(128) == 16);
    const Conv1dShape valid{1, 1, 3, 1, Padding::none};
    CHECK(valid.output_length(10) == 8);
    const Conv1dShape refl{1, 1, 5, 1, Padding::reflect};
    CHECK_THROWS_AS(conv1d<double>(row({1, 2, 3}), row({1, 1, 1, 1, 1}), nullptr, refl), ShapeError);
    const Conv1dShape two_in{2, 1, 3, 1, Padding::zero};
    CHECK_THROWS_AS(conv1d<double>(row({1, 2, 3}), row({1, 1, 1, 1, 1, 1}), nullptr, two_in), ShapeError);
}

TEST_CASE("conv1d matches a direct loop, with stride and bias") {
    Rng rng(5);
    for (Padding pad : {Padding::zero, Padding::reflect, Padding::none}) {
        const Conv1dShape s{2, 3, 5, 2, pad};
        const Mat<double> x = random_mat(rng, 2, 23);
        const Mat<double> w = random_mat(rng, 3, 10);
        const double b[3] = {0.1, -0.2, 0.3};
        const Mat<double> y = conv1d<double>(x, w, b, s);
        const auto n = static_cast<std::ptrdiff_t>(x.cols());
        REQUIRE(static_cast<std::size_t>(y.cols()) == s.output_length(23));
        for (Eigen::Index o = 0; o < 3; ++o) {
            for (Eigen::Index j = 0; j < y.cols(); ++j) {
                double acc = b[o];
                for (Eigen::Index c = 0; c < 2; ++c) {
                    for (Eigen::Index k = 0; k < 5; ++k) {
                        std::ptrdiff_t src = j * 2 + k - static_cast<std::ptrdiff_t>(s.pad_left());
                        double v = 0.0;
                        if (src >= 0 && src < n) {
                            v = x(c, src);
                        } else if (pad == Padding::reflect) {
                            v = x(c, src < 0 ? -src : 2 * (n - 1) - src);
                        }
                        acc += w(o, c * 5 + k) * v;
                    }
                }
                CHECK(y(o, j) == doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("conv1d backward matches finite differences") {
    Rng rng(9);
    for (bool centered : {false, true}) {
        const Conv1dShape s{2, 3, 3, 1, Padding::reflect, centered};
        ParamStore<double> store;
        const auto xw = store.add("x", {2, 11});
        const auto ww = store.add("w", {3, 6});
        const auto bw = store.add("b", {3});
        for (auto& e : store.entries()) {
            rng.fill_normal(e.value.data(), e.value.size());
        }
        const Mat<double> probe = random_mat(rng, 3, 11);
        auto loss = [&](ParamStore<double>& p, bool with_grad) {
            const Mat<double> y = conv1d<double>(p.mat(xw), p.mat(ww), p.value(bw).data(), s);
            if (with_grad) {
                p.grad_mat(xw) += conv1d_backward<double>(p.mat(xw), p.mat(ww), probe, s, p.grad_mat(ww),
                                                          p.grad(bw).data(), true);
            }
            return y.cwiseProduct(probe).sum();
        };
        const auto report = grad_check(loss, store, {120, 1e-7, 1e-5, 2});
        INFO(report.summary());
        CHECK(report.passed);
    }
}

TEST_CASE("center-referenced conv ignores constants exactly in fp32") {
    Rng rng(1);
    const Conv1dShape s{1, 4, 3, 1, Padding::reflect, true};
    Mat<float> w(4, 3);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w(i) = static_cast<float>(rng.normal());
    }
    for (float c : {-10.0f, -0.3f, 7.77f}) {
        const Mat<float> x = Mat<float>::Constant(1, 16, c);
        CHECK(conv1d<float>(x, w, nullptr, s).cwiseAbs().maxCoeff() == 0.0f);
    }
}

TEST_CASE("linear_interp_resize") {
    CHECK(linear_interp_resize<double>(row({0, 1}), 3) == row({0, 0.5, 1}));
    CHECK(linear_interp_resize<double>(row({0, 2, 4}), 5) == row({0, 1, 2, 3, 4}));
    const Mat<double> x = row({3, -1, 4, 1, -5});
    CHECK(linear_interp_resize<double>(x, 5) == x);
    CHECK_THROWS_AS(linear_interp_resize<double>(row({1}), 4), ShapeError);

    Rng rng(4);
    const Mat<double> small = random_mat(rng, 1, 6);
    const Mat<double> probe = random_mat(rng, 1, 17);
    const Mat<double> big = linear_interp_resize<double>(small, 17);
    CHECK(big(0, 0) == small(0, 0));
    CHECK(big(0, 16) == doctest::Approx(small(0, 5)).epsilon(1e-14));
    // Adjoint identity <R x, p> = <x, R^T p>.
    const Mat<double> back = linear_interp_resize_backward<double>(probe, 6);
    CHECK(big.cwiseProduct(probe).sum() == doctest::Approx(small.cwiseProduct(back).sum()).epsilon(1e-12));
}

TEST_CASE("softmax_rows") {
    Mat<double> m(3, 2);
    m << 0, 0, 1000, 1000, 0, std::log(3.0);
    const Mat<double> p = softmax_rows<double>(m);
    CHECK(p(0, 0) == doctest::Approx(0.5));
    CHECK(p(1, 1) == doctest::Approx(0.5));
    CHECK(p(2, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p(2, 1) == doctest::Approx(0.75).epsilon(1e-14));

    Mat<double> bad = m;
    bad(1, 0) = std::nan("");
    CHECK_THROWS_AS(softmax_rows<double>(bad), NumericError);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat<double> r = random_mat(rng, 8, 8, -50, 50);
        const Mat<double> q = softmax_rows<double>(r);
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            CHECK(std::abs(q.row(i).sum() - 1.0) <= 1e-6);
        }
        CHECK(q.minCoeff() >= 0.0);
        CHECK(q.maxCoeff() <= 1.0);
        const Mat<float> qf = softmax_rows<float>(r.cast<float>());
        for (Eigen::Index i = 0; i < qf.rows(); ++i) {
            CHECK(std::abs(qf.row(i).sum() - 1.0f) <= 1e-6f);
        }
    }
}

TEST_CASE("layer_norm") {
    const RowVec<double> one = RowVec<double>::Ones(2);
    const RowVec<double> zero = RowVec<double>::Zero(2);
    CHECK(layer_norm<double>(row({5, 5}), one, zero).cwiseAbs().maxCoeff() == 0.0);
    const Mat<double> y = layer_norm<double>(row({-1, 1}), one, zero);
    CHECK(y(0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
    CHECK(y(0, 1) == doctest::Approx(1.0).epsilon(1e-5));
    const Mat<double> c = layer_norm<double>(row({3, -2, 8}), RowVec<double>::Zero(3), RowVec<double>::Constant(3, 2.5));
    CHECK(c == row({2.5, 2.5, 2.5}));
    CHECK_THROWS_AS(layer_norm<double>(row({1}), RowVec<double>::Ones(1), RowVec<double>::Zero(1)), ShapeError);
}

TEST_CASE("layer_norm backward matches finite differences") {
    Rng rng(12);
    ParamStore<double> store;
    const auto xw = store.add("x", {4, 6});
    const auto gw = store.add("gain", {6});
    const auto sw = store.add("shift", {6});
    for (auto& e : store.entries()) {
        rng.fill_normal(e.value.data(), e.value.size());
    }
    const Mat<double> probe = random_mat(rng, 4, 6);
    auto loss = [&](ParamStore<double>& p, bool with_grad) {
        LayerNormCache<double> cache;
        const Mat<double> y = layer_norm<double>(p.mat(xw), p.row(gw), p.row(sw), &cache);
        if (with_grad) {
            p.grad_mat(xw) += layer_norm_backward<double>(cache, p.row(gw), probe, p.grad_row(gw), p.grad_row(sw));
        }
        return y.cwiseProduct(probe).sum();
    };
    const auto report = grad_check(loss, store, {100, 1e-7, 1e-5, 3});
    INFO(report.summary());
    CHECK(report.passed);
}

TEST_CASE("activations") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(silu(0.0) == 0.0);
    CHECK(silu(1.0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-15));
    CHECK(silu(1.0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(gelu(1.0) == doctest::Approx(0.5 * (1 + std::tanh(std::sqrt(2 / M_PI) * (1 + 0.044715)))).epsilon(1e-15));
    for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
        const double h = 1e-6;
        CHECK(gelu_grad(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
        CHECK(silu_grad(x) == doctest::Approx((silu(x + h) - silu(x - h)) / (2 * h)).epsilon(1e-8));
    }
}

TEST_CASE("grad_check basics") {
    ParamStore<double> store;
    const auto w = store.add("w", {1});
    store.value(w)[0] = 3.0;
    auto quad = [&](ParamStore<double>& p, bool with_grad) {
        const double v = p.value(w)[0];
        if (with_grad) {
            p.grad(w)[0] += 2 * v;
        }
        return v * v;
    };
    auto report = grad_check(quad, store, {5, 1e-4, 1e-5, 1});
    CHECK(report.passed);
    CHECK(report.worst_analytic == 6.0);
    CHECK(std::abs(report.worst_numeric - 6.0) < 1e-8);

    auto corrupted = [&](ParamStore<double>& p, bool with_grad) {
        const double v = p.value(w)[0];
        if (with_grad) {
            p.grad(w)[0] += 2 * v + 0.5;
        }
        return v * v;
    };
    report = grad_check(corrupted, store, {5, 1e-4, 1e-5, 1});
    CHECK_FALSE(report.passed);
    CHECK(report.worst_name == "w");
    CHECK(report.worst_analytic == 6.5);
}

TEST_CASE("rng is reproducible and streams differ") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.normal() == b.normal());
    }
    Rng s1 = Rng::for_stream(42, 1);
    Rng s2 = Rng::for_stream(42, 2);
    Rng s1b = Rng::for_stream(42, 1);
    const double v = s1.uniform();
    CHECK(v == s1b.uniform());
    CHECK(v != s2.uniform());
    Rng c(1);
    double mean = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        mean += z;
        sq += z * z;
    }
    mean /= n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    for (int i = 0; i < 1000; ++i) {
        const auto k = c.uniform_int(3, 7);
        CHECK(k >= 3);
        CHECK(k <= 7);
    }
}

TEST_CASE("array shape checks") {
    CHECK_THROWS_AS(Array<double>({2, 0}), ShapeError);
    CHECK_THROWS_AS(Array<double>({2, 3}, std::vector<double>(5)), ShapeError);
    Array<double> a({2, 3, 4});
    CHECK(a.size() == 24);
    CHECK(a.as_matrix().rows() == 2);
    CHECK(a.as_matrix().cols() == 12);
}
