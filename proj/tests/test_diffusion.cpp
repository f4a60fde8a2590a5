#include <cmath>

#include "doctest.h"
#include "dtsst/diffusion.hpp"

using namespace dtsst;

namespace {

Mat<double> random_row(Rng& rng, Eigen::Index n) {
    Mat<double> m(1, n);
    rng.fill_normal(m.data(), static_cast<std::size_t>(n));
    return m;
}

Mat<float> random_row_f(Rng& rng, Eigen::Index n) {
    Mat<float> m(1, n);
    rng.fill_normal(m.data(), static_cast<std::size_t>(n));
    return m;
}

Mat<float> sine_row(Eigen::Index n, double period, double phase) {
    Mat<float> m(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(0, i) = static_cast<float>(std::sin(2.0 * 3.141592653589793 * static_cast<double>(i) / period + phase));
    }
    return m;
}

} // namespace

TEST_CASE("schedule matches an independent product loop") {
    const NoiseSchedule s;
    CHECK(s.steps() == 500);
    CHECK(s.alpha_bar(1) == 0.9999);
    CHECK(s.beta(1) == 1e-4);
    CHECK(s.beta(500) == doctest::Approx(2e-2).epsilon(1e-15));
    CHECK(s.alpha_bar(0) == 1.0);
    double prod = 1.0;
    double worst = 0.0;
    for (int t = 1; t <= 500; ++t) {
        const double beta = 1e-4 + (2e-2 - 1e-4) * static_cast<double>(t - 1) / 499.0;
        prod *= 1.0 - beta;
        worst = std::max(worst, std::abs(s.alpha_bar(t) - prod));
        const double prev = t == 1 ? 1.0 : s.alpha_bar(t - 1);
        const double var = beta * (1.0 - prev) / (1.0 - s.alpha_bar(t));
        CHECK(std::abs(s.sigma(t) - std::sqrt(var)) <= 1e-12);
    }
    CHECK(worst <= 1e-12);
    CHECK(s.sigma(1) == 0.0);
    CHECK_THROWS_AS(s.alpha_bar(501), InvalidArgument);
    CHECK_THROWS_AS(s.beta(0), InvalidArgument);
    CHECK_THROWS_AS(NoiseSchedule(0), InvalidArgument);
}

TEST_CASE("forward noise") {
    const NoiseSchedule s;
    Rng rng(1);
    const Mat<double> x0 = random_row(rng, 16);
    const Mat<double> eps = random_row(rng, 16);
    const Mat<double> xt = forward_noise<double>(s, x0, 250, eps);
    const Mat<double> expected = std::sqrt(s.alpha_bar(250)) * x0 + std::sqrt(1.0 - s.alpha_bar(250)) * eps;
    CHECK((xt - expected).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK_THROWS_AS(forward_noise<double>(s, x0, 0, eps), InvalidArgument);
    CHECK_THROWS_AS(forward_noise<double>(s, x0, 501, eps), InvalidArgument);
}

TEST_CASE("guidance combination") {
    Rng rng(2);
    const Mat<double> u = random_row(rng, 12);
    const Mat<double> c = random_row(rng, 12);
    const Mat<double> st = random_row(rng, 12);
    CHECK(combine_guidance<double>(u, c, st, 0.0, 0.0) == u);
    for (auto [sc, ss] : {std::pair{1.0, 0.25}, std::pair{0.25, 1.0}, std::pair{2.0, 2.0}, std::pair{1.0, 1.0}}) {
        const Mat<double> e = combine_guidance<double>(u, c, st, sc, ss);
        const Mat<double> affine = (1.0 - sc - ss) * u + sc * c + ss * st;
        CHECK((e - affine).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("reverse step update") {
    const NoiseSchedule s;
    Rng rng(3);
    const Mat<double> x = random_row(rng, 8);
    const Mat<double> e = random_row(rng, 8);
    const Mat<double> z = random_row(rng, 8);
    GuidanceConfig g;
    g.temperature = 0.5;
    const int t = 100;
    const Mat<double> mean = (x - (1 - s.alpha(t)) / std::sqrt(1 - s.alpha_bar(t)) * e) / std::sqrt(s.alpha(t));
    CHECK((reverse_step<double>(s, x, t, e, g, &z) - (mean + 0.5 * s.sigma(t) * z)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((reverse_step<double>(s, x, t, e, g, nullptr) - mean).cwiseAbs().maxCoeff() <= 1e-12);
    // No noise at the last step.
    CHECK(reverse_step<double>(s, x, 1, e, g, &z) == reverse_step<double>(s, x, 1, e, g, nullptr));

    // The clipped form equals the unclipped one when no clamping happens.
    GuidanceConfig clip = g;
    clip.clip = true;
    clip.clip_value = 1e6;
    CHECK((reverse_step<double>(s, x, t, e, clip, nullptr) - mean).cwiseAbs().maxCoeff() <= 1e-9);
    clip.clip_value = 1e-3;
    const Mat<double> clipped = reverse_step<double>(s, x, 500, e, clip, nullptr);
    CHECK(clipped.allFinite());
    CHECK((clipped - reverse_step<double>(s, x, 500, e, g, nullptr)).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("guidance config validation") {
    GuidanceConfig g;
    g.temperature = -0.1;
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
    g.temperature = 1.0;
    g.content_scale = std::nan("");
    CHECK_THROWS_AS(g.validate(), InvalidArgument);
}

TEST_CASE("zero guidance reproduces the unconditional sampler bit for bit") {
    Model<float> model(tiny_model_config());
    model.init(4);
    const NoiseSchedule s;
    Rng data(5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Mat<float> a = random_row_f(data, 32);
        const Mat<float> b = random_row_f(data, 32);
        GuidanceConfig g;
        g.content_scale = 0.0;
        g.style_scale = 0.0;
        Rng r1(seed);
        Rng r2(seed);
        const Mat<float> guided = sample_normalized<float>(model, s, a, b, g, r1);
        const Mat<float> free = sample_unconditional<float>(model, s, 32, g, r2);
        CHECK(guided == free);
    }
}

TEST_CASE("temperature zero is deterministic; sampling is seeded") {
    Model<float> model(tiny_model_config());
    model.init(6);
    const NoiseSchedule s;
    Rng data(7);
    Series a(32), b(32);
    for (std::size_t i = 0; i < 32; ++i) {
        a[i] = data.normal();
        b[i] = data.normal();
    }
    GuidanceConfig g;
    g.temperature = 0.0;
    CHECK(sample<float>(model, s, a, b, g, 3) == sample<float>(model, s, a, b, g, 3));
    g.temperature = 1.0;
    const Series x1 = sample<float>(model, s, a, b, g, 3);
    CHECK(x1 == sample<float>(model, s, a, b, g, 3));
    CHECK(x1 != sample<float>(model, s, a, b, g, 4));
    CHECK(x1.size() == 32);

    CHECK_THROWS_AS(sample<float>(model, s, a, Series(16, 0.0), g, 1), ShapeError);
    const std::vector<SeriesPair> pairs{{a, b}, {a, Series(16, 0.0)}};
    try {
        sample_batch<float>(model, s, pairs, g, {1, 2});
        FAIL("expected an error");
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("pair 1") != std::string::npos);
    }
}

TEST_CASE("sampler output is denormalized with content statistics") {
    Model<float> model(tiny_model_config());
    model.init(8);
    const NoiseSchedule s(20);
    Rng data(9);
    Series a(32), b(32);
    for (std::size_t i = 0; i < 32; ++i) {
        a[i] = 100.0 + 5.0 * data.normal();
        b[i] = data.normal();
    }
    GuidanceConfig g;
    const Series out = sample<float>(model, s, a, b, g, 1);
    Rng rng(1);
    const Normalized za = z_normalize(a);
    const Mat<float> norm = sample_normalized<float>(model, s, to_row<float>(za.values),
                                                     to_row<float>(z_normalize(b).values), g, rng);
    const Series expected = denormalize(to_series<float>(norm), za.mean, za.std);
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("adamw first step") {
    ParamStore<double> store;
    const ParamId id = store.add("w", {3});
    store.value(id)[0] = 1.0;
    store.value(id)[1] = -2.0;
    store.value(id)[2] = 0.5;
    store.grad(id)[0] = 0.1;
    store.grad(id)[1] = -3.0;
    store.grad(id)[2] = 0.0;
    AdamWConfig cfg;
    AdamW<double> opt(store, cfg);
    opt.step(store);
    // After one step m / sqrt(v) is sign(g) up to eps.
    const double lr = 3e-4;
    CHECK(store.value(id)[0] == doctest::Approx(1.0 * (1 - lr * 0.01) - lr * 0.1 / (0.1 + 1e-8)).epsilon(1e-14));
    CHECK(store.value(id)[1] == doctest::Approx(-2.0 * (1 - lr * 0.01) + lr * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
    CHECK(store.value(id)[2] == doctest::Approx(0.5 * (1 - lr * 0.01)).epsilon(1e-14));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("training step keeps the style kernels constrained and rejects NaN input") {
    Model<float> model(tiny_model_config());
    model.init(10);
    const NoiseSchedule s;
    AdamW<float> opt(model.params(), AdamWConfig{});
    Rng rng(11);
    std::vector<Mat<float>> batch{sine_row(32, 8, 0.0), sine_row(32, 12, 1.0)};
    for (int i = 0; i < 20; ++i) {
        train_step<float>(model, s, batch, opt, rng);
    }
    for (double c : {-10.0, -1.0, 0.0, 3.3, 10.0}) {
        const Mat<float> y = model.encode_style(Mat<float>::Constant(1, 32, static_cast<float>(c)));
        CHECK(y.cwiseAbs().maxCoeff() <= 1e-6f);
    }
    std::vector<float> before;
    for (const auto& e : model.params().entries()) {
        before.insert(before.end(), e.value.data(), e.value.data() + e.value.size());
    }
    batch[0](0, 3) = std::nanf("");
    CHECK_THROWS_AS(train_step<float>(model, s, batch, opt, rng), NumericError);
    std::vector<float> after;
    for (const auto& e : model.params().entries()) {
        after.insert(after.end(), e.value.data(), e.value.data() + e.value.size());
    }
    CHECK(before == after);
    CHECK_THROWS_AS(train_step<float>(model, s, {}, opt, rng), InvalidArgument);
}

TEST_CASE("tiny model loss decreases") {
    Model<float> model(tiny_model_config());
    model.init(12);
    const NoiseSchedule s;
    AdamWConfig oc;
    oc.lr = 3e-3;
    AdamW<float> opt(model.params(), oc);
    Rng rng(13);
    std::vector<Mat<float>> batch;
    for (int i = 0; i < 8; ++i) {
        batch.push_back(sine_row(32, 8.0 + i, 0.3 * i));
    }
    std::vector<double> losses;
    for (int i = 0; i < 300; ++i) {
        losses.push_back(train_step<float>(model, s, batch, opt, rng));
    }
    double first = 0.0, last = 0.0;
    for (int i = 0; i < 30; ++i) {
        first += losses[static_cast<std::size_t>(i)];
        last += losses[losses.size() - 1 - static_cast<std::size_t>(i)];
    }
    MESSAGE("first decile " << first / 30 << ", last decile " << last / 30);
    CHECK(last < 0.5 * first);
}
