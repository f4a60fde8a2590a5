// Acceptance run: one PASS/FAIL line per criterion. The trained checks share
// one desk model trained from scratch in the work directory.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "dtsst/baselines.hpp"
#include "dtsst/experiments.hpp"
#include "dtsst/numerics/grad_check.hpp"

using namespace dtsst;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double grad_tolerance = 1e-4;
constexpr std::size_t grad_samples = 200;
constexpr double grad_seconds = 120.0;
constexpr double decomposition_tolerance = 1e-12;
constexpr double decomposition_seconds = 10.0;
constexpr double constant_tolerance = 1e-6;
constexpr int constraint_steps = 500;
constexpr double constraint_seconds = 60.0;
constexpr double schedule_tolerance = 1e-12;
constexpr double convergence_ratio = 0.5;
constexpr double training_seconds = 30.0 * 60.0;
constexpr std::size_t transfer_pairs_count = 50;
constexpr std::size_t dispersion_repeats = 20;
constexpr double length_factor = 3.0;
constexpr double haar_tolerance = 1e-9;
constexpr std::uint64_t held_out_seed = 20240901;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

Mat<double> random_row(Rng& rng, std::size_t n) {
    Mat<double> m(1, static_cast<Eigen::Index>(n));
    rng.fill_normal(m.data(), n);
    return m;
}

Outcome gradient_fidelity() {
    const auto t0 = Clock::now();
    Model<double> model(tiny_model_config());
    model.init(3);
    Rng rng(9);
    // Move away from the zero-initialized head so every tensor carries gradient.
    for (auto& e : model.params().entries()) {
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            e.value[i] += 0.2 * rng.normal();
        }
    }
    model.project_style_constraints();
    constexpr std::size_t length = 32;
    const Mat<double> x0 = random_row(rng, length);
    const Mat<double> eps = random_row(rng, length);
    const NoiseSchedule schedule;
    const int t = 123;
    const Mat<double> xt = forward_noise<double>(schedule, x0, t, eps);
    auto loss = [&](ParamStore<double>&, bool with_grad) {
        if (with_grad) {
            return model.accumulate_example(x0, xt, t, eps, false, false, 1.0);
        }
        return (model.predict_noise(xt, t, x0, x0) - eps).squaredNorm() / static_cast<double>(length);
    };
    const GradCheckReport r = grad_check(loss, model.params(), {grad_samples, grad_tolerance, 1e-5, 17});
    const double s = seconds_since(t0);
    return {r.passed && r.checked >= grad_samples && s < grad_seconds,
            std::to_string(r.checked) + " coordinates, worst rel err " + num(r.worst_error) + " (" +
                r.worst_name + "), " + num(s) + " s"};
}

Outcome decomposition_identity() {
    const auto t0 = Clock::now();
    Rng rng(2024);
    double worst = 0.0;
    std::size_t count = 0;
    for (std::size_t n : {16u, 64u, 128u, 1000u}) {
        for (int i = 0; i < 250; ++i, ++count) {
            Series x(n);
            for (auto& v : x) {
                v = rng.uniform(-5.0, 5.0) + rng.normal();
            }
            const Decomposition d = decompose(x);
            for (std::size_t j = 0; j < n; ++j) {
                worst = std::max(worst, std::abs(d.content[j] + d.style[j] - x[j]));
            }
        }
    }
    const double s = seconds_since(t0);
    return {worst <= decomposition_tolerance && s < decomposition_seconds,
            std::to_string(count) + " series, max |C+S-x| " + num(worst) + ", " + num(s) + " s"};
}

float constant_response(const Model<float>& model) {
    float worst = 0.0f;
    for (double c : {-100.0, -3.0, -1.0, 0.0, 0.5, 2.0, 7.25, 100.0}) {
        for (Eigen::Index n : {8, 33, 128}) {
            const Mat<float> y = model.encode_style(Mat<float>::Constant(1, n, static_cast<float>(c)));
            worst = std::max(worst, y.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

Outcome constraint_suite() {
    const auto t0 = Clock::now();
    Model<float> model(desk_model_config());
    model.init(41);
    const float before = constant_response(model);

    SyntheticSpec spec;
    spec.count = 64;
    spec.length = 128;
    spec.seed = 77;
    const Dataset data = generate_synthetic(spec);
    const WindowSampler sampler(data, WindowSpec{128});
    const NoiseSchedule schedule;
    AdamW<float> opt(model.params(), AdamWConfig{});
    TrainConfig cfg;
    cfg.batch = 4;
    cfg.seed = 13;
    for (int it = 1; it <= constraint_steps; ++it) {
        train_iteration(model, opt, schedule, sampler, cfg, static_cast<std::uint64_t>(it));
    }
    const float after = constant_response(model);

    // Projection is a fixed point: projecting again changes no bit.
    std::vector<std::vector<float>> once;
    for (const auto& e : model.params().entries()) {
        once.emplace_back(e.value.data(), e.value.data() + e.value.size());
    }
    model.project_style_constraints();
    bool idempotent = true;
    std::size_t i = 0;
    for (const auto& e : model.params().entries()) {
        idempotent = idempotent && std::equal(once[i].begin(), once[i].end(), e.value.data());
        ++i;
    }
    Rng rng(8);
    for (std::size_t k : {3u, 5u, 7u, 9u}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<float> w = rng.normal_vector<float>(k);
            project_zero_dc_symmetric(w.data(), k);
            const auto first = w;
            project_zero_dc_symmetric(w.data(), k);
            idempotent = idempotent && w == first;
        }
    }
    const double s = seconds_since(t0);
    return {before <= constant_tolerance && after <= constant_tolerance && idempotent && s < constraint_seconds,
            "constant response " + num(before) + " before, " + num(after) + " after " +
                std::to_string(constraint_steps) + " steps, idempotent " + (idempotent ? "yes" : "no") + ", " +
                num(s) + " s"};
}

Outcome schedule_oracle() {
    const NoiseSchedule s;
    double prod = 1.0;
    double worst = 0.0;
    for (int t = 1; t <= 500; ++t) {
        prod *= 1.0 - (1e-4 + (2e-2 - 1e-4) * static_cast<double>(t - 1) / 499.0);
        worst = std::max(worst, std::abs(s.alpha_bar(t) - prod));
    }
    return {worst <= schedule_tolerance && s.alpha_bar(1) == 0.9999,
            "max deviation " + num(worst) + ", alpha_bar(1) = " + num(s.alpha_bar(1))};
}

Outcome cfg_collapse(const Model<float>& model) {
    const NoiseSchedule schedule;
    const PairSet pairs = held_out_pairs(10, 128, held_out_seed + 5);
    GuidanceConfig g;
    g.content_scale = 0.0;
    g.style_scale = 0.0;
    std::size_t identical = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng r1(seed);
        Rng r2(seed);
        const Mat<float> a = to_row<float>(pairs.contents[seed]);
        const Mat<float> b = to_row<float>(pairs.styles[seed]);
        const Mat<float> guided = sample_normalized<float>(model, schedule, a, b, g, r1);
        const Mat<float> free = sample_unconditional<float>(model, schedule, 128, g, r2);
        identical += guided == free ? 1 : 0;
    }
    return {identical == 10, std::to_string(identical) + "/10 seeds bit-identical"};
}

Outcome temperature(const Model<float>& model) {
    const NoiseSchedule schedule;
    const PairSet pairs = held_out_pairs(1, 128, held_out_seed + 6);
    GuidanceConfig g;
    g.temperature = 0.0;
    bool deterministic = true;
    for (std::uint64_t seed : {3u, 4u}) {
        const Series x = sample<float>(model, schedule, pairs.contents[0], pairs.styles[0], g, seed);
        for (int r = 0; r < 2; ++r) {
            deterministic = deterministic &&
                            sample<float>(model, schedule, pairs.contents[0], pairs.styles[0], g, seed) == x;
        }
    }
    const std::vector<double> lambdas{0.0, 0.25, 0.5, 1.0};
    const auto rows = temperature_sweep(model, schedule, pairs, lambdas, dispersion_repeats, GuidanceConfig{},
                                        held_out_seed, StatEmbedding::standard());
    bool monotone = true;
    std::string trace;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        monotone = monotone && (i == 0 || rows[i].dispersion >= rows[i - 1].dispersion);
        trace += (i == 0 ? "" : ", ") + num(rows[i].dispersion);
    }
    return {deterministic && monotone, std::string("lambda=0 repeats identical ") + (deterministic ? "yes" : "no") +
                                           ", dispersion at 0/.25/.5/1: " + trace};
}

struct Training {
    Outcome outcome;
    std::unique_ptr<Model<float>> model;
};

Training toy_training(const fs::path& dir) {
    fs::remove_all(dir);
    RunConfig cfg;
    cfg.validate();
    const Dataset data = generate_synthetic(cfg.data.synthetic);
    const WindowSampler sampler(data, WindowSpec{cfg.train.window});
    auto model = std::make_unique<Model<float>>(cfg.model);
    model->init(cfg.model_seed);
    const auto t0 = Clock::now();
    const TrainResult r = run_training(*model, cfg.schedule.build(), sampler, cfg.train, dir);
    const double s = seconds_since(t0);
    const std::size_t n = r.losses.size();
    const std::size_t d = std::max<std::size_t>(1, n / 10);
    double first = 0.0;
    double last = 0.0;
    for (std::size_t i = 0; i < d && i < n; ++i) {
        first += r.losses[i];
        last += r.losses[n - 1 - i];
    }
    first /= static_cast<double>(d);
    last /= static_cast<double>(d);
    const bool ok = n == cfg.train.iterations && last < convergence_ratio * first && s < training_seconds;
    return {{ok, std::to_string(n) + " iterations on " + std::to_string(data.records.size()) +
                     " series, first decile " + num(first) + ", last decile " + num(last) + " (ratio " +
                     num(last / first) + "), " + num(s) + " s"},
            std::move(model)};
}

struct Transfer {
    Outcome sanity;
    Outcome guidance;
};

Transfer transfer(const Model<float>& model) {
    const NoiseSchedule schedule;
    const PairSet pairs = held_out_pairs(transfer_pairs_count, 128, held_out_seed);
    const auto mean_of_pairs = [&](const std::function<double(std::size_t)>& f) {
        double s = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            s += f(i);
        }
        return s / static_cast<double>(pairs.size());
    };
    const double si_ab = mean_of_pairs([&](std::size_t i) { return si(pairs.contents[i], pairs.styles[i]); });
    const double cp_ba = mean_of_pairs([&](std::size_t i) { return cp(pairs.styles[i], pairs.contents[i]); });
    const auto run = [&](double sc, double ss) {
        GuidanceConfig g;
        g.content_scale = sc;
        g.style_scale = ss;
        const std::vector<Series> out = transfer_pairs(model, schedule, pairs, g, held_out_seed);
        return std::pair{mean_of_pairs([&](std::size_t i) { return cp(out[i], pairs.contents[i]); }),
                         mean_of_pairs([&](std::size_t i) { return si(out[i], pairs.styles[i]); })};
    };
    const auto [cp_x, si_x] = run(1.0, 1.0);
    const auto [cp_content, si_content] = run(1.0, 0.25);
    const auto [cp_style, si_style] = run(0.25, 1.0);
    Transfer t;
    t.sanity = {si_x < si_ab && cp_x < cp_ba, "SI(x,b) " + num(si_x) + " < SI(a,b) " + num(si_ab) + ", CP(x,a) " +
                                                  num(cp_x) + " < CP(b,a) " + num(cp_ba)};
    t.guidance = {cp_content < cp_style && si_content > si_style,
                  "CP " + num(cp_content) + " at (1,.25) < " + num(cp_style) + " at (.25,1); SI " + num(si_content) +
                      " at (1,.25) > " + num(si_style) + " at (.25,1)"};
    return t;
}

Outcome length_extrapolation(const Model<float>& model, std::size_t pairs_per_length) {
    const std::vector<std::size_t> lengths{128, 256, 512, 1024, 2048};
    std::vector<LengthRow> rows;
    try {
        rows = length_sweep(model, NoiseSchedule{}, lengths, pairs_per_length, GuidanceConfig{}, held_out_seed + 7,
                            StatEmbedding::standard());
    } catch (const std::exception& e) {
        return {false, std::string("sampling failed: ") + e.what()};
    }
    const EvalReport& base = rows.front().report;
    bool ok = true;
    std::string trace;
    for (const auto& r : rows) {
        const auto& p = r.report;
        for (auto [v, b] : {std::pair{p.cp.mean, base.cp.mean}, {p.si.mean, base.si.mean}, {p.rm.mean, base.rm.mean}}) {
            ok = ok && std::isfinite(v) && v <= length_factor * b;
        }
        trace += (trace.empty() ? "" : "; ") + std::to_string(r.length) + ": " + num(p.cp.mean) + "/" +
                 num(p.si.mean) + "/" + num(p.rm.mean);
    }
    return {ok, "CP/SI/RM " + trace};
}

Outcome baseline_exactness() {
    Rng rng(99);
    bool stitch_exact = true;
    double round_trip = 0.0;
    double energy = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(16, 300));
        Series x(n);
        for (auto& v : x) {
            v = 3.0 * rng.normal();
        }
        stitch_exact = stitch_exact && stitch(x, x) == x;
        for (int levels : {1, 2, 3, 4}) {
            const HaarCoefficients c = haar_forward(x, levels);
            const Series y = haar_inverse(c);
            for (std::size_t i = 0; i < n; ++i) {
                round_trip = std::max(round_trip, std::abs(y[i] - x[i]));
            }
            // Energy is preserved on the padded signal the transform sees.
            if (n % (std::size_t{1} << levels) == 0) {
                double ex = 0.0;
                double ec = 0.0;
                for (double v : x) ex += v * v;
                for (double v : c.approx) ec += v * v;
                for (const auto& d : c.details) {
                    for (double v : d) ec += v * v;
                }
                energy = std::max(energy, std::abs(ex - ec) / std::max(1.0, ex));
            }
        }
    }
    const PairSet pairs = held_out_pairs(5, 128, held_out_seed + 8);
    bool monotone = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const NstResult r = nst_optimize(pairs.contents[i], pairs.styles[i], NstConfig{},
                                         embedded_features(StatEmbedding::standard()));
        for (std::size_t k = 1; k < r.losses.size(); ++k) {
            monotone = monotone && r.losses[k] <= r.losses[k - 1];
        }
    }
    return {stitch_exact && round_trip <= haar_tolerance && energy <= haar_tolerance && monotone,
            std::string("stitch(x,x)=x ") + (stitch_exact ? "yes" : "no") + ", haar round trip " + num(round_trip) +
                ", energy " + num(energy) + ", nst nonincreasing " + (monotone ? "yes" : "no")};
}

Outcome resumability(const fs::path& dir) {
    SyntheticSpec spec;
    spec.count = 64;
    spec.length = 160;
    spec.seed = 31;
    const Dataset data = generate_synthetic(spec);
    const WindowSampler sampler(data, WindowSpec{128});
    const NoiseSchedule schedule;
    TrainConfig cfg;
    cfg.batch = 8;
    cfg.seed = 5;
    cfg.checkpoint_every = 30;
    const fs::path straight = dir / "straight";
    const fs::path resumed = dir / "resumed";
    fs::remove_all(straight);
    fs::remove_all(resumed);
    const auto train = [&](const fs::path& d, std::size_t iterations, std::uint64_t init) {
        Model<float> m(desk_model_config());
        m.init(init);
        cfg.iterations = iterations;
        return run_training(m, schedule, sampler, cfg, d);
    };
    train(straight, 100, 3);
    train(resumed, 50, 3);
    const TrainResult r = train(resumed, 100, 999);
    const bool same_checkpoint =
        read_file_bytes(straight / checkpoint_file) == read_file_bytes(resumed / checkpoint_file);
    const bool same_log = LossLog::read(straight / loss_file) == LossLog::read(resumed / loss_file);
    return {r.start_iteration == 50 && same_checkpoint && same_log,
            std::string("checkpoint bytes equal ") + (same_checkpoint ? "yes" : "no") + ", loss log equal " +
                (same_log ? "yes" : "no")};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string workdir = (fs::temp_directory_path() / "dtsst_acceptance").string();
    std::size_t length_pairs = 10;
    std::set<int> known_failures;
    app.add_option("--workdir", workdir, "scratch directory for the trained model")->capture_default_str();
    app.add_option("--length-pairs", length_pairs, "pairs per length in the extrapolation check")
        ->capture_default_str();
    app.add_option("--known-failure", known_failures,
                   "criteria whose FAIL is reported but does not change the exit status");
    CLI11_PARSE(app, argc, argv);

    int failures = 0;
    int passed = 0;
    const auto report = [&](int id, const std::string& name, const Outcome& o) {
        passed += o.pass ? 1 : 0;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << name << ": " << o.detail;
        if (!o.pass && known_failures.count(id) != 0) {
            std::cout << "  [known failure]";
        } else if (!o.pass) {
            ++failures;
        }
        std::cout << std::endl;
    };
    const auto guarded = [](const std::function<Outcome()>& f) -> Outcome {
        try {
            return f();
        } catch (const std::exception& e) {
            return {false, std::string("threw: ") + e.what()};
        }
    };

    report(1, "gradient fidelity", guarded(gradient_fidelity));
    report(2, "decomposition identity", guarded(decomposition_identity));
    report(3, "constraint suite", guarded(constraint_suite));
    report(4, "schedule oracle", guarded(schedule_oracle));

    Training trained;
    try {
        trained = toy_training(fs::path(workdir) / "desk");
    } catch (const std::exception& e) {
        trained.outcome = {false, std::string("threw: ") + e.what()};
    }
    const Model<float>* model = trained.model.get();
    const auto with_model = [&](const std::function<Outcome(const Model<float>&)>& f) {
        return model == nullptr ? Outcome{false, "no trained model"} : guarded([&] { return f(*model); });
    };

    report(5, "CFG collapse", with_model(cfg_collapse));
    report(6, "temperature determinism and diversity", with_model(temperature));
    report(7, "toy training convergence", trained.outcome);
    Transfer t;
    if (model == nullptr) {
        t.sanity = t.guidance = {false, "no trained model"};
    } else {
        try {
            t = transfer(*model);
        } catch (const std::exception& e) {
            t.sanity = t.guidance = {false, std::string("threw: ") + e.what()};
        }
    }
    report(8, "style-transfer sanity", t.sanity);
    report(9, "guidance trend", t.guidance);
    report(10, "length extrapolation",
           with_model([&](const Model<float>& m) { return length_extrapolation(m, length_pairs); }));
    report(11, "baseline exactness", guarded(baseline_exactness));
    report(12, "checkpoint resumability", guarded([&] { return resumability(fs::path(workdir) / "resume"); }));
    std::cout << passed << "/12 criteria passed";
    if (failures > 0) {
        std::cout << ", " << failures << " unexpected failure(s)";
    }
    std::cout << std::endl;
    return failures == 0 ? 0 : 1;
}
