#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "dtsst/checkpoint.hpp"
#include "dtsst/data_io.hpp"
#include "dtsst/synthetic.hpp"
#include "dtsst/training.hpp"

using namespace dtsst;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dtsst_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Dataset one_record(Series values) {
    Dataset d;
    d.records.push_back({"r", std::move(values)});
    return d;
}

} // namespace

TEST_CASE("dataset parse and write round trip") {
    std::istringstream in("# comment\n\na\t1,2.5,NaN,-3e-2\nb\t4\n");
    const Dataset d = parse_dataset(in);
    REQUIRE(d.records.size() == 2);
    CHECK(d.records[0].id == "a");
    CHECK(d.records[0].values.size() == 4);
    CHECK(std::isnan(d.records[0].values[2]));
    CHECK(d.records[0].values[3] == -3e-2);
    CHECK(d.records[1].values == Series{4});

    Rng rng(1);
    Dataset r;
    for (int k = 0; k < 5; ++k) {
        Series v(20);
        for (auto& x : v) {
            x = rng.normal() * std::pow(10.0, rng.uniform(-5, 5));
        }
        r.records.push_back({"s" + std::to_string(k), v});
    }
    std::ostringstream out;
    write_dataset(out, r);
    std::istringstream back(out.str());
    const Dataset r2 = parse_dataset(back);
    REQUIRE(r2.records.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(r2.records[k].values == r.records[k].values);
    }
}

TEST_CASE("dataset parse errors carry the line number") {
    for (const char* bad : {"a\t1,x,3\n", "a\t1,inf\n", "a\n", "a\t\n"}) {
        std::istringstream in(std::string("ok\t1\n") + bad);
        try {
            parse_dataset(in);
            FAIL("expected a parse error");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    CHECK_THROWS_AS(read_dataset("/nonexistent/file.tsv"), DataError);
}

TEST_CASE("wide csv conversion") {
    std::istringstream in("timestamp,x,y\n0,1,5\n1,2,\n2,NaN,\n3,4,\n");
    const Dataset d = convert_wide_csv(in);
    REQUIRE(d.records.size() == 2);
    CHECK(d.records[0].id == "x");
    CHECK(d.records[0].values.size() == 4);
    CHECK(std::isnan(d.records[0].values[2]));
    CHECK(d.records[1].values == Series{5});
}

TEST_CASE("normalization guards") {
    const Normalized c = z_normalize(Series(16, 7.0));
    CHECK(c.values == Series(16, 0.0));
    CHECK(c.std == 0.0);

    const Normalized all_missing = z_normalize(Series(16, std::nan("")));
    CHECK(all_missing.values == Series(16, 0.0));

    Series x{1, 2, std::nan(""), 4};
    const Normalized n = z_normalize(x);
    const double mean = 7.0 / 4.0;
    const double sd = std::sqrt(((1 - mean) * (1 - mean) + (2 - mean) * (2 - mean) + mean * mean +
                                 (4 - mean) * (4 - mean)) / 4.0);
    CHECK(n.mean == doctest::Approx(mean));
    CHECK(n.values[2] == doctest::Approx((0 - mean) / (sd + 1e-8)));

    Rng rng(2);
    Series y(100);
    for (auto& v : y) {
        v = 3.0 + 2.0 * rng.normal();
    }
    const Normalized ny = z_normalize(y);
    const Series back = denormalize(ny.values, ny.mean, ny.std);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(std::abs(back[i] - y[i]) <= 1e-6);
    }
}

TEST_CASE("window sampler") {
    Rng rng(3);
    Series long_series(256);
    for (auto& v : long_series) {
        v = rng.normal();
    }
    Dataset d;
    d.records.push_back({"short", Series(100, 1.0)});
    d.records.push_back({"long", long_series});
    const WindowSampler sampler(d, WindowSpec{128});
    CHECK(sampler.size() == 1);
    std::set<std::size_t> offsets;
    for (int i = 0; i < 100000; ++i) {
        offsets.insert(sampler.draw(rng).offset);
    }
    CHECK(offsets.size() == 129);
    CHECK(*offsets.rbegin() == 128);

    const Window w = sampler.at(0, 5);
    CHECK(w.values.size() == 128);
    CHECK(std::abs(mean_of(w.values)) < 1e-12);
    CHECK(w.values[0] == doctest::Approx((long_series[5] - w.mean) / (w.std + 1e-8)));

    CHECK_THROWS_AS(WindowSampler(one_record(Series(50, 1.0)), WindowSpec{128}), DataError);
    CHECK_THROWS_AS(WindowSampler(one_record(Series(50, 1.0)), WindowSpec{4}), InvalidArgument);

    Series gappy(16, std::nan(""));
    const WindowSampler flat(one_record(gappy), WindowSpec{8});
    for (int i = 0; i < 20; ++i) {
        for (double v : flat.draw(rng).values) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("synthetic generation") {
    SyntheticSpec spec;
    spec.count = 20;
    spec.length = 64;
    spec.seed = 9;
    std::ostringstream a, b;
    write_dataset(a, generate_synthetic(spec));
    write_dataset(b, generate_synthetic(spec));
    CHECK(a.str() == b.str());
    spec.seed = 10;
    std::ostringstream c;
    write_dataset(c, generate_synthetic(spec));
    CHECK(a.str() != c.str());

    for (Family f : {Family::trend_sine, Family::piecewise_level, Family::ar1, Family::sine_burst,
                     Family::composite}) {
        spec.family = f;
        for (const auto& r : generate_synthetic(spec).records) {
            CHECK(r.values.size() == 64);
            for (double v : r.values) {
                CHECK(std::isfinite(v));
            }
        }
        CHECK(parse_family(family_name(f)) == f);
    }
    CHECK_THROWS_AS(parse_family("fractal"), InvalidArgument);
}

TEST_CASE("trend with zero amplitude is a straight line") {
    SyntheticParams p;
    p.amplitude_min = 0.0;
    p.amplitude_max = 0.0;
    Rng rng(4);
    for (int k = 0; k < 10; ++k) {
        const Series x = generate_family(Family::trend_sine, 50, p, rng);
        for (std::size_t i = 2; i < x.size(); ++i) {
            CHECK(std::abs(x[i] - 2 * x[i - 1] + x[i - 2]) <= 1e-12);
        }
    }
}

TEST_CASE("piecewise segment count scales with length past 256") {
    const auto segments = [](std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        const Series x = generate_family(Family::piecewise_level, n, SyntheticParams{}, rng);
        std::size_t changes = 1;
        for (std::size_t i = 1; i < n; ++i) {
            changes += x[i] != x[i - 1] ? 1 : 0;
        }
        return changes;
    };
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CHECK(segments(128, seed) <= 5);
        CHECK(segments(256, seed) <= 5);
        // Cut points may coincide, so only the upper bound is exact.
        CHECK(segments(2048, seed) <= 40);
        CHECK(segments(2048, seed) >= 8);
    }
}

TEST_CASE("AR(1) lag-one autocorrelation") {
    SyntheticParams p;
    p.ar_min = 0.9;
    p.ar_max = 0.9;
    Rng rng(5);
    const Series x = generate_family(Family::ar1, 10000, p, rng);
    const double m = mean_of(x);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        den += (x[i] - m) * (x[i] - m);
        if (i + 1 < x.size()) {
            num += (x[i] - m) * (x[i + 1] - m);
        }
    }
    const double r = num / den;
    CHECK(r >= 0.8);
    CHECK(r <= 0.95);
}

TEST_CASE("checkpoint save, load, save is byte identical") {
    const fs::path dir = scratch_dir("ckpt");
    Model<float> model(tiny_model_config());
    model.init(1);
    AdamW<float> opt(model.params(), AdamWConfig{});
    const NoiseSchedule s;
    Rng rng(2);
    std::vector<Mat<float>> batch{Mat<float>::Random(1, 32)};
    for (int i = 0; i < 3; ++i) {
        train_step<float>(model, s, batch, opt, rng);
    }
    save_checkpoint(dir / "a.bin", model, opt, 3);

    Model<float> other(tiny_model_config());
    other.init(99);
    AdamW<float> other_opt(other.params(), AdamWConfig{});
    CHECK(load_checkpoint(dir / "a.bin", other, &other_opt) == 3);
    CHECK(other_opt.step_count() == 3);
    save_checkpoint(dir / "b.bin", other, other_opt, 3);
    CHECK(read_file_bytes(dir / "a.bin") == read_file_bytes(dir / "b.bin"));
    CHECK(capture_state(model, opt, 3) == capture_state(other, other_opt, 3));
    CHECK_FALSE(fs::exists(dir / "a.bin.tmp"));
}

TEST_CASE("checkpoint corruption is detected") {
    CheckpointState st;
    st.iteration = 7;
    st.params.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6}});
    st.optimizer.push_back({"adamw.m/w", {2, 3}, {0, 0, 0, 0, 0, 1}});
    const auto bytes = encode_checkpoint(st);
    CHECK(decode_checkpoint(bytes) == st);
    CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "DTSST");

    auto flipped = bytes;
    flipped[40] ^= 0x01;  // inside the float payload of 'w'
    CHECK_THROWS_AS(decode_checkpoint(flipped), ChecksumError);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        auto b = bytes;
        b[i] ^= 0x10;
        CHECK_THROWS_AS(decode_checkpoint(b), CheckpointError);
    }

    auto version = bytes;
    version[5] = 2;
    CHECK_THROWS_AS(decode_checkpoint(version), VersionError);

    for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() - 9, bytes.size() - 1}) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK_THROWS_AS(decode_checkpoint(part), TruncatedError);
    }

    auto magic = bytes;
    magic[0] = 'X';
    CHECK_THROWS_AS(decode_checkpoint(magic), CheckpointError);

    Model<float> model(tiny_model_config());
    model.init(1);
    CHECK_THROWS_AS(restore_state(st, model, nullptr), CheckpointError);
}

TEST_CASE("50 + 50 resumed iterations equal 100 straight") {
    SyntheticSpec spec;
    spec.count = 40;
    spec.length = 48;
    const Dataset data = generate_synthetic(spec);
    const WindowSampler sampler(data, WindowSpec{32});
    const NoiseSchedule s;
    TrainConfig cfg;
    cfg.batch = 4;
    cfg.window = 32;
    cfg.seed = 5;
    cfg.checkpoint_every = 30;

    const fs::path straight = scratch_dir("straight");
    const fs::path resumed = scratch_dir("resumed");
    {
        Model<float> m(tiny_model_config());
        m.init(3);
        cfg.iterations = 100;
        const TrainResult r = run_training(m, s, sampler, cfg, straight);
        CHECK(r.start_iteration == 0);
        CHECK(r.end_iteration == 100);
    }
    {
        Model<float> m(tiny_model_config());
        m.init(3);
        cfg.iterations = 50;
        run_training(m, s, sampler, cfg, resumed);
    }
    {
        Model<float> m(tiny_model_config());
        m.init(1234);  // overwritten by the checkpoint
        cfg.iterations = 100;
        const TrainResult r = run_training(m, s, sampler, cfg, resumed);
        CHECK(r.start_iteration == 50);
        CHECK(r.losses.size() == 50);
    }
    CHECK(read_file_bytes(straight / checkpoint_file) == read_file_bytes(resumed / checkpoint_file));
    const auto a = LossLog::read(straight / loss_file);
    const auto b = LossLog::read(resumed / loss_file);
    CHECK(a.size() == 10);
    CHECK(a == b);
}

TEST_CASE("zero iterations writes only the initial checkpoint") {
    SyntheticSpec spec;
    spec.count = 4;
    spec.length = 40;
    const WindowSampler sampler(generate_synthetic(spec), WindowSpec{32});
    const fs::path dir = scratch_dir("zero");
    Model<float> m(tiny_model_config());
    m.init(1);
    TrainConfig cfg;
    cfg.iterations = 0;
    cfg.window = 32;
    const TrainResult r = run_training(m, NoiseSchedule{}, sampler, cfg, dir);
    CHECK(r.losses.empty());
    Model<float> other(tiny_model_config());
    CHECK(load_checkpoint(dir / checkpoint_file, other, nullptr) == 0);
    CHECK(LossLog::read(dir / loss_file).empty());
}
