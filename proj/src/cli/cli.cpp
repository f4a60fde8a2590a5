#include "dtsst/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtsst/baselines.hpp"
#include "dtsst/experiments.hpp"
#include "dtsst/plot.hpp"

namespace dtsst {

namespace fs = std::filesystem;

namespace {

fs::path output_root() {
    const char* env = std::getenv("DTSST_OUT");
    return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

fs::path output_path(const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : output_root() / path;
}

// Inputs are taken as given when they exist, otherwise looked up under the output root.
fs::path input_path(const std::string& p) {
    const fs::path path(p);
    if (path.is_absolute() || fs::exists(path)) {
        return path;
    }
    const fs::path under = output_root() / path;
    return fs::exists(under) ? under : path;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// Wall-clock information lives only in this sidecar so every other output is reproducible.
class Metadata {
public:
    Metadata(fs::path dir, std::string command) : dir_(std::move(dir)), started_(utc_now()) {
        j_["command"] = std::move(command);
    }
    void set(const std::string& key, nlohmann::ordered_json v) { j_[key] = std::move(v); }
    void write() {
        j_["started"] = started_;
        j_["finished"] = utc_now();
        write_text(dir_ / "meta.json", j_.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::string started_;
    nlohmann::ordered_json j_;
};

Series read_series(const std::string& file, std::size_t index) {
    const Dataset d = read_dataset(input_path(file));
    if (index >= d.records.size()) {
        throw DataError(file + ": record " + std::to_string(index) + " requested, file has " +
                        std::to_string(d.records.size()));
    }
    return d.records[index].values;
}

std::vector<Series> read_all(const std::string& file) {
    std::vector<Series> out;
    for (auto& r : read_dataset(input_path(file)).records) {
        out.push_back(std::move(r.values));
    }
    return out;
}

struct LoadedRun {
    RunConfig config;
    Model<float> model;
    std::uint64_t iteration = 0;
};

LoadedRun load_run(const std::string& run) {
    const fs::path dir = input_path(run);
    if (!fs::exists(dir / checkpoint_file)) {
        throw DataError("no checkpoint in " + dir.string());
    }
    RunConfig cfg = load_config(dir / "config.json");
    Model<float> model(cfg.model);
    const std::uint64_t it = load_checkpoint(dir / checkpoint_file, model, nullptr);
    return LoadedRun{cfg, std::move(model), it};
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) {
        s += (s.empty() ? "" : ",") + c;
    }
    return s + "\n";
}

std::string fmt(double v) { return format_value(v); }

std::vector<Panel> metric_panels(const std::vector<std::string>& labels, const std::vector<EvalReport>& reports,
                                 const std::string& axis) {
    Panel cp{"CP by " + axis, {}}, si{"SI by " + axis, {}}, rm{"RM by " + axis, {}};
    Trace tc{"CP", {}, palette(0)}, ts{"SI", {}, palette(1)}, tr{"RM", {}, palette(2)};
    for (const auto& r : reports) {
        tc.values.push_back(r.cp.mean);
        ts.values.push_back(r.si.mean);
        tr.values.push_back(r.rm.mean);
    }
    std::string order;
    for (const auto& l : labels) {
        order += (order.empty() ? "" : "  ") + l;
    }
    cp.title += " (" + order + ")";
    cp.traces.push_back(tc);
    si.traces.push_back(ts);
    rm.traces.push_back(tr);
    return {cp, si, rm};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string family = "composite";
    std::size_t count = 2000;
    std::size_t length = 256;
    std::uint64_t seed = 0;
    std::string out = "synthetic.tsv";
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    SyntheticSpec spec;
    spec.family = parse_family(a.family);
    spec.count = a.count;
    spec.length = a.length;
    spec.seed = a.seed;
    const fs::path path = output_path(a.out);
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    write_dataset(path, generate_synthetic(spec));
    out << "wrote " << spec.count << " series to " << path.string() << "\n";
    return exit_ok;
}

struct ConvertArgs {
    std::string input;
    std::string out = "converted.tsv";
};

int cmd_convert(const ConvertArgs& a, std::ostream& out) {
    std::ifstream in(input_path(a.input));
    if (!in) {
        throw DataError("cannot open " + a.input);
    }
    const Dataset d = convert_wide_csv(in);
    const fs::path path = output_path(a.out);
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    write_dataset(path, d);
    out << "wrote " << d.records.size() << " series to " << path.string() << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string config;
    std::string preset = "desk";
    std::string data;
    std::optional<std::size_t> iterations;
    std::optional<std::size_t> batch;
    std::optional<std::uint64_t> seed;
    std::optional<int> steps;
    std::optional<std::size_t> window;
    std::string out = "train";
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const fs::path dir = output_path(a.out);
    fs::create_directories(dir);
    RunConfig cfg;
    if (!a.config.empty()) {
        cfg = load_config(input_path(a.config));
    } else if (fs::exists(dir / "config.json")) {
        cfg = load_config(dir / "config.json");
    } else {
        cfg.model = model_preset(a.preset);
    }
    if (!a.data.empty()) {
        cfg.data.dataset = input_path(a.data).string();
    }
    if (a.iterations) {
        cfg.train.iterations = *a.iterations;
    }
    if (a.batch) {
        cfg.train.batch = *a.batch;
    }
    if (a.seed) {
        cfg.train.seed = *a.seed;
    }
    if (a.steps) {
        cfg.schedule.steps = *a.steps;
    }
    if (a.window) {
        cfg.train.window = *a.window;
    }
    cfg.validate();
    if (fs::exists(dir / checkpoint_file) && fs::exists(dir / "config.json")) {
        const RunConfig prev = load_config(dir / "config.json");
        if (!(prev.model == cfg.model)) {
            throw ConfigError("model configuration differs from the checkpoint in " + dir.string());
        }
    }
    save_config(dir / "config.json", cfg);

    const Dataset data = cfg.data.dataset.empty() ? generate_synthetic(cfg.data.synthetic)
                                                  : read_dataset(cfg.data.dataset);
    const WindowSampler sampler(data, WindowSpec{cfg.train.window});
    Model<float> model(cfg.model);
    model.init(cfg.model_seed);
    Metadata meta(dir, "train");
    const std::size_t report = std::max<std::size_t>(cfg.train.log_every, cfg.train.iterations / 20);
    const TrainResult r = run_training(model, cfg.schedule.build(), sampler, cfg.train, dir,
                                       [&](std::uint64_t it, double loss) {
                                           if (it % report == 0) {
                                               err << "iteration " << it << " loss " << loss << "\n";
                                           }
                                       });
    meta.set("start_iteration", r.start_iteration);
    meta.set("end_iteration", r.end_iteration);
    meta.write();
    out << "trained iterations " << r.start_iteration << ".." << r.end_iteration << " in " << dir.string() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------- generate

struct GenerateArgs {
    std::string run = "train";
    std::string content;
    std::string style;
    std::size_t content_index = 0;
    std::size_t style_index = 0;
    std::optional<double> sc, ss, temperature;
    std::optional<int> steps;
    bool clip = false;
    bool unconditional = false;
    std::size_t num = 1;
    std::uint64_t seed = 0;
    std::string out = "generate";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    LoadedRun run = load_run(a.run);
    GuidanceConfig g = run.config.sampling;
    if (a.sc) {
        g.content_scale = *a.sc;
    }
    if (a.ss) {
        g.style_scale = *a.ss;
    }
    if (a.temperature) {
        g.temperature = *a.temperature;
    }
    g.clip = g.clip || a.clip;
    g.validate();
    ScheduleConfig sc = run.config.schedule;
    if (a.steps) {
        sc.steps = *a.steps;
    }
    const NoiseSchedule schedule = sc.build();
    if (a.num < 1) {
        throw InvalidArgument("--num must be >= 1");
    }

    const Series content = read_series(a.content, a.content_index);
    Series style;
    if (!a.unconditional) {
        if (a.style.empty()) {
            throw InvalidArgument("--style is required unless --unconditional is given");
        }
        style = read_series(a.style, a.style_index);
        expect_same_length(content, style, "generate: content and style");
    }
    const fs::path dir = output_path(a.out);
    fs::create_directories(dir);
    Metadata meta(dir, "generate");

    Dataset generated;
    for (std::size_t i = 0; i < a.num; ++i) {
        const std::uint64_t seed = derive_seed(a.seed, i);
        Series x;
        if (a.unconditional) {
            const Normalized za = z_normalize(content);
            Rng rng(seed);
            const Mat<float> m = sample_unconditional<float>(run.model, schedule, content.size(), g, rng);
            x = denormalize(to_series<float>(m), za.mean, za.std);
        } else {
            x = sample<float>(run.model, schedule, content, style, g, seed);
        }
        generated.records.push_back({"sample-" + std::to_string(i), std::move(x)});
    }
    write_dataset(dir / "generated.tsv", generated);

    std::vector<Panel> panels;
    panels.push_back({"content a", {{"a", content, palette(0)}}});
    if (!a.unconditional) {
        panels.push_back({"style b", {{"b", style, palette(1)}}});
    }
    Panel gen{"generated", {}};
    for (std::size_t i = 0; i < generated.records.size(); ++i) {
        gen.traces.push_back({generated.records[i].id, generated.records[i].values, palette(i + 2)});
    }
    panels.push_back(gen);
    write_text(dir / "plot.svg", svg_panels(panels));
    meta.set("checkpoint_iteration", run.iteration);
    meta.write();
    out << "wrote " << a.num << " sample(s) to " << (dir / "generated.tsv").string() << "\n";
    return exit_ok;
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
    std::string generated, content, style;
    std::string embedding = "stat-v1";
    std::string out = "evaluate";
};

const Embedding& embedding_by_name(const std::string& name) {
    if (name == "stat-v1") {
        return StatEmbedding::standard();
    }
    throw InvalidArgument("unknown embedding '" + name + "' (available: stat-v1)");
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    const Embedding& f = embedding_by_name(a.embedding);
    std::vector<Series> gen = read_all(a.generated);
    std::vector<Series> con = read_all(a.content);
    std::vector<Series> sty = read_all(a.style);
    // A single content or style record is paired with every generated series.
    if (con.size() == 1 && gen.size() > 1) {
        con.assign(gen.size(), con.front());
    }
    if (sty.size() == 1 && gen.size() > 1) {
        sty.assign(gen.size(), sty.front());
    }
    if (gen.size() != con.size() || gen.size() != sty.size()) {
        throw DataError("evaluate: " + std::to_string(gen.size()) + " generated, " + std::to_string(con.size()) +
                        " content and " + std::to_string(sty.size()) + " style records do not align");
    }
    for (auto* set : {&gen, &con, &sty}) {
        for (auto& s : *set) {
            s = z_normalize(s).values;
        }
    }
    const EvalReport r = evaluate(gen, con, sty, f);
    const fs::path dir = output_path(a.out);
    write_text(dir / "report.jsonl", report_jsonl(r));
    write_text(dir / "report.txt", report_table(r));
    out << report_table(r);
    return exit_ok;
}

// --------------------------------------------------------------- ablate

struct AblateArgs {
    std::string kind;
    std::string run = "train";
    std::optional<std::size_t> pairs;
    std::size_t repeats = 20;
    std::size_t length = 128;
    std::uint64_t seed = 20240901;
    std::size_t iterations = 1000;
    std::string preset = "tiny";
    std::string out = "ablate";
};

int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
    const Embedding& f = StatEmbedding::standard();
    const fs::path dir = output_path(a.out) / a.kind;
    fs::create_directories(dir);
    Metadata meta(dir, "ablate " + a.kind);
    const Progress progress = [&](const std::string& s) { err << s << "\n"; };
    std::string table;
    std::string csv;

    if (a.kind == "encoder") {
        RunConfig cfg;
        cfg.model = model_preset(a.preset);
        cfg.train.iterations = a.iterations;
        cfg.train.checkpoint_every = std::max<std::size_t>(1, a.iterations / 4);
        cfg.validate();
        const Dataset data = generate_synthetic(cfg.data.synthetic);
        const WindowSampler sampler(data, WindowSpec{cfg.train.window});
        const PairSet pairs = held_out_pairs(a.pairs.value_or(20), a.length, a.seed);
        const auto rows = encoder_ablation(cfg, sampler, pairs, dir, a.seed, f, progress);
        table = encoder_table(rows);
        csv = csv_row({"variant", "loss", "cp", "si", "rm", "avg"});
        std::vector<std::string> labels;
        std::vector<EvalReport> reports;
        for (const auto& r : rows) {
            csv += csv_row({r.name, fmt(r.final_loss), fmt(r.report.cp.mean), fmt(r.report.si.mean),
                            fmt(r.report.rm.mean), fmt(r.report.overall.mean)});
            labels.push_back(r.name);
            reports.push_back(r.report);
        }
        write_text(dir / "encoder.svg", svg_panels(metric_panels(labels, reports, "variant")));
    } else {
        LoadedRun run = load_run(a.run);
        const NoiseSchedule schedule = run.config.schedule.build();
        const GuidanceConfig base = run.config.sampling;
        if (a.kind == "guidance") {
            const PairSet pairs = held_out_pairs(a.pairs.value_or(50), a.length, a.seed);
            const auto rows = guidance_sweep(run.model, schedule, pairs, guidance_grid(), base, a.seed, f, progress);
            table = guidance_table(rows);
            csv = csv_row({"s_c", "s_s", "cp", "cp_se", "si", "si_se", "rm", "rm_se", "avg", "avg_se"});
            std::vector<std::string> labels;
            std::vector<EvalReport> reports;
            for (const auto& r : rows) {
                const auto& p = r.report;
                csv += csv_row({fmt(r.content_scale), fmt(r.style_scale), fmt(p.cp.mean), fmt(p.cp.se),
                                fmt(p.si.mean), fmt(p.si.se), fmt(p.rm.mean), fmt(p.rm.se), fmt(p.overall.mean),
                                fmt(p.overall.se)});
                labels.push_back(fmt(r.content_scale) + "/" + fmt(r.style_scale));
                reports.push_back(p);
            }
            write_text(dir / "guidance.svg", svg_panels(metric_panels(labels, reports, "s_c/s_s")));
        } else if (a.kind == "temperature") {
            const PairSet pairs = held_out_pairs(a.pairs.value_or(1), a.length, a.seed);
            const std::vector<double> temps{0.0, 0.25, 0.5, 0.75, 1.0};
            const auto rows = temperature_sweep(run.model, schedule, pairs, temps, a.repeats, base, a.seed, f,
                                                progress);
            table = temperature_table(rows);
            csv = csv_row({"temperature", "dispersion"});
            std::vector<ScatterGroup> groups;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                csv += csv_row({fmt(rows[i].temperature), fmt(rows[i].dispersion)});
                groups.push_back({"lambda " + fmt(rows[i].temperature), rows[i].points, palette(i)});
            }
            write_text(dir / "temperature.svg", svg_scatter("stat-v1 embedding, joint PCA", groups));
        } else if (a.kind == "length") {
            const std::vector<std::size_t> lengths{128, 256, 512, 1024, 2048};
            const auto rows = length_sweep(run.model, schedule, lengths, a.pairs.value_or(10), base, a.seed, f,
                                           progress);
            table = length_table(rows);
            csv = csv_row({"length", "cp", "si", "rm", "avg"});
            std::vector<std::string> labels;
            std::vector<EvalReport> reports;
            for (const auto& r : rows) {
                csv += csv_row({std::to_string(r.length), fmt(r.report.cp.mean), fmt(r.report.si.mean),
                                fmt(r.report.rm.mean), fmt(r.report.overall.mean)});
                labels.push_back(std::to_string(r.length));
                reports.push_back(r.report);
            }
            write_text(dir / "length.svg", svg_panels(metric_panels(labels, reports, "L")));
        } else {
            throw InvalidArgument("unknown ablation kind '" + a.kind +
                                  "' (expected guidance, temperature, length or encoder)");
        }
        meta.set("checkpoint_iteration", run.iteration);
    }
    write_text(dir / (a.kind + ".txt"), table);
    write_text(dir / (a.kind + ".csv"), csv);
    meta.write();
    out << table;
    return exit_ok;
}

// ------------------------------------------------------------- baseline

struct BaselineArgs {
    std::string method;
    std::string content, style;
    std::size_t content_index = 0;
    std::size_t style_index = 0;
    std::size_t kernel = 15;
    int levels = 3;
    NstConfig nst;
    std::string out = "baseline";
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out) {
    const Series content = read_series(a.content, a.content_index);
    const Series style = read_series(a.style, a.style_index);
    expect_same_length(content, style, "baseline: content and style");
    const Normalized za = z_normalize(content);
    const Normalized zb = z_normalize(style);
    const fs::path dir = output_path(a.out);
    fs::create_directories(dir);
    Series x;
    if (a.method == "stitch") {
        x = stitch(za.values, zb.values, StitchConfig{a.kernel});
    } else if (a.method == "wavelet" || a.method == "haar") {
        x = haar_swap(za.values, zb.values, a.levels);
    } else if (a.method == "nst") {
        const NstResult r = nst_optimize(za.values, zb.values, a.nst, embedded_features(StatEmbedding::standard()));
        std::string csv = csv_row({"iteration", "loss"});
        for (std::size_t i = 0; i < r.losses.size(); ++i) {
            csv += csv_row({std::to_string(i), fmt(r.losses[i])});
        }
        write_text(dir / "nst_loss.csv", csv);
        x = r.series;
    } else {
        throw InvalidArgument("unknown baseline '" + a.method + "' (expected stitch, wavelet or nst)");
    }
    Dataset d;
    d.records.push_back({a.method, denormalize(x, za.mean, za.std)});
    write_dataset(dir / "output.tsv", d);
    write_text(dir / "plot.svg", svg_panels({{"content a", {{"a", content, palette(0)}}},
                                             {"style b", {{"b", style, palette(1)}}},
                                             {a.method, {{a.method, d.records[0].values, palette(2)}}}}));
    out << "wrote " << (dir / "output.tsv").string() << "\n";
    return exit_ok;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Diffusion-based time-series style transfer"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a synthetic dataset file");
    s->add_option("--family", synth.family, "trend_sine, piecewise_level, ar1, sine_burst or composite")
        ->capture_default_str();
    s->add_option("--count", synth.count)->capture_default_str();
    s->add_option("--length", synth.length)->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--out", synth.out)->capture_default_str();

    ConvertArgs convert;
    auto* cv = app.add_subcommand("convert", "convert a wide CSV (one column per series) to a dataset file");
    cv->add_option("input", convert.input)->required();
    cv->add_option("--out", convert.out)->capture_default_str();

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train (or resume) a model");
    t->add_option("--config", train.config, "JSON run configuration");
    t->add_option("--preset", train.preset, "model size when no config is given: desk, full, tiny")
        ->capture_default_str();
    t->add_option("--data", train.data, "dataset file (default: synthetic corpus)");
    t->add_option("--iters", train.iterations, "total training iterations");
    t->add_option("--batch", train.batch);
    t->add_option("--seed", train.seed, "training seed");
    t->add_option("--steps", train.steps, "diffusion steps T");
    t->add_option("--window", train.window, "training window length");
    t->add_option("--out", train.out, "run directory")->capture_default_str();

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "transfer the style of b onto the content of a");
    g->add_option("--run", gen.run, "trained run directory")->capture_default_str();
    g->add_option("--content", gen.content, "dataset file holding a")->required();
    g->add_option("--style", gen.style, "dataset file holding b");
    g->add_option("--content-index", gen.content_index)->capture_default_str();
    g->add_option("--style-index", gen.style_index)->capture_default_str();
    g->add_option("--sc", gen.sc, "content guidance scale s_c");
    g->add_option("--ss", gen.ss, "style guidance scale s_s");
    g->add_option("--temperature", gen.temperature, "noise temperature lambda");
    g->add_option("--steps", gen.steps, "diffusion steps T");
    g->add_flag("--clip", gen.clip, "clamp the x0 estimate at every step");
    g->add_flag("--unconditional", gen.unconditional, "sample without conditions (a only sets length and scale)");
    g->add_option("--num", gen.num)->capture_default_str();
    g->add_option("--seed", gen.seed)->capture_default_str();
    g->add_option("--out", gen.out)->capture_default_str();

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "score generated series with CP, SI and RM");
    e->add_option("--generated", ev.generated)->required();
    e->add_option("--content", ev.content)->required();
    e->add_option("--style", ev.style)->required();
    e->add_option("--embedding", ev.embedding)->capture_default_str();
    e->add_option("--out", ev.out)->capture_default_str();

    AblateArgs ab;
    auto* a = app.add_subcommand("ablate", "guidance, temperature, length or encoder ablation");
    a->add_option("--kind", ab.kind)->required()->check(CLI::IsMember({"guidance", "temperature", "length", "encoder"}));
    a->add_option("--run", ab.run)->capture_default_str();
    a->add_option("--pairs", ab.pairs, "number of held-out pairs");
    a->add_option("--repeats", ab.repeats, "samples per temperature")->capture_default_str();
    a->add_option("--length", ab.length, "pair length")->capture_default_str();
    a->add_option("--seed", ab.seed)->capture_default_str();
    a->add_option("--iters", ab.iterations, "training iterations per encoder variant")->capture_default_str();
    a->add_option("--preset", ab.preset, "model size for the encoder variants")->capture_default_str();
    a->add_option("--out", ab.out)->capture_default_str();

    BaselineArgs bl;
    auto* b = app.add_subcommand("baseline", "run stitching, wavelet swap or NST-lite");
    b->add_option("--method", bl.method)->required()->check(CLI::IsMember({"stitch", "wavelet", "haar", "nst"}));
    b->add_option("--content", bl.content)->required();
    b->add_option("--style", bl.style)->required();
    b->add_option("--content-index", bl.content_index)->capture_default_str();
    b->add_option("--style-index", bl.style_index)->capture_default_str();
    b->add_option("--kernel", bl.kernel, "stitching smoothing length")->capture_default_str();
    b->add_option("--levels", bl.levels, "Haar levels")->capture_default_str();
    b->add_option("--alpha", bl.nst.alpha)->capture_default_str();
    b->add_option("--beta", bl.nst.beta)->capture_default_str();
    b->add_option("--step", bl.nst.step)->capture_default_str();
    b->add_option("--iters", bl.nst.iterations)->capture_default_str();
    b->add_option("--out", bl.out)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (s->parsed()) {
            return cmd_synth(synth, out);
        }
        if (cv->parsed()) {
            return cmd_convert(convert, out);
        }
        if (t->parsed()) {
            return cmd_train(train, out, err);
        }
        if (g->parsed()) {
            return cmd_generate(gen, out);
        }
        if (e->parsed()) {
            return cmd_evaluate(ev, out);
        }
        if (a->parsed()) {
            return cmd_ablate(ab, out, err);
        }
        if (b->parsed()) {
            return cmd_baseline(bl, out);
        }
    } catch (const NumericError& ex) {
        err << "numeric failure: " << ex.what() << "\n";
        return exit_numeric;
    } catch (const InvalidArgument& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_usage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}

} // namespace dtsst
