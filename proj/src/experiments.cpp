#include "dtsst/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace dtsst {

PairSet held_out_pairs(std::size_t count, std::size_t length, std::uint64_t seed, const SyntheticParams& params) {
    PairSet p;
    for (std::size_t k = 0; k < count; ++k) {
        Rng rng = Rng::for_stream(seed, k);
        const bool odd = k % 2 == 1;
        const Family ca = odd ? Family::piecewise_level : Family::trend_sine;
        const Family sa = odd ? Family::sine_burst : Family::ar1;
        const Family cb = odd ? Family::trend_sine : Family::piecewise_level;
        const Family sb = odd ? Family::ar1 : Family::sine_burst;
        p.contents.push_back(z_normalize(generate_composite(ca, sa, length, params, rng)).values);
        p.styles.push_back(z_normalize(generate_composite(cb, sb, length, params, rng)).values);
    }
    return p;
}

std::vector<Series> transfer_pairs(const Model<float>& model, const NoiseSchedule& schedule, const PairSet& pairs,
                                   const GuidanceConfig& guidance, std::uint64_t seed) {
    std::vector<Series> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const Series x = sample<float>(model, schedule, pairs.contents[i], pairs.styles[i], guidance,
                                       derive_seed(seed, i));
        out.push_back(z_normalize(x).values);
    }
    return out;
}

EvalReport score_outputs(const std::vector<Series>& outputs, const PairSet& pairs, const Embedding& f) {
    return evaluate(outputs, pairs.contents, pairs.styles, f);
}

const std::vector<std::array<double, 2>>& guidance_grid() {
    static const std::vector<std::array<double, 2>> grid{{1.00, 0.25}, {0.25, 1.00}, {0.25, 0.25}, {0.50, 0.50},
                                                         {0.75, 0.75}, {1.00, 1.00}, {1.25, 1.25}, {1.50, 1.50},
                                                         {1.75, 1.75}, {2.00, 2.00}};
    return grid;
}

std::vector<GuidanceRow> guidance_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                        const PairSet& pairs, const std::vector<std::array<double, 2>>& grid,
                                        const GuidanceConfig& base, std::uint64_t seed, const Embedding& f,
                                        const Progress& progress) {
    std::vector<GuidanceRow> rows;
    for (const auto& [sc, ss] : grid) {
        GuidanceConfig g = base;
        g.content_scale = sc;
        g.style_scale = ss;
        GuidanceRow row{sc, ss, score_outputs(transfer_pairs(model, schedule, pairs, g, seed), pairs, f)};
        if (progress) {
            std::ostringstream os;
            os << "guidance " << sc << "/" << ss << ": overall " << row.report.overall.mean;
            progress(os.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<TemperatureRow> temperature_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                              const PairSet& pairs, const std::vector<double>& temperatures,
                                              std::size_t repeats, const GuidanceConfig& base, std::uint64_t seed,
                                              const Embedding& f, const Progress& progress) {
    if (repeats < 2) {
        throw InvalidArgument("temperature sweep: need at least 2 repeats");
    }
    std::vector<std::vector<double>> points;  // temperature-major, then pair, then repeat
    for (double lambda : temperatures) {
        GuidanceConfig g = base;
        g.temperature = lambda;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            for (std::size_t r = 0; r < repeats; ++r) {
                const Series x = sample<float>(model, schedule, pairs.contents[p], pairs.styles[p], g,
                                               derive_seed(seed, r));
                points.push_back(f.embed(x));
            }
        }
        if (progress) {
            std::ostringstream os;
            os << "temperature " << lambda << ": " << pairs.size() * repeats << " samples";
            progress(os.str());
        }
    }
    const PcaResult pca = pca_spread_points(points);
    std::vector<TemperatureRow> rows;
    std::size_t idx = 0;
    for (double lambda : temperatures) {
        TemperatureRow row;
        row.temperature = lambda;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            std::array<double, 2> c{0.0, 0.0};
            for (std::size_t r = 0; r < repeats; ++r) {
                c[0] += pca.projections[idx + r][0] / static_cast<double>(repeats);
                c[1] += pca.projections[idx + r][1] / static_cast<double>(repeats);
            }
            double d = 0.0;
            for (std::size_t r = 0; r < repeats; ++r) {
                const auto& q = pca.projections[idx + r];
                d += std::hypot(q[0] - c[0], q[1] - c[1]);
                row.points.push_back(q);
            }
            row.dispersion += d / static_cast<double>(repeats) / static_cast<double>(pairs.size());
            idx += repeats;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<LengthRow> length_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                    const std::vector<std::size_t>& lengths, std::size_t pairs_per_length,
                                    const GuidanceConfig& guidance, std::uint64_t seed, const Embedding& f,
                                    const Progress& progress) {
    std::vector<LengthRow> rows;
    for (std::size_t len : lengths) {
        const PairSet pairs = held_out_pairs(pairs_per_length, len, seed);
        LengthRow row{len, score_outputs(transfer_pairs(model, schedule, pairs, guidance, seed), pairs, f)};
        if (progress) {
            std::ostringstream os;
            os << "length " << len << ": CP " << row.report.cp.mean << " SI " << row.report.si.mean << " RM "
               << row.report.rm.mean;
            progress(os.str());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<EncoderVariant> encoder_variants() {
    return {{"full", EncoderKind::specialized, EncoderKind::specialized},
            {"style-plain", EncoderKind::specialized, EncoderKind::plain_conv},
            {"both-plain", EncoderKind::plain_conv, EncoderKind::plain_conv}};
}

std::vector<EncoderRow> encoder_ablation(const RunConfig& base, const WindowSampler& data, const PairSet& pairs,
                                         const std::filesystem::path& dir, std::uint64_t seed, const Embedding& f,
                                         const Progress& progress) {
    std::vector<EncoderRow> rows;
    const NoiseSchedule schedule = base.schedule.build();
    for (const auto& v : encoder_variants()) {
        RunConfig cfg = base;
        cfg.model.content_kind = v.content;
        cfg.model.style_kind = v.style;
        Model<float> model(cfg.model);
        model.init(cfg.model_seed);
        const auto sub = dir / v.name;
        std::filesystem::create_directories(sub);
        save_config(sub / "config.json", cfg);
        run_training(model, schedule, data, cfg.train, sub);
        const auto log = LossLog::read(sub / loss_file);
        EncoderRow row;
        row.name = v.name;
        const std::size_t tail = std::max<std::size_t>(1, log.size() / 10);
        for (std::size_t i = log.size() - std::min(tail, log.size()); i < log.size(); ++i) {
            row.final_loss += log[i].second / static_cast<double>(std::min(tail, log.size()));
        }
        row.report = score_outputs(transfer_pairs(model, schedule, pairs, cfg.sampling, seed), pairs, f);
        if (progress) {
            progress("encoder variant " + v.name + ": overall " + std::to_string(row.report.overall.mean));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::string cell(const Aggregate& a) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << a.mean << " ± " << a.se;
    return os.str();
}

void metric_header(std::ostringstream& os) {
    os << std::setw(18) << "CP" << std::setw(18) << "SI" << std::setw(18) << "RM" << std::setw(18) << "Avg" << '\n';
}

void metric_cells(std::ostringstream& os, const EvalReport& r) {
    os << std::setw(18) << cell(r.cp) << std::setw(18) << cell(r.si) << std::setw(18) << cell(r.rm) << std::setw(18)
       << cell(r.overall) << '\n';
}

} // namespace

std::string guidance_table(const std::vector<GuidanceRow>& rows) {
    std::ostringstream os;
    os << std::setw(6) << "s_c" << std::setw(6) << "s_s";
    metric_header(os);
    for (const auto& r : rows) {
        os << std::fixed << std::setprecision(2) << std::setw(6) << r.content_scale << std::setw(6) << r.style_scale;
        metric_cells(os, r.report);
    }
    return os.str();
}

std::string temperature_table(const std::vector<TemperatureRow>& rows) {
    std::ostringstream os;
    os << std::setw(8) << "lambda" << std::setw(14) << "dispersion" << '\n';
    for (const auto& r : rows) {
        os << std::fixed << std::setprecision(2) << std::setw(8) << r.temperature << std::setprecision(4)
           << std::setw(14) << r.dispersion << '\n';
    }
    return os.str();
}

std::string length_table(const std::vector<LengthRow>& rows) {
    std::ostringstream os;
    os << std::setw(8) << "L";
    metric_header(os);
    for (const auto& r : rows) {
        os << std::setw(8) << r.length;
        metric_cells(os, r.report);
    }
    return os.str();
}

std::string encoder_table(const std::vector<EncoderRow>& rows) {
    std::ostringstream os;
    os << std::setw(14) << "variant" << std::setw(12) << "loss";
    metric_header(os);
    for (const auto& r : rows) {
        os << std::setw(14) << r.name << std::fixed << std::setprecision(4) << std::setw(12) << r.final_loss;
        metric_cells(os, r.report);
    }
    return os.str();
}

} // namespace dtsst
