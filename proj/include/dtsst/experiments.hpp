#pragma once

// Evaluation harnesses shared by the command line and the acceptance
// suite: held-out pairs, guidance grid, temperature dispersion, length
// extrapolation and the encoder-replacement ablation.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "dtsst/config.hpp"
#include "dtsst/metrics.hpp"

namespace dtsst {

struct PairSet {
    std::vector<Series> contents;  // z-normalized
    std::vector<Series> styles;    // z-normalized
    std::size_t size() const { return contents.size(); }
};

/// Pairs whose content and style families differ: even k uses
/// a = trend_sine + ar1, b = piecewise_level + sine_burst; odd k swaps both.
/// Pair k draws from Rng::for_stream(seed, k).
PairSet held_out_pairs(std::size_t count, std::size_t length, std::uint64_t seed, const SyntheticParams& params = {});

/// Seed of output i for a base seed: base + i.
inline std::uint64_t derive_seed(std::uint64_t base, std::size_t i) { return base + i; }

/// One output per pair, z-normalized for scoring; pair i uses derive_seed(seed, i).
std::vector<Series> transfer_pairs(const Model<float>& model, const NoiseSchedule& schedule, const PairSet& pairs,
                                   const GuidanceConfig& guidance, std::uint64_t seed);

EvalReport score_outputs(const std::vector<Series>& outputs, const PairSet& pairs, const Embedding& f);

using Progress = std::function<void(const std::string&)>;

/// (s_c, s_s) rows of the guidance ablation, in table order.
const std::vector<std::array<double, 2>>& guidance_grid();

struct GuidanceRow {
    double content_scale = 1.0;
    double style_scale = 1.0;
    EvalReport report;
};

std::vector<GuidanceRow> guidance_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                        const PairSet& pairs, const std::vector<std::array<double, 2>>& grid,
                                        const GuidanceConfig& base, std::uint64_t seed, const Embedding& f,
                                        const Progress& progress = {});

struct TemperatureRow {
    double temperature = 1.0;
    double dispersion = 0.0;
    std::vector<std::array<double, 2>> points;  // joint PCA projections
};

/// For every temperature, `repeats` samples of each pair (repeat r uses
/// derive_seed(seed, r), shared across temperatures). All embedded samples
/// are projected on one joint PCA; a row's dispersion is the mean distance
/// of its points to their own centroid, averaged over pairs.
std::vector<TemperatureRow> temperature_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                              const PairSet& pairs, const std::vector<double>& temperatures,
                                              std::size_t repeats, const GuidanceConfig& base, std::uint64_t seed,
                                              const Embedding& f, const Progress& progress = {});

struct LengthRow {
    std::size_t length = 0;
    EvalReport report;
};

/// Fresh held-out pairs at every length (same seed), sampled and scored.
std::vector<LengthRow> length_sweep(const Model<float>& model, const NoiseSchedule& schedule,
                                    const std::vector<std::size_t>& lengths, std::size_t pairs_per_length,
                                    const GuidanceConfig& guidance, std::uint64_t seed, const Embedding& f,
                                    const Progress& progress = {});

struct EncoderVariant {
    std::string name;
    EncoderKind content = EncoderKind::specialized;
    EncoderKind style = EncoderKind::specialized;
};

/// full, style replaced by plain conv, both replaced by plain conv.
std::vector<EncoderVariant> encoder_variants();

struct EncoderRow {
    std::string name;
    double final_loss = 0.0;  // mean of the last 10% of training losses
    EvalReport report;
};

/// Trains each variant from `base` (checkpoints under dir/<name>, resumable)
/// and scores it on `pairs`.
std::vector<EncoderRow> encoder_ablation(const RunConfig& base, const WindowSampler& data, const PairSet& pairs,
                                         const std::filesystem::path& dir, std::uint64_t seed, const Embedding& f,
                                         const Progress& progress = {});

std::string guidance_table(const std::vector<GuidanceRow>& rows);
std::string temperature_table(const std::vector<TemperatureRow>& rows);
std::string length_table(const std::vector<LengthRow>& rows);
std::string encoder_table(const std::vector<EncoderRow>& rows);

} // namespace dtsst
