#pragma once

// Multi-scale averaging decomposition, content preservation (CP), style
// integration (SI), realism (RM) and the embedding-dispersion analysis.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "dtsst/series.hpp"

namespace dtsst {

/// Centered moving average of odd length k with mirror-reflect edges.
Series moving_average(std::span<const double> x, std::size_t k);
/// Transpose of moving_average: returns dL/dx given dL/dy.
Series moving_average_vjp(std::span<const double> dy, std::size_t k);

struct DecompositionConfig {
    std::vector<std::size_t> kernels{3, 5, 15};
    void validate() const;
};

struct Decomposition {
    Series content;  // last smoothing stage
    Series style;    // sum of the per-stage residuals
};

/// Requires |x| > max kernel.
Decomposition decompose(std::span<const double> x, const DecompositionConfig& cfg = {});
/// Adjoints of the linear maps x -> C(x) and x -> S(x).
Series content_vjp(std::span<const double> dy, const DecompositionConfig& cfg = {});
Series style_vjp(std::span<const double> dy, const DecompositionConfig& cfg = {});

double mse(std::span<const double> a, std::span<const double> b);
double cp(std::span<const double> generated, std::span<const double> content, const DecompositionConfig& cfg = {});
double si(std::span<const double> generated, std::span<const double> style, const DecompositionConfig& cfg = {});

/// Named deterministic map from a series to a fixed-length vector.
class Embedding {
public:
    virtual ~Embedding() = default;
    virtual std::string name() const = 0;
    virtual std::size_t size() const = 0;
    virtual Series embed(std::span<const double> x) const = 0;
    /// dL/dx given dL/d(embed(x)).
    virtual Series vjp(std::span<const double> x, std::span<const double> dy) const = 0;
};

/// "stat-v1": mean, standard deviation, autocorrelations at lags 1..8 and
/// 16 log band powers, each z-scored by per-feature constants.
///
/// Band powers: the de-meaned series d is evaluated at 64 normalized
/// frequencies f = (m + 0.5) / 128, m = 0..63, as P(f) = |sum_i d_i
/// e^{-2 pi i f i}|^2 / N; band b is log(mean of P over m = 4b..4b+3 + 1e-3).
/// Autocorrelations use sum_i d_i d_{i+k} / (sum_i d_i^2 + 1e-12).
class StatEmbedding : public Embedding {
public:
    static constexpr std::size_t lags = 8;
    static constexpr std::size_t bands = 16;
    static constexpr std::size_t dims = 2 + lags + bands;
    static constexpr double power_floor = 1e-3;

    /// Identity scaling (mean 0, scale 1).
    StatEmbedding();
    StatEmbedding(std::vector<double> center, std::vector<double> scale);

    /// Fits the z-scoring constants on a corpus of series.
    static StatEmbedding fit(const std::vector<Series>& corpus);
    /// Constants fit on the content and style components of 256 windows
    /// (L = 128) of a fixed synthetic composite corpus (seed 20240601).
    static const StatEmbedding& standard();

    std::string name() const override { return "stat-v1"; }
    std::size_t size() const override { return dims; }
    Series raw(std::span<const double> x) const;
    Series embed(std::span<const double> x) const override;
    Series vjp(std::span<const double> x, std::span<const double> dy) const override;

    const std::vector<double>& center() const { return center_; }
    const std::vector<double>& scale() const { return scale_; }

private:
    std::vector<double> center_;
    std::vector<double> scale_;
};

/// 1/2 [MSE(f(C(x)), f(C(a))) + MSE(f(S(x)), f(S(b)))].
double rm(std::span<const double> generated, std::span<const double> content, std::span<const double> style,
          const Embedding& f, const DecompositionConfig& cfg = {});

struct PcaResult {
    std::vector<std::array<double, 2>> projections;
    double dispersion = 0.0;  // mean distance to the centroid in the 2-D projection
};

/// PCA of points (one row each); needs at least 3 rows.
PcaResult pca_spread_points(const std::vector<std::vector<double>>& points);
/// Embeds every sample with f and runs pca_spread_points.
PcaResult pca_spread(const std::vector<Series>& samples, const Embedding& f);

struct PairScore {
    double cp = 0.0;
    double si = 0.0;
    double rm = 0.0;
    double overall = 0.0;  // (cp + si + rm) / 3
};

struct Aggregate {
    double mean = 0.0;
    double se = 0.0;  // sample std / sqrt(n); 0 for n = 1
};

struct EvalReport {
    std::string embedding;
    std::vector<PairScore> pairs;
    Aggregate cp, si, rm, overall;
};

/// Inputs must be z-normalized windows (|mean| < 1e-6 and |std - 1| < 1e-3,
/// or all zeros); violations throw InvalidArgument instead of renormalizing.
EvalReport evaluate(const std::vector<Series>& generated, const std::vector<Series>& contents,
                    const std::vector<Series>& styles, const Embedding& f, const DecompositionConfig& cfg = {});

Aggregate aggregate(const std::vector<double>& values);

/// One JSON object per pair, then one {"aggregate": ...} line.
std::string report_jsonl(const EvalReport& report);
std::string report_table(const EvalReport& report);

void check_normalized(std::span<const double> x, const std::string& what);

} // namespace dtsst
