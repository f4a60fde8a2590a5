#pragma once

// Comparison methods: stitching (smooth(a) + residual(b)), Haar detail
// swapping and NST-lite (gradient descent on the generated series).

#include <cstdint>
#include <functional>
#include <vector>

#include "dtsst/metrics.hpp"
#include "dtsst/series.hpp"

namespace dtsst {

struct StitchConfig {
    std::size_t kernel = 15;
    void validate() const;
};

/// b + (moving_average(a) - moving_average(b)); equals a exactly when a == b.
Series stitch(std::span<const double> a, std::span<const double> b, const StitchConfig& cfg = {});

/// Orthonormal multi-level Haar coefficients. `details` runs finest first;
/// the input is reflect-padded on the right to a multiple of 2^levels.
struct HaarCoefficients {
    Series approx;
    std::vector<Series> details;
    std::size_t length = 0;
};

HaarCoefficients haar_forward(std::span<const double> x, int levels);
Series haar_inverse(const HaarCoefficients& c);

/// Keeps a's approximation, takes b's details at every level.
Series haar_swap(std::span<const double> a, std::span<const double> b, int levels = 3);

/// A differentiable map Series -> vector with its vector-Jacobian product.
struct FeatureMap {
    std::function<Series(std::span<const double>)> apply;
    std::function<Series(std::span<const double> x, std::span<const double> dy)> vjp;
};

struct NstFeatures {
    FeatureMap content;
    FeatureMap style;
};

/// f_c = embed(C(x)), f_s = embed(S(x)) with the multi-scale decomposition.
NstFeatures embedded_features(const Embedding& f, const DecompositionConfig& cfg = {});
/// f_c = C(x), f_s = S(x); both linear.
NstFeatures linear_features(const DecompositionConfig& cfg = {});

struct NstConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double step = 0.1;
    std::size_t iterations = 100;
    /// Backtracking (Armijo) on each step; a rejected step leaves x unchanged.
    bool line_search = true;
    void validate() const;
};

struct NstResult {
    Series series;
    std::vector<double> losses;  // initial loss, then one entry per iteration
};

double nst_loss(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                const NstConfig& cfg, const NstFeatures& features);

NstResult nst_optimize(std::span<const double> a, std::span<const double> b, const NstConfig& cfg,
                       const NstFeatures& features);

/// Largest eigenvalue of a symmetric positive semi-definite operator on R^n.
double power_iteration(const std::function<Series(const Series&)>& op, std::size_t n, std::size_t iterations = 200,
                       std::uint64_t seed = 0);

} // namespace dtsst
