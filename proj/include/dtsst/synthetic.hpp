#pragma once

// Synthetic series families. With i = 0..N-1 and u = i / (N - 1):
//
//   trend_sine       level + slope (u - 1/2) + A sin(2 pi i / P + phase)
//   piecewise_level  K in {2..5} * D constant segments, cut points uniform,
//                    levels ~ N(0, 1)
//   ar1              x_0 ~ N(0, 1 / (1 - phi^2)), x_i = phi x_{i-1} + e_i
//   sine_burst       A sin(2 pi i / P + phase) * env_i + 0.1 e_i, env_i = 1
//                    inside {2..4} * D bursts of 8..32 samples and 0.2 elsewhere
//   composite        content (trend_sine | piecewise_level) plus a style
//                    component (ar1 | sine_burst) rescaled to
//                    style_scale * std(content)
//
// D = max(1, floor(N / 256)) keeps the feature density of long series at
// that of 256-sample ones. e_i ~ N(0, 1). Every other quantity is uniform on its parameter range.
// Series k of a dataset uses Rng::for_stream(seed, k).

#include <cstdint>
#include <string>

#include "dtsst/data_io.hpp"

namespace dtsst {

enum class Family { trend_sine, piecewise_level, ar1, sine_burst, composite };

std::string family_name(Family f);
Family parse_family(const std::string& name);

struct SyntheticParams {
    double level_range = 1.0;  // level ~ U[-r, r]
    double slope_range = 2.0;  // slope ~ U[-r, r]
    double amplitude_min = 0.5;
    double amplitude_max = 2.0;
    double period_min = 32.0;
    double period_max = 128.0;
    double ar_min = 0.5;
    double ar_max = 0.95;
    double burst_period_min = 3.0;
    double burst_period_max = 8.0;
    double burst_amplitude_min = 0.5;
    double burst_amplitude_max = 1.5;
    /// AR coefficient range of the style component inside composites.
    double style_ar_min = -0.5;
    double style_ar_max = 0.5;
    double style_scale_min = 0.2;
    double style_scale_max = 0.5;
};

struct SyntheticSpec {
    Family family = Family::composite;
    std::size_t count = 2000;
    std::size_t length = 256;
    std::uint64_t seed = 0;
    SyntheticParams params;
};

Series generate_family(Family family, std::size_t length, const SyntheticParams& params, Rng& rng);

/// content + style_scale * std(content) * style / std(style).
Series generate_composite(Family content, Family style, std::size_t length, const SyntheticParams& params, Rng& rng);

/// Ids are "<family>-<k>"; composite ids name both parts, e.g. "trend_sine+ar1-7".
Dataset generate_synthetic(const SyntheticSpec& spec);

} // namespace dtsst
