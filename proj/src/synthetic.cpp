#include "dtsst/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dtsst {

std::string family_name(Family f) {
    switch (f) {
    case Family::trend_sine: return "trend_sine";
    case Family::piecewise_level: return "piecewise_level";
    case Family::ar1: return "ar1";
    case Family::sine_burst: return "sine_burst";
    case Family::composite: return "composite";
    }
    return "unknown";
}

Family parse_family(const std::string& name) {
    for (Family f : {Family::trend_sine, Family::piecewise_level, Family::ar1, Family::sine_burst,
                     Family::composite}) {
        if (family_name(f) == name) {
            return f;
        }
    }
    throw InvalidArgument("unknown synthetic family '" + name + "'");
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::int64_t density(std::size_t n) { return std::max<std::int64_t>(1, static_cast<std::int64_t>(n / 256)); }

Series trend_sine(std::size_t n, const SyntheticParams& p, Rng& rng) {
    const double level = rng.uniform(-p.level_range, p.level_range);
    const double slope = rng.uniform(-p.slope_range, p.slope_range);
    const double amp = rng.uniform(p.amplitude_min, p.amplitude_max);
    const double period = rng.uniform(p.period_min, p.period_max);
    const double phase = rng.uniform(0.0, two_pi);
    Series x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        x[i] = level + slope * (u - 0.5) + amp * std::sin(two_pi * static_cast<double>(i) / period + phase);
    }
    return x;
}

Series piecewise_level(std::size_t n, Rng& rng) {
    const auto segments = static_cast<std::size_t>(rng.uniform_int(2, 5) * density(n));
    std::vector<std::size_t> cuts;
    for (std::size_t s = 1; s < segments; ++s) {
        const auto last = static_cast<std::int64_t>(std::max<std::size_t>(n, 2)) - 1;
        cuts.push_back(static_cast<std::size_t>(rng.uniform_int(1, last)));
    }
    std::sort(cuts.begin(), cuts.end());
    Series x(n);
    std::size_t seg = 0;
    double level = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        while (seg < cuts.size() && i >= cuts[seg]) {
            level = rng.normal();
            ++seg;
        }
        x[i] = level;
    }
    return x;
}

Series ar1(std::size_t n, double phi, Rng& rng) {
    Series x(n);
    double prev = rng.normal() / std::sqrt(1.0 - phi * phi);
    for (std::size_t i = 0; i < n; ++i) {
        prev = i == 0 ? prev : phi * prev + rng.normal();
        x[i] = prev;
    }
    return x;
}

Series sine_burst(std::size_t n, const SyntheticParams& p, Rng& rng) {
    const double amp = rng.uniform(p.burst_amplitude_min, p.burst_amplitude_max);
    const double period = rng.uniform(p.burst_period_min, p.burst_period_max);
    const double phase = rng.uniform(0.0, two_pi);
    std::vector<double> env(n, 0.2);
    const auto bursts = rng.uniform_int(2, 4) * density(n);
    for (std::int64_t b = 0; b < bursts; ++b) {
        const auto len = static_cast<std::size_t>(rng.uniform_int(8, 32));
        const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        for (std::size_t i = start; i < std::min(n, start + len); ++i) {
            env[i] = 1.0;
        }
    }
    Series x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(two_pi * static_cast<double>(i) / period + phase) * env[i] + 0.1 * rng.normal();
    }
    return x;
}

} // namespace

Series generate_family(Family family, std::size_t length, const SyntheticParams& params, Rng& rng) {
    if (length < 1) {
        throw InvalidArgument("synthetic series length must be >= 1");
    }
    switch (family) {
    case Family::trend_sine: return trend_sine(length, params, rng);
    case Family::piecewise_level: return piecewise_level(length, rng);
    case Family::ar1: return ar1(length, rng.uniform(params.ar_min, params.ar_max), rng);
    case Family::sine_burst: return sine_burst(length, params, rng);
    case Family::composite: {
        const Family c = rng.bernoulli(0.5) ? Family::trend_sine : Family::piecewise_level;
        const Family s = rng.bernoulli(0.5) ? Family::ar1 : Family::sine_burst;
        return generate_composite(c, s, length, params, rng);
    }
    }
    throw InvalidArgument("unknown synthetic family");
}

Series generate_composite(Family content, Family style, std::size_t length, const SyntheticParams& params, Rng& rng) {
    if (content != Family::trend_sine && content != Family::piecewise_level) {
        throw InvalidArgument("composite content must be trend_sine or piecewise_level");
    }
    if (style != Family::ar1 && style != Family::sine_burst) {
        throw InvalidArgument("composite style must be ar1 or sine_burst");
    }
    Series c = generate_family(content, length, params, rng);
    Series s = style == Family::ar1 ? ar1(length, rng.uniform(params.style_ar_min, params.style_ar_max), rng)
                                    : sine_burst(length, params, rng);
    const double scale = rng.uniform(params.style_scale_min, params.style_scale_max);
    // A flat content series still gets a unit-scale texture.
    const double c_std = std::max(std_of(c), 0.5);
    const double s_std = std::max(std_of(s), 1e-12);
    const double s_mean = mean_of(s);
    for (std::size_t i = 0; i < length; ++i) {
        c[i] += scale * c_std * (s[i] - s_mean) / s_std;
    }
    return c;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    Dataset data;
    data.records.reserve(spec.count);
    for (std::size_t k = 0; k < spec.count; ++k) {
        Rng rng = Rng::for_stream(spec.seed, k);
        Record rec;
        if (spec.family == Family::composite) {
            const Family c = rng.bernoulli(0.5) ? Family::trend_sine : Family::piecewise_level;
            const Family s = rng.bernoulli(0.5) ? Family::ar1 : Family::sine_burst;
            rec.values = generate_composite(c, s, spec.length, spec.params, rng);
            rec.id = family_name(c) + "+" + family_name(s) + "-" + std::to_string(k);
        } else {
            rec.values = generate_family(spec.family, spec.length, spec.params, rng);
            rec.id = family_name(spec.family) + "-" + std::to_string(k);
        }
        data.records.push_back(std::move(rec));
    }
    return data;
}

} // namespace dtsst
