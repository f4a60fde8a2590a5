#include "dtsst/series.hpp"

#include <cmath>
#include <string>

namespace dtsst {

double mean_of(std::span<const double> x) {
    if (x.empty()) {
        throw ShapeError("mean of an empty series");
    }
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s / static_cast<double>(x.size());
}

double std_of(std::span<const double> x) {
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) {
        s += (v - m) * (v - m);
    }
    return std::sqrt(s / static_cast<double>(x.size()));
}

Normalized z_normalize(std::span<const double> x) {
    Normalized out;
    out.values.assign(x.begin(), x.end());
    for (auto& v : out.values) {
        if (std::isnan(v)) {
            v = 0.0;
        }
    }
    out.mean = mean_of(out.values);
    out.std = std_of(out.values);
    const double denom = out.std + normalization_eps;
    for (auto& v : out.values) {
        v = (v - out.mean) / denom;
    }
    return out;
}

Series denormalize(std::span<const double> x, double mean, double std) {
    Series out(x.size());
    const double scale = std + normalization_eps;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = x[i] * scale + mean;
    }
    return out;
}

void expect_same_length(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(what) + ": lengths differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
}

} // namespace dtsst
