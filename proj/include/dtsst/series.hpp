#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtsst/numerics/array.hpp"

namespace dtsst {

/// Univariate series in double precision; the exchange type between the
/// data, metric and baseline layers. Models work on 1 x L matrices.
using Series = std::vector<double>;

inline constexpr double normalization_eps = 1e-8;

struct Normalized {
    Series values;
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

/// Missing values (NaN) become 0, then x' = (x - mean) / (std + 1e-8).
Normalized z_normalize(std::span<const double> x);
Series denormalize(std::span<const double> x, double mean, double std);

double mean_of(std::span<const double> x);
/// Population standard deviation.
double std_of(std::span<const double> x);

template <typename T>
Mat<T> to_row(std::span<const double> x) {
    Mat<T> m(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        m(0, static_cast<Eigen::Index>(i)) = static_cast<T>(x[i]);
    }
    return m;
}

template <typename T>
Series to_series(const Eigen::Ref<const Mat<T>>& m) {
    expect_dim(static_cast<std::size_t>(m.rows()), 1, "series rows");
    Series s(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) {
        s[static_cast<std::size_t>(i)] = static_cast<double>(m(0, i));
    }
    return s;
}

void expect_same_length(std::span<const double> a, std::span<const double> b, const char* what);

} // namespace dtsst
