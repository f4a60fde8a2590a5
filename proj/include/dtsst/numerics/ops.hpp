#pragma once

// Forward and backward kernels for the layers used by the encoders and the
// denoiser. Everything operates on row-major Eigen matrices; series are
// 1 x L rows and channel stacks are C x L.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dtsst/numerics/array.hpp"

namespace dtsst {

enum class Padding { zero, reflect, none };

struct Conv1dShape {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    Padding padding = Padding::zero;
    /// Every tap reads x[tap] - x[center] instead of x[tap]. With an odd
    /// kernel this makes the layer blind to constant inputs exactly, in any
    /// precision; the center weight has no effect and receives zero gradient.
    bool center_referenced = false;

    /// Left/right pad for zero and reflect: (k-1)/2 on the left, the rest on the right.
    std::size_t pad_left() const { return padding == Padding::none ? 0 : (kernel - 1) / 2; }
    std::size_t pad_right() const { return padding == Padding::none ? 0 : kernel - 1 - pad_left(); }
    std::size_t output_length(std::size_t length) const {
        return (length + pad_left() + pad_right() - kernel) / stride + 1;
    }
};

/// Folds an out-of-range index back into [0, n) by mirror reflection
/// (edge sample not repeated). Works for any offset when n >= 2.
inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
    if (n == 1) {
        return 0;
    }
    const std::ptrdiff_t period = 2 * (n - 1);
    i %= period;
    if (i < 0) {
        i += period;
    }
    return i < n ? i : period - i;
}

namespace detail {

/// Source column for every padded position; -1 marks a zero pad.
inline std::vector<std::ptrdiff_t> padded_sources(std::size_t length, const Conv1dShape& s) {
    const auto pl = static_cast<std::ptrdiff_t>(s.pad_left());
    const auto total = length + s.pad_left() + s.pad_right();
    const auto n = static_cast<std::ptrdiff_t>(length);
    std::vector<std::ptrdiff_t> src(total);
    for (std::size_t q = 0; q < total; ++q) {
        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(q) - pl;
        if (i >= 0 && i < n) {
            src[q] = i;
        } else if (s.padding == Padding::reflect) {
            src[q] = reflect_index(i, n);
        } else {
            src[q] = -1;
        }
    }
    return src;
}

inline void check_conv(std::size_t in_rows, std::size_t length, std::size_t w_rows, std::size_t w_cols,
                       const Conv1dShape& s) {
    if (s.kernel < 1 || s.stride < 1) {
        throw InvalidArgument("conv1d: kernel and stride must be >= 1");
    }
    expect_dim(in_rows, s.in_channels, "conv1d input channels");
    expect_dim(w_rows, s.out_channels, "conv1d kernel output channels");
    expect_dim(w_cols, s.in_channels * s.kernel, "conv1d kernel in_channels*k");
    if ((s.padding == Padding::reflect || s.padding == Padding::none) && length < s.kernel) {
        throw ShapeError("conv1d: input length " + std::to_string(length) + " shorter than kernel " +
                         std::to_string(s.kernel));
    }
    if (length == 0) {
        throw ShapeError("conv1d: empty input");
    }
    if (s.center_referenced && s.kernel % 2 == 0) {
        throw InvalidArgument("conv1d: center-referenced taps need an odd kernel");
    }
}

/// im2col: rows indexed by (channel, tap), columns by output position.
template <typename T>
Mat<T> unfold(const Eigen::Ref<const Mat<T>>& x, const Conv1dShape& s) {
    const std::size_t length = static_cast<std::size_t>(x.cols());
    const auto src = padded_sources(length, s);
    const std::size_t out_len = s.output_length(length);
    Mat<T> cols(s.in_channels * s.kernel, out_len);
    for (std::size_t c = 0; c < s.in_channels; ++c) {
        for (std::size_t j = 0; j < s.kernel; ++j) {
            T* row = cols.row(c * s.kernel + j).data();
            for (std::size_t i = 0; i < out_len; ++i) {
                const auto q = src[i * s.stride + j];
                row[i] = q < 0 ? T(0) : x(c, q);
            }
        }
        if (s.center_referenced) {
            const std::size_t center = s.kernel / 2;
            const RowVec<T> ref = cols.row(c * s.kernel + center);
            for (std::size_t j = 0; j < s.kernel; ++j) {
                cols.row(c * s.kernel + j) -= ref;
            }
        }
    }
    return cols;
}

} // namespace detail

/// Cross-correlation y[o, i] = b[o] + sum_{c, j} w[o, c*k + j] * xpad[c, i*stride + j].
/// `weight` is C_out x (C_in * k); `bias`, when given, has C_out entries.
template <typename T>
Mat<T> conv1d(const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const Mat<T>>& weight, const T* bias,
              const Conv1dShape& s) {
    detail::check_conv(x.rows(), x.cols(), weight.rows(), weight.cols(), s);
    const Mat<T> cols = detail::unfold<T>(x, s);
    Mat<T> y = weight * cols;
    if (bias != nullptr) {
        for (Eigen::Index o = 0; o < y.rows(); ++o) {
            y.row(o).array() += bias[o];
        }
    }
    return y;
}

/// Accumulates dL/dweight (and dL/dbias) and returns dL/dx when `want_input_grad`.
template <typename T>
Mat<T> conv1d_backward(const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const Mat<T>>& weight,
                       const Eigen::Ref<const Mat<T>>& dy, const Conv1dShape& s,
                       Eigen::Ref<Mat<T>> dweight, T* dbias, bool want_input_grad) {
    const Mat<T> cols = detail::unfold<T>(x, s);
    expect_dim(dy.rows(), s.out_channels, "conv1d_backward dy rows");
    expect_dim(dy.cols(), cols.cols(), "conv1d_backward dy cols");
    dweight.noalias() += dy * cols.transpose();
    if (dbias != nullptr) {
        for (Eigen::Index o = 0; o < dy.rows(); ++o) {
            dbias[o] += dy.row(o).sum();
        }
    }
    if (!want_input_grad) {
        return {};
    }
    Mat<T> dcols = weight.transpose() * dy;
    if (s.center_referenced) {
        const std::size_t center = s.kernel / 2;
        for (std::size_t c = 0; c < s.in_channels; ++c) {
            RowVec<T> total = RowVec<T>::Zero(dcols.cols());
            for (std::size_t j = 0; j < s.kernel; ++j) {
                if (j != center) {
                    total += dcols.row(c * s.kernel + j);
                }
            }
            dcols.row(c * s.kernel + center) = -total;
        }
    }
    const auto src = detail::padded_sources(x.cols(), s);
    Mat<T> dx = Mat<T>::Zero(x.rows(), x.cols());
    for (std::size_t c = 0; c < s.in_channels; ++c) {
        for (std::size_t j = 0; j < s.kernel; ++j) {
            const T* row = dcols.row(c * s.kernel + j).data();
            for (Eigen::Index i = 0; i < dcols.cols(); ++i) {
                const auto q = src[i * s.stride + j];
                if (q >= 0) {
                    dx(c, q) += row[i];
                }
            }
        }
    }
    return dx;
}

/// Linear interpolation on the index grid with both endpoints pinned
/// (source index i maps to i * (L_small - 1) / (L - 1)).
template <typename T>
Mat<T> linear_interp_resize(const Eigen::Ref<const Mat<T>>& x, std::size_t target_len) {
    if (x.cols() < 2) {
        throw ShapeError("linear_interp_resize: need at least 2 samples, got " + std::to_string(x.cols()));
    }
    if (target_len < 1) {
        throw InvalidArgument("linear_interp_resize: target length must be >= 1");
    }
    const Eigen::Index n = x.cols();
    Mat<T> y(x.rows(), static_cast<Eigen::Index>(target_len));
    for (std::size_t i = 0; i < target_len; ++i) {
        if (target_len == 1) {
            y.col(0) = x.col(0);
            break;
        }
        const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
        auto lo = static_cast<Eigen::Index>(std::floor(pos));
        if (lo >= n - 1) {
            lo = n - 2;
        }
        const T frac = static_cast<T>(pos - static_cast<double>(lo));
        y.col(i) = (T(1) - frac) * x.col(lo) + frac * x.col(lo + 1);
    }
    return y;
}

template <typename T>
Mat<T> linear_interp_resize_backward(const Eigen::Ref<const Mat<T>>& dy, std::size_t source_len) {
    const Eigen::Index n = static_cast<Eigen::Index>(source_len);
    const auto target_len = static_cast<std::size_t>(dy.cols());
    Mat<T> dx = Mat<T>::Zero(dy.rows(), n);
    for (std::size_t i = 0; i < target_len; ++i) {
        if (target_len == 1) {
            dx.col(0) += dy.col(0);
            break;
        }
        const double pos = static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
        auto lo = static_cast<Eigen::Index>(std::floor(pos));
        if (lo >= n - 1) {
            lo = n - 2;
        }
        const T frac = static_cast<T>(pos - static_cast<double>(lo));
        dx.col(lo) += (T(1) - frac) * dy.col(i);
        dx.col(lo + 1) += frac * dy.col(i);
    }
    return dx;
}

/// Row-wise softmax with max subtraction. Throws NumericError on NaN input.
template <typename T>
Mat<T> softmax_rows(const Eigen::Ref<const Mat<T>>& m) {
    Mat<T> out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        if (row.hasNaN()) {
            throw NumericError("softmax_rows: NaN in row " + std::to_string(r));
        }
        const T mx = row.maxCoeff();
        out.row(r) = (row.array() - mx).exp();
        out.row(r) /= out.row(r).sum();
    }
    return out;
}

/// Given p = softmax(s) and dL/dp, returns dL/ds.
template <typename T>
Mat<T> softmax_rows_backward(const Eigen::Ref<const Mat<T>>& p, const Eigen::Ref<const Mat<T>>& dp) {
    Mat<T> ds(p.rows(), p.cols());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const T dot = p.row(r).dot(dp.row(r));
        ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
    }
    return ds;
}

inline constexpr double layer_norm_eps = 1e-5;

template <typename T>
struct LayerNormCache {
    Mat<T> normalized;  // (x - mean) / sqrt(var + eps)
    Vec<T> inv_std;
};

/// Per-row normalization (biased variance, eps 1e-5) followed by gain/shift.
template <typename T>
Mat<T> layer_norm(const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const RowVec<T>>& gain,
                  const Eigen::Ref<const RowVec<T>>& shift, LayerNormCache<T>* cache = nullptr) {
    const Eigen::Index h = x.cols();
    if (h < 2) {
        throw ShapeError("layer_norm: need at least 2 features");
    }
    expect_dim(gain.cols(), h, "layer_norm gain");
    expect_dim(shift.cols(), h, "layer_norm shift");
    Mat<T> xhat(x.rows(), h);
    Vec<T> inv_std(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const T mean = x.row(r).mean();
        const auto centered = (x.row(r).array() - mean).eval();
        const T var = centered.square().mean();
        inv_std(r) = T(1) / std::sqrt(var + static_cast<T>(layer_norm_eps));
        xhat.row(r) = centered * inv_std(r);
    }
    Mat<T> y = (xhat.array().rowwise() * gain.array()).rowwise() + shift.array();
    if (cache != nullptr) {
        cache->normalized = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

template <typename T>
Mat<T> layer_norm_backward(const LayerNormCache<T>& cache, const Eigen::Ref<const RowVec<T>>& gain,
                           const Eigen::Ref<const Mat<T>>& dy, Eigen::Ref<RowVec<T>> dgain,
                           Eigen::Ref<RowVec<T>> dshift) {
    dgain += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
    dshift += dy.colwise().sum();
    const Mat<T> dxhat = dy.array().rowwise() * gain.array();
    Mat<T> dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const T mean_d = dxhat.row(r).mean();
        const T mean_dx = dxhat.row(r).dot(cache.normalized.row(r)) / static_cast<T>(dy.cols());
        dx.row(r) = cache.inv_std(r) *
                    (dxhat.row(r).array() - mean_d - cache.normalized.row(r).array() * mean_dx);
    }
    return dx;
}

// GELU uses the tanh approximation 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
template <std::floating_point T>
T gelu(T x) {
    constexpr T c = static_cast<T>(0.7978845608028654);
    const T u = c * (x + static_cast<T>(0.044715) * x * x * x);
    return static_cast<T>(0.5) * x * (T(1) + std::tanh(u));
}

template <std::floating_point T>
T gelu_grad(T x) {
    constexpr T c = static_cast<T>(0.7978845608028654);
    const T x2 = x * x;
    const T th = std::tanh(c * (x + static_cast<T>(0.044715) * x2 * x));
    return static_cast<T>(0.5) * (T(1) + th) +
           static_cast<T>(0.5) * x * (T(1) - th * th) * c * (T(1) + static_cast<T>(3 * 0.044715) * x2);
}

template <std::floating_point T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <std::floating_point T>
T silu(T x) {
    return x * sigmoid(x);
}

template <std::floating_point T>
T silu_grad(T x) {
    const T s = sigmoid(x);
    return s * (T(1) + x * (T(1) - s));
}

template <typename Derived>
auto gelu(const Eigen::MatrixBase<Derived>& x) {
    using T = typename Derived::Scalar;
    return x.unaryExpr([](T v) { return gelu(v); }).eval();
}

template <typename Derived>
auto silu(const Eigen::MatrixBase<Derived>& x) {
    using T = typename Derived::Scalar;
    return x.unaryExpr([](T v) { return silu(v); }).eval();
}

/// dL/dx for y = gelu(x), given the pre-activation x.
template <typename T>
Mat<T> gelu_backward(const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const Mat<T>>& dy) {
    return dy.cwiseProduct(x.unaryExpr([](T v) { return gelu_grad(v); }));
}

template <typename T>
Mat<T> silu_backward(const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const Mat<T>>& dy) {
    return dy.cwiseProduct(x.unaryExpr([](T v) { return silu_grad(v); }));
}

} // namespace dtsst
