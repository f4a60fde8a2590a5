#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dtsst/error.hpp"

namespace dtsst {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major n-d array. data().size() always equals the product of the dims.
template <typename T>
class Array {
public:
    Array() = default;

    explicit Array(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
        for (auto d : shape_) {
            if (d == 0) {
                throw ShapeError("Array: zero-sized dimension in shape " + shape_to_string(shape_));
            }
        }
        data_.assign(element_count(shape_), fill);
    }

    Array(Shape shape, const std::vector<T>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
        if (data_.size() != element_count(shape_)) {
            throw ShapeError("Array: " + std::to_string(data_.size()) + " values do not fill shape " +
                             shape_to_string(shape_));
        }
    }

    static std::size_t element_count(const Shape& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    /// Rows = first dim, cols = product of the remaining dims (rank 1 is a single row).
    std::size_t matrix_rows() const { return rank() <= 1 ? 1 : shape_[0]; }
    std::size_t matrix_cols() const { return rank() <= 1 ? size() : size() / shape_[0]; }

    MatMap<T> as_matrix() {
        return MatMap<T>(data_.data(), static_cast<Eigen::Index>(matrix_rows()),
                         static_cast<Eigen::Index>(matrix_cols()));
    }
    ConstMatMap<T> as_matrix() const {
        return ConstMatMap<T>(data_.data(), static_cast<Eigen::Index>(matrix_rows()),
                              static_cast<Eigen::Index>(matrix_cols()));
    }

    bool operator==(const Array&) const = default;

private:
    Shape shape_;
    // Aligned like Eigen's own allocations, so vectorized kernels over
    // mapped parameters take the same code path in every run.
    std::vector<T, Eigen::aligned_allocator<T>> data_;
};

/// Throws ShapeError naming `what` unless the two extents agree.
inline void expect_dim(std::size_t got, std::size_t want, const std::string& what) {
    if (got != want) {
        throw ShapeError(what + ": expected " + std::to_string(want) + ", got " + std::to_string(got));
    }
}

} // namespace dtsst
