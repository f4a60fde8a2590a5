#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dtsst/numerics/array.hpp"

namespace dtsst {

struct ParamId {
    std::uint32_t index = 0;
};

/// Named learnable arrays with their gradient accumulators. Iteration order
/// is insertion order, which fixes the checkpoint layout and the optimizer
/// update order.
template <typename T>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Array<T> value;
        Array<T> grad;
    };

    ParamId add(const std::string& name, Shape shape) {
        if (index_.contains(name)) {
            throw InvalidArgument("ParamStore: duplicate parameter '" + name + "'");
        }
        Array<T> value(shape);
        Array<T> grad(std::move(shape));
        entries_.push_back({name, std::move(value), std::move(grad)});
        const ParamId id{static_cast<std::uint32_t>(entries_.size() - 1)};
        index_.emplace(name, id.index);
        return id;
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) {
            n += e.value.size();
        }
        return n;
    }

    Entry& entry(ParamId id) { return entries_.at(id.index); }
    const Entry& entry(ParamId id) const { return entries_.at(id.index); }
    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    Array<T>& value(ParamId id) { return entry(id).value; }
    const Array<T>& value(ParamId id) const { return entry(id).value; }
    Array<T>& grad(ParamId id) { return entry(id).grad; }

    MatMap<T> mat(ParamId id) { return value(id).as_matrix(); }
    ConstMatMap<T> mat(ParamId id) const { return value(id).as_matrix(); }
    MatMap<T> grad_mat(ParamId id) { return grad(id).as_matrix(); }

    /// Rank-1 parameter viewed as a row vector.
    Eigen::Map<const RowVec<T>> row(ParamId id) const {
        const auto& v = value(id);
        return Eigen::Map<const RowVec<T>>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    Eigen::Map<RowVec<T>> grad_row(ParamId id) {
        auto& g = grad(id);
        return Eigen::Map<RowVec<T>>(g.data(), static_cast<Eigen::Index>(g.size()));
    }

    std::optional<ParamId> find(const std::string& name) const {
        const auto it = index_.find(name);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return ParamId{it->second};
    }

    void zero_grad() {
        for (auto& e : entries_) {
            e.grad.fill(T(0));
        }
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

} // namespace dtsst
