#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "dtsst/numerics/param_store.hpp"

namespace dtsst {

/// Evaluates the loss at the current parameter values. When `with_grad` is
/// set it must also accumulate dL/dw into the (pre-zeroed) gradient arrays.
using LossFn = std::function<double(ParamStore<double>&, bool with_grad)>;

struct GradCheckOptions {
    std::size_t samples = 200;
    double tolerance = 1e-4;
    double step = 1e-5;
    std::uint64_t seed = 1;
};

struct GradCheckReport {
    bool passed = true;
    std::size_t checked = 0;
    double worst_error = 0.0;
    std::string worst_name;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;

    std::string summary() const;
};

/// Compares analytic gradients against central differences on randomly
/// chosen coordinates: |analytic - fd| / max(1, |fd|) <= tolerance.
/// Coordinates are drawn round-robin over parameters so every tensor is
/// visited before any is sampled twice.
GradCheckReport grad_check(const LossFn& loss, ParamStore<double>& params, const GradCheckOptions& options = {});

} // namespace dtsst
