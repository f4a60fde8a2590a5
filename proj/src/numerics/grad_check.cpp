#include "dtsst/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtsst/numerics/rng.hpp"

namespace dtsst {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << (passed ? "PASS" : "FAIL") << " checked=" << checked << " worst=" << worst_error << " at "
       << worst_name << '[' << worst_index << "] analytic=" << worst_analytic << " numeric=" << worst_numeric;
    return os.str();
}

GradCheckReport grad_check(const LossFn& loss, ParamStore<double>& params, const GradCheckOptions& options) {
    GradCheckReport report;
    if (params.size() == 0) {
        return report;
    }
    params.zero_grad();
    loss(params, true);

    Rng rng(options.seed);
    auto& entries = params.entries();
    for (std::size_t s = 0; s < options.samples; ++s) {
        auto& e = entries[s % entries.size()];
        const auto idx = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(e.value.size()) - 1));
        const double analytic = e.grad[idx];
        const double saved = e.value[idx];
        e.value[idx] = saved + options.step;
        const double up = loss(params, false);
        e.value[idx] = saved - options.step;
        const double down = loss(params, false);
        e.value[idx] = saved;
        const double numeric = (up - down) / (2.0 * options.step);
        const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        ++report.checked;
        if (report.checked == 1 || std::isnan(err) || err > report.worst_error) {
            report.worst_error = err;
            report.worst_name = e.name;
            report.worst_index = idx;
            report.worst_analytic = analytic;
            report.worst_numeric = numeric;
        }
        if (!(err <= options.tolerance)) {
            report.passed = false;
        }
    }
    return report;
}

} // namespace dtsst
