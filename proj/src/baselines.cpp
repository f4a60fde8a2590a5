#include "dtsst/baselines.hpp"

#include <cmath>
#include <numbers>

#include "dtsst/numerics/ops.hpp"
#include "dtsst/numerics/rng.hpp"

namespace dtsst {

void StitchConfig::validate() const {
    if (kernel < 3 || kernel % 2 == 0) {
        throw InvalidArgument("stitch: kernel must be odd and >= 3, got " + std::to_string(kernel));
    }
}

Series stitch(std::span<const double> a, std::span<const double> b, const StitchConfig& cfg) {
    cfg.validate();
    expect_same_length(a, b, "stitch");
    const Series sa = moving_average(a, cfg.kernel);
    const Series sb = moving_average(b, cfg.kernel);
    Series out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = b[i] + (sa[i] - sb[i]);
    }
    return out;
}

HaarCoefficients haar_forward(std::span<const double> x, int levels) {
    if (levels < 1) {
        throw InvalidArgument("haar: levels must be >= 1, got " + std::to_string(levels));
    }
    if (x.empty()) {
        throw ShapeError("haar: empty series");
    }
    const std::size_t block = std::size_t{1} << levels;
    const std::size_t n = x.size();
    const std::size_t padded = (n + block - 1) / block * block;
    Series cur(padded);
    for (std::size_t i = 0; i < padded; ++i) {
        cur[i] = x[static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(n)))];
    }
    HaarCoefficients c;
    c.length = n;
    const double r = std::numbers::sqrt2 / 2.0;
    for (int l = 0; l < levels; ++l) {
        const std::size_t half = cur.size() / 2;
        Series approx(half), detail(half);
        for (std::size_t i = 0; i < half; ++i) {
            approx[i] = (cur[2 * i] + cur[2 * i + 1]) * r;
            detail[i] = (cur[2 * i] - cur[2 * i + 1]) * r;
        }
        c.details.push_back(std::move(detail));
        cur = std::move(approx);
    }
    c.approx = std::move(cur);
    return c;
}

Series haar_inverse(const HaarCoefficients& c) {
    const double r = std::numbers::sqrt2 / 2.0;
    Series cur = c.approx;
    for (auto it = c.details.rbegin(); it != c.details.rend(); ++it) {
        if (it->size() != cur.size()) {
            throw ShapeError("haar_inverse: inconsistent coefficient lengths");
        }
        Series next(2 * cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) {
            next[2 * i] = (cur[i] + (*it)[i]) * r;
            next[2 * i + 1] = (cur[i] - (*it)[i]) * r;
        }
        cur = std::move(next);
    }
    if (c.length > cur.size()) {
        throw ShapeError("haar_inverse: length exceeds coefficients");
    }
    cur.resize(c.length);
    return cur;
}

Series haar_swap(std::span<const double> a, std::span<const double> b, int levels) {
    expect_same_length(a, b, "haar_swap");
    HaarCoefficients ca = haar_forward(a, levels);
    HaarCoefficients cb = haar_forward(b, levels);
    ca.details = std::move(cb.details);
    return haar_inverse(ca);
}

// --------------------------------------------------------------- NST-lite

NstFeatures embedded_features(const Embedding& f, const DecompositionConfig& cfg) {
    NstFeatures out;
    out.content.apply = [&f, cfg](std::span<const double> x) { return f.embed(decompose(x, cfg).content); };
    out.content.vjp = [&f, cfg](std::span<const double> x, std::span<const double> dy) {
        return content_vjp(f.vjp(decompose(x, cfg).content, dy), cfg);
    };
    out.style.apply = [&f, cfg](std::span<const double> x) { return f.embed(decompose(x, cfg).style); };
    out.style.vjp = [&f, cfg](std::span<const double> x, std::span<const double> dy) {
        return style_vjp(f.vjp(decompose(x, cfg).style, dy), cfg);
    };
    return out;
}

NstFeatures linear_features(const DecompositionConfig& cfg) {
    NstFeatures out;
    out.content.apply = [cfg](std::span<const double> x) { return decompose(x, cfg).content; };
    out.content.vjp = [cfg](std::span<const double>, std::span<const double> dy) { return content_vjp(dy, cfg); };
    out.style.apply = [cfg](std::span<const double> x) { return decompose(x, cfg).style; };
    out.style.vjp = [cfg](std::span<const double>, std::span<const double> dy) { return style_vjp(dy, cfg); };
    return out;
}

void NstConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0)) {
        throw InvalidArgument("nst: weights must be >= 0 and not both zero");
    }
    if (!(step > 0.0)) {
        throw InvalidArgument("nst: step must be positive");
    }
}

namespace {

double sq_dist(const Series& u, const Series& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += (u[i] - v[i]) * (u[i] - v[i]);
    }
    return s;
}

struct NstObjective {
    std::span<const double> a, b;
    const NstConfig& cfg;
    const NstFeatures& features;
    Series target_c, target_s;

    NstObjective(std::span<const double> a_, std::span<const double> b_, const NstConfig& c, const NstFeatures& f)
        : a(a_), b(b_), cfg(c), features(f) {
        if (cfg.alpha > 0.0) {
            target_c = features.content.apply(a);
        }
        if (cfg.beta > 0.0) {
            target_s = features.style.apply(b);
        }
    }

    double loss(std::span<const double> x) const {
        double l = 0.0;
        if (cfg.alpha > 0.0) {
            l += cfg.alpha * sq_dist(features.content.apply(x), target_c);
        }
        if (cfg.beta > 0.0) {
            l += cfg.beta * sq_dist(features.style.apply(x), target_s);
        }
        return l;
    }

    Series gradient(std::span<const double> x) const {
        Series g(x.size(), 0.0);
        auto add = [&](const FeatureMap& fm, const Series& target, double w) {
            Series d = fm.apply(x);
            for (std::size_t i = 0; i < d.size(); ++i) {
                d[i] = 2.0 * w * (d[i] - target[i]);
            }
            const Series gx = fm.vjp(x, d);
            for (std::size_t i = 0; i < g.size(); ++i) {
                g[i] += gx[i];
            }
        };
        if (cfg.alpha > 0.0) {
            add(features.content, target_c, cfg.alpha);
        }
        if (cfg.beta > 0.0) {
            add(features.style, target_s, cfg.beta);
        }
        return g;
    }
};

constexpr double divergence_limit = 1e6;
constexpr double armijo_c = 1e-4;
constexpr int max_backtracks = 30;

void check_loss(double l, std::size_t iteration) {
    if (!std::isfinite(l) || l > divergence_limit) {
        throw NumericError("nst: loss diverged at iteration " + std::to_string(iteration));
    }
}

} // namespace

double nst_loss(std::span<const double> x, std::span<const double> a, std::span<const double> b,
                const NstConfig& cfg, const NstFeatures& features) {
    cfg.validate();
    expect_same_length(x, a, "nst");
    expect_same_length(a, b, "nst");
    return NstObjective(a, b, cfg, features).loss(x);
}

NstResult nst_optimize(std::span<const double> a, std::span<const double> b, const NstConfig& cfg,
                       const NstFeatures& features) {
    cfg.validate();
    expect_same_length(a, b, "nst");
    const NstObjective obj(a, b, cfg, features);
    NstResult r;
    r.series.assign(a.begin(), a.end());
    double loss = obj.loss(r.series);
    check_loss(loss, 0);
    r.losses.push_back(loss);
    Series trial(r.series.size());
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const Series g = obj.gradient(r.series);
        double gg = 0.0;
        for (double v : g) {
            gg += v * v;
        }
        double step = cfg.step;
        for (int k = 0; k <= max_backtracks; ++k) {
            for (std::size_t i = 0; i < trial.size(); ++i) {
                trial[i] = r.series[i] - step * g[i];
            }
            const double next = obj.loss(trial);
            if (!cfg.line_search) {
                r.series = trial;
                loss = next;
                break;
            }
            if (std::isfinite(next) && next <= loss - armijo_c * step * gg) {
                r.series = trial;
                loss = next;
                break;
            }
            step *= 0.5;
        }
        check_loss(loss, it);
        r.losses.push_back(loss);
    }
    return r;
}

double power_iteration(const std::function<Series(const Series&)>& op, std::size_t n, std::size_t iterations,
                       std::uint64_t seed) {
    if (n == 0) {
        throw ShapeError("power_iteration: empty space");
    }
    Rng rng(seed);
    Series v(n);
    for (auto& e : v) {
        e = rng.normal();
    }
    double lambda = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
        double norm = 0.0;
        for (double e : v) {
            norm += e * e;
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) {
            return 0.0;
        }
        for (auto& e : v) {
            e /= norm;
        }
        Series w = op(v);
        double num = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            num += v[i] * w[i];
        }
        lambda = num;
        v = std::move(w);
    }
    return lambda;
}

} // namespace dtsst
