#include "dtsst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "dtsst/numerics/ops.hpp"
#include "dtsst/synthetic.hpp"

namespace dtsst {

namespace {

void check_kernel(std::size_t n, std::size_t k) {
    if (k < 1 || k % 2 == 0) {
        throw InvalidArgument("moving average: kernel must be odd, got " + std::to_string(k));
    }
    if (n <= k / 2) {
        throw ShapeError("moving average: series of length " + std::to_string(n) + " too short for kernel " +
                         std::to_string(k));
    }
}

} // namespace

Series moving_average(std::span<const double> x, std::size_t k) {
    const std::size_t n = x.size();
    check_kernel(n, k);
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    const auto len = static_cast<std::ptrdiff_t>(n);
    Series y(n);
    for (std::ptrdiff_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            acc += x[static_cast<std::size_t>(reflect_index(i + j, len))];
        }
        y[static_cast<std::size_t>(i)] = acc / static_cast<double>(k);
    }
    return y;
}

Series moving_average_vjp(std::span<const double> dy, std::size_t k) {
    const std::size_t n = dy.size();
    check_kernel(n, k);
    const auto half = static_cast<std::ptrdiff_t>(k / 2);
    const auto len = static_cast<std::ptrdiff_t>(n);
    Series dx(n, 0.0);
    for (std::ptrdiff_t i = 0; i < len; ++i) {
        const double g = dy[static_cast<std::size_t>(i)] / static_cast<double>(k);
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            dx[static_cast<std::size_t>(reflect_index(i + j, len))] += g;
        }
    }
    return dx;
}

void DecompositionConfig::validate() const {
    if (kernels.empty()) {
        throw InvalidArgument("decomposition: no kernel sizes");
    }
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        if (kernels[i] % 2 == 0 || (i > 0 && kernels[i] <= kernels[i - 1])) {
            throw InvalidArgument("decomposition: kernel sizes must be odd and strictly increasing");
        }
    }
}

Decomposition decompose(std::span<const double> x, const DecompositionConfig& cfg) {
    cfg.validate();
    if (x.size() <= cfg.kernels.back()) {
        throw ShapeError("decompose: series length " + std::to_string(x.size()) + " must exceed the largest kernel " +
                         std::to_string(cfg.kernels.back()));
    }
    Decomposition d;
    d.style.assign(x.size(), 0.0);
    Series prev(x.begin(), x.end());
    for (std::size_t k : cfg.kernels) {
        Series smooth = moving_average(prev, k);
        for (std::size_t i = 0; i < x.size(); ++i) {
            d.style[i] += prev[i] - smooth[i];
        }
        prev = std::move(smooth);
    }
    d.content = std::move(prev);
    return d;
}

Series content_vjp(std::span<const double> dy, const DecompositionConfig& cfg) {
    cfg.validate();
    Series g(dy.begin(), dy.end());
    for (auto it = cfg.kernels.rbegin(); it != cfg.kernels.rend(); ++it) {
        g = moving_average_vjp(g, *it);
    }
    return g;
}

Series style_vjp(std::span<const double> dy, const DecompositionConfig& cfg) {
    Series g = content_vjp(dy, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = dy[i] - g[i];
    }
    return g;
}

double mse(std::span<const double> a, std::span<const double> b) {
    expect_same_length(a, b, "mse");
    if (a.empty()) {
        throw ShapeError("mse: empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return s / static_cast<double>(a.size());
}

double cp(std::span<const double> generated, std::span<const double> content, const DecompositionConfig& cfg) {
    expect_same_length(generated, content, "cp");
    return mse(decompose(generated, cfg).content, decompose(content, cfg).content);
}

double si(std::span<const double> generated, std::span<const double> style, const DecompositionConfig& cfg) {
    expect_same_length(generated, style, "si");
    return mse(decompose(generated, cfg).style, decompose(style, cfg).style);
}

// ------------------------------------------------------------ embedding

namespace {

constexpr std::size_t freqs_per_band = 4;
constexpr std::size_t n_freqs = StatEmbedding::bands * freqs_per_band;
constexpr double acf_eps = 1e-12;

double frequency(std::size_t m) {
    return (static_cast<double>(m) + 0.5) / (2.0 * static_cast<double>(n_freqs));
}

struct Spectrum {
    std::vector<double> re, im, power;
};

Spectrum spectrum(const Series& d) {
    const auto n = static_cast<double>(d.size());
    Spectrum s;
    s.re.assign(n_freqs, 0.0);
    s.im.assign(n_freqs, 0.0);
    s.power.assign(n_freqs, 0.0);
    for (std::size_t m = 0; m < n_freqs; ++m) {
        const double w = 2.0 * std::numbers::pi * frequency(m);
        double re = 0.0;
        double im = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            re += d[i] * std::cos(w * static_cast<double>(i));
            im += d[i] * std::sin(w * static_cast<double>(i));
        }
        s.re[m] = re;
        s.im[m] = im;
        s.power[m] = (re * re + im * im) / n;
    }
    return s;
}

Series demeaned(std::span<const double> x, double& mean) {
    mean = mean_of(x);
    Series d(x.begin(), x.end());
    for (auto& v : d) {
        v -= mean;
    }
    return d;
}

} // namespace

StatEmbedding::StatEmbedding() : center_(dims, 0.0), scale_(dims, 1.0) {}

StatEmbedding::StatEmbedding(std::vector<double> center, std::vector<double> scale)
    : center_(std::move(center)), scale_(std::move(scale)) {
    if (center_.size() != dims || scale_.size() != dims) {
        throw ShapeError("stat embedding: constants must have " + std::to_string(dims) + " entries");
    }
    for (double s : scale_) {
        if (!(s > 0.0)) {
            throw InvalidArgument("stat embedding: scales must be positive");
        }
    }
}

Series StatEmbedding::raw(std::span<const double> x) const {
    if (x.size() < 2) {
        throw ShapeError("stat embedding: need at least 2 samples");
    }
    double mean = 0.0;
    const Series d = demeaned(x, mean);
    const std::size_t n = d.size();
    double v = 0.0;
    for (double e : d) {
        v += e * e;
    }
    Series f(dims, 0.0);
    f[0] = mean;
    f[1] = std::sqrt(v / static_cast<double>(n));
    for (std::size_t k = 1; k <= lags; ++k) {
        double a = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            a += d[i] * d[i + k];
        }
        f[1 + k] = a / (v + acf_eps);
    }
    const Spectrum s = spectrum(d);
    for (std::size_t b = 0; b < bands; ++b) {
        double p = 0.0;
        for (std::size_t m = b * freqs_per_band; m < (b + 1) * freqs_per_band; ++m) {
            p += s.power[m];
        }
        f[2 + lags + b] = std::log(p / static_cast<double>(freqs_per_band) + power_floor);
    }
    return f;
}

Series StatEmbedding::embed(std::span<const double> x) const {
    Series f = raw(x);
    for (std::size_t j = 0; j < dims; ++j) {
        f[j] = (f[j] - center_[j]) / scale_[j];
    }
    return f;
}

Series StatEmbedding::vjp(std::span<const double> x, std::span<const double> dy) const {
    if (dy.size() != dims) {
        throw ShapeError("stat embedding vjp: gradient must have " + std::to_string(dims) + " entries");
    }
    if (x.size() < 2) {
        throw ShapeError("stat embedding: need at least 2 samples");
    }
    Series g(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        g[j] = dy[j] / scale_[j];
    }
    double mean = 0.0;
    const Series d = demeaned(x, mean);
    const std::size_t n = d.size();
    const auto nd = static_cast<double>(n);
    double v = 0.0;
    for (double e : d) {
        v += e * e;
    }
    Series dd(n, 0.0);
    const double sd = std::sqrt(v / nd);
    if (sd > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            dd[i] += g[1] * d[i] / (nd * sd);
        }
    }
    const double denom = v + acf_eps;
    for (std::size_t k = 1; k <= lags; ++k) {
        const double gk = g[1 + k];
        if (gk == 0.0 || k >= n) {
            continue;
        }
        double a = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) {
            a += d[i] * d[i + k];
        }
        for (std::size_t i = 0; i < n; ++i) {
            double da = 0.0;
            if (i + k < n) {
                da += d[i + k];
            }
            if (i >= k) {
                da += d[i - k];
            }
            dd[i] += gk * (da / denom - a * 2.0 * d[i] / (denom * denom));
        }
    }
    const Spectrum s = spectrum(d);
    for (std::size_t b = 0; b < bands; ++b) {
        const double gb = g[2 + lags + b];
        if (gb == 0.0) {
            continue;
        }
        double p = 0.0;
        for (std::size_t m = b * freqs_per_band; m < (b + 1) * freqs_per_band; ++m) {
            p += s.power[m];
        }
        const double dp = gb / (p + power_floor * static_cast<double>(freqs_per_band));
        for (std::size_t m = b * freqs_per_band; m < (b + 1) * freqs_per_band; ++m) {
            const double w = 2.0 * std::numbers::pi * frequency(m);
            for (std::size_t i = 0; i < n; ++i) {
                const double th = w * static_cast<double>(i);
                dd[i] += dp * 2.0 * (s.re[m] * std::cos(th) + s.im[m] * std::sin(th)) / nd;
            }
        }
    }
    double dd_mean = 0.0;
    for (double e : dd) {
        dd_mean += e;
    }
    dd_mean /= nd;
    Series dx(n);
    for (std::size_t i = 0; i < n; ++i) {
        dx[i] = dd[i] - dd_mean + g[0] / nd;
    }
    return dx;
}

StatEmbedding StatEmbedding::fit(const std::vector<Series>& corpus) {
    if (corpus.empty()) {
        throw InvalidArgument("stat embedding fit: empty corpus");
    }
    const StatEmbedding identity;
    std::vector<double> center(dims, 0.0);
    std::vector<double> sq(dims, 0.0);
    std::vector<Series> rows;
    rows.reserve(corpus.size());
    for (const auto& x : corpus) {
        rows.push_back(identity.raw(x));
        for (std::size_t j = 0; j < dims; ++j) {
            center[j] += rows.back()[j];
        }
    }
    const auto n = static_cast<double>(rows.size());
    for (auto& c : center) {
        c /= n;
    }
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < dims; ++j) {
            sq[j] += (r[j] - center[j]) * (r[j] - center[j]);
        }
    }
    std::vector<double> scale(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        const double s = std::sqrt(sq[j] / n);
        scale[j] = s > 1e-12 ? s : 1.0;
    }
    return StatEmbedding(std::move(center), std::move(scale));
}

const StatEmbedding& StatEmbedding::standard() {
    static const StatEmbedding instance = [] {
        SyntheticSpec spec;
        spec.family = Family::composite;
        spec.count = 256;
        spec.length = 128;
        spec.seed = 20240601;
        const Dataset data = generate_synthetic(spec);
        std::vector<Series> corpus;
        for (const auto& rec : data.records) {
            const Normalized z = z_normalize(rec.values);
            Decomposition d = decompose(z.values);
            corpus.push_back(std::move(d.content));
            corpus.push_back(std::move(d.style));
        }
        return fit(corpus);
    }();
    return instance;
}

double rm(std::span<const double> generated, std::span<const double> content, std::span<const double> style,
          const Embedding& f, const DecompositionConfig& cfg) {
    expect_same_length(generated, content, "rm");
    expect_same_length(generated, style, "rm");
    const Decomposition g = decompose(generated, cfg);
    const Series fc_g = f.embed(g.content);
    const Series fc_a = f.embed(decompose(content, cfg).content);
    const Series fs_g = f.embed(g.style);
    const Series fs_b = f.embed(decompose(style, cfg).style);
    return 0.5 * (mse(fc_g, fc_a) + mse(fs_g, fs_b));
}

// ------------------------------------------------------------------ PCA

PcaResult pca_spread_points(const std::vector<std::vector<double>>& points) {
    if (points.size() < 3) {
        throw InvalidArgument("pca_spread: need at least 3 samples, got " + std::to_string(points.size()));
    }
    const auto n = static_cast<Eigen::Index>(points.size());
    const auto d = static_cast<Eigen::Index>(points.front().size());
    if (d < 1) {
        throw ShapeError("pca_spread: empty points");
    }
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(points[static_cast<std::size_t>(i)].size()) != d) {
            throw ShapeError("pca_spread: points have different dimensions");
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            x(i, j) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
    const double total = std::max(cov.trace(), 0.0);
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(d, 2);
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(2, d); ++c) {
        const Eigen::Index idx = d - 1 - c;
        if (!(values(idx) > 1e-12 * std::max(1.0, total))) {
            continue;  // degenerate direction: flat projection
        }
        Eigen::VectorXd v = solver.eigenvectors().col(idx);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) {
            v = -v;
        }
        basis.col(c) = v;
    }
    const Eigen::MatrixXd proj = x * basis;
    PcaResult r;
    for (Eigen::Index i = 0; i < n; ++i) {
        r.projections.push_back({proj(i, 0), proj(i, 1)});
        r.dispersion += std::hypot(proj(i, 0), proj(i, 1));
    }
    r.dispersion /= static_cast<double>(n);
    return r;
}

PcaResult pca_spread(const std::vector<Series>& samples, const Embedding& f) {
    std::vector<std::vector<double>> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) {
        pts.push_back(f.embed(s));
    }
    return pca_spread_points(pts);
}

// ------------------------------------------------------------ reporting

void check_normalized(std::span<const double> x, const std::string& what) {
    bool all_zero = true;
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw InvalidArgument(what + ": non-finite value");
        }
        all_zero = all_zero && v == 0.0;
    }
    if (all_zero) {
        return;
    }
    const double m = mean_of(x);
    const double s = std_of(x);
    if (std::abs(m) >= 1e-6 || std::abs(s - 1.0) >= 1e-3) {
        throw InvalidArgument(what + " is not z-normalized (mean " + std::to_string(m) + ", std " +
                              std::to_string(s) + ")");
    }
}

Aggregate aggregate(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) {
        return a;
    }
    const auto n = static_cast<double>(values.size());
    for (double v : values) {
        a.mean += v;
    }
    a.mean /= n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - a.mean) * (v - a.mean);
        }
        a.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return a;
}

EvalReport evaluate(const std::vector<Series>& generated, const std::vector<Series>& contents,
                    const std::vector<Series>& styles, const Embedding& f, const DecompositionConfig& cfg) {
    if (generated.size() != contents.size() || generated.size() != styles.size()) {
        throw DataError("evaluate: misaligned inputs (" + std::to_string(generated.size()) + " generated, " +
                        std::to_string(contents.size()) + " content, " + std::to_string(styles.size()) + " style)");
    }
    EvalReport r;
    r.embedding = f.name();
    std::vector<double> cps, sis, rms, overall;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const std::string tag = "pair " + std::to_string(i);
        check_normalized(generated[i], tag + " generated");
        check_normalized(contents[i], tag + " content");
        check_normalized(styles[i], tag + " style");
        PairScore s;
        s.cp = cp(generated[i], contents[i], cfg);
        s.si = si(generated[i], styles[i], cfg);
        s.rm = rm(generated[i], contents[i], styles[i], f, cfg);
        s.overall = (s.cp + s.si + s.rm) / 3.0;
        r.pairs.push_back(s);
        cps.push_back(s.cp);
        sis.push_back(s.si);
        rms.push_back(s.rm);
        overall.push_back(s.overall);
    }
    r.cp = aggregate(cps);
    r.si = aggregate(sis);
    r.rm = aggregate(rms);
    r.overall = aggregate(overall);
    return r;
}

std::string report_jsonl(const EvalReport& report) {
    std::ostringstream os;
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
        const auto& p = report.pairs[i];
        nlohmann::ordered_json j;
        j["pair"] = i;
        j["cp"] = p.cp;
        j["si"] = p.si;
        j["rm"] = p.rm;
        j["overall"] = p.overall;
        j["embedding"] = report.embedding;
        os << j.dump() << '\n';
    }
    nlohmann::ordered_json agg;
    auto put = [&](const char* name, const Aggregate& a) {
        agg[name] = {{"mean", a.mean}, {"se", a.se}};
    };
    put("cp", report.cp);
    put("si", report.si);
    put("rm", report.rm);
    put("overall", report.overall);
    nlohmann::ordered_json line;
    line["aggregate"] = agg;
    line["count"] = report.pairs.size();
    line["embedding"] = report.embedding;
    os << line.dump() << '\n';
    return os.str();
}

std::string report_table(const EvalReport& report) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "embedding: " << report.embedding << "\n";
    os << std::left << std::setw(8) << "pair" << std::right << std::setw(12) << "CP" << std::setw(12) << "SI"
       << std::setw(12) << "RM" << std::setw(12) << "overall" << '\n';
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
        const auto& p = report.pairs[i];
        os << std::left << std::setw(8) << i << std::right << std::setw(12) << p.cp << std::setw(12) << p.si
           << std::setw(12) << p.rm << std::setw(12) << p.overall << '\n';
    }
    auto cell = [](const Aggregate& a) {
        std::ostringstream c;
        c << std::fixed << std::setprecision(4) << a.mean << "±" << a.se;
        return c.str();
    };
    os << std::left << std::setw(8) << "mean" << std::right << std::setw(14) << cell(report.cp) << std::setw(14)
       << cell(report.si) << std::setw(14) << cell(report.rm) << std::setw(14) << cell(report.overall) << '\n';
    return os.str();
}

} // namespace dtsst
