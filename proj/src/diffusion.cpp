#include "dtsst/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dtsst {

NoiseSchedule::NoiseSchedule(int steps, double beta_start, double beta_end) : steps_(steps) {
    if (steps < 1) {
        throw InvalidArgument("noise schedule: need at least one step");
    }
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw InvalidArgument("noise schedule: need 0 < beta_start <= beta_end < 1");
    }
    const auto n = static_cast<std::size_t>(steps);
    beta_.assign(n + 1, 0.0);
    alpha_bar_.assign(n + 1, 1.0);
    sigma_.assign(n + 1, 0.0);
    for (std::size_t t = 1; t <= n; ++t) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(n - 1);
        beta_[t] = beta_start + (beta_end - beta_start) * frac;
        alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
        sigma_[t] = std::sqrt(beta_[t] * (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]));
    }
}

std::size_t NoiseSchedule::check(int t) const {
    if (t < 1 || t > steps_) {
        throw InvalidArgument("diffusion step " + std::to_string(t) + " outside [1, " + std::to_string(steps_) + "]");
    }
    return static_cast<std::size_t>(t);
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t == 0) {
        return 1.0;
    }
    return alpha_bar_[check(t)];
}

template <typename T>
Mat<T> forward_noise(const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& x0, int t,
                     const Eigen::Ref<const Mat<T>>& eps) {
    expect_dim(static_cast<std::size_t>(eps.cols()), static_cast<std::size_t>(x0.cols()), "noise length");
    if (t < 1 || t > schedule.steps()) {
        throw InvalidArgument("forward_noise: step " + std::to_string(t) + " outside [1, " +
                              std::to_string(schedule.steps()) + "]");
    }
    const double ab = schedule.alpha_bar(t);
    return static_cast<T>(std::sqrt(ab)) * x0 + static_cast<T>(std::sqrt(1.0 - ab)) * eps;
}

template <typename T>
AdamW<T>::AdamW(const ParamStore<T>& params, const AdamWConfig& cfg) : cfg_(cfg) {
    if (!(cfg.lr > 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) ||
        !(cfg.eps > 0.0) || !(cfg.weight_decay >= 0.0)) {
        throw InvalidArgument("AdamW: invalid hyperparameters");
    }
    for (const auto& e : params.entries()) {
        m_.emplace_back(e.value.shape());
        v_.emplace_back(e.value.shape());
    }
}

template <typename T>
void AdamW<T>::step(ParamStore<T>& params) {
    if (params.size() != m_.size()) {
        throw ShapeError("AdamW: parameter store layout changed");
    }
    ++steps_;
    const double n = static_cast<double>(steps_);
    const T b1 = static_cast<T>(cfg_.beta1);
    const T b2 = static_cast<T>(cfg_.beta2);
    const T decay = static_cast<T>(1.0 - cfg_.lr * cfg_.weight_decay);
    const T step_size = static_cast<T>(cfg_.lr / (1.0 - std::pow(cfg_.beta1, n)));
    const T bc2_sqrt = static_cast<T>(std::sqrt(1.0 - std::pow(cfg_.beta2, n)));
    const T eps = static_cast<T>(cfg_.eps);
    auto& entries = params.entries();
    for (std::size_t p = 0; p < entries.size(); ++p) {
        T* w = entries[p].value.data();
        const T* g = entries[p].grad.data();
        T* m = m_[p].data();
        T* v = v_[p].data();
        for (std::size_t i = 0; i < entries[p].value.size(); ++i) {
            w[i] *= decay;
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            const T denom = std::sqrt(v[i]) / bc2_sqrt + eps;
            w[i] -= step_size * m[i] / denom;
        }
    }
}

template <typename T>
double train_step(Model<T>& model, const NoiseSchedule& schedule, const std::vector<Mat<T>>& batch,
                  AdamW<T>& optimizer, Rng& rng) {
    if (batch.empty()) {
        throw InvalidArgument("train_step: empty batch");
    }
    const auto& cfg = model.config().denoiser;
    model.params().zero_grad();
    const T scale = static_cast<T>(1.0 / static_cast<double>(batch.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Mat<T>& x0 = batch[i];
        const int t = static_cast<int>(rng.uniform_int(1, schedule.steps()));
        Mat<T> eps(1, x0.cols());
        rng.fill_normal(eps.data(), static_cast<std::size_t>(eps.size()));
        const bool drop_content = rng.bernoulli(cfg.content_drop);
        const bool drop_style = rng.bernoulli(cfg.style_drop);
        const Mat<T> xt = forward_noise<T>(schedule, x0, t, eps);
        total += model.accumulate_example(x0, xt, t, eps, drop_content, drop_style, scale);
    }
    const double loss = total / static_cast<double>(batch.size());
    if (!std::isfinite(loss)) {
        throw NumericError("train_step: non-finite loss " + std::to_string(loss) + " at optimizer step " +
                           std::to_string(optimizer.step_count() + 1));
    }
    for (const auto& e : model.params().entries()) {
        for (std::size_t i = 0; i < e.grad.size(); ++i) {
            if (!std::isfinite(e.grad[i])) {
                throw NumericError("train_step: non-finite gradient in '" + e.name + "'");
            }
        }
    }
    optimizer.step(model.params());
    model.project_style_constraints();
    return loss;
}

void GuidanceConfig::validate() const {
    if (!std::isfinite(content_scale) || !std::isfinite(style_scale)) {
        throw InvalidArgument("guidance scales must be finite");
    }
    if (!std::isfinite(temperature) || temperature < 0.0) {
        throw InvalidArgument("temperature must be finite and >= 0");
    }
    if (clip && !(clip_value > 0.0)) {
        throw InvalidArgument("clip value must be positive");
    }
}

template <typename T>
Mat<T> combine_guidance(const Eigen::Ref<const Mat<T>>& eps_u, const Eigen::Ref<const Mat<T>>& eps_c,
                        const Eigen::Ref<const Mat<T>>& eps_s, double content_scale, double style_scale) {
    const T sc = static_cast<T>(content_scale);
    const T ss = static_cast<T>(style_scale);
    return eps_u + sc * (eps_c - eps_u) + ss * (eps_s - eps_u);
}

template <typename T>
Mat<T> reverse_step(const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& x, int t,
                    const Eigen::Ref<const Mat<T>>& eps_hat, const GuidanceConfig& guidance, const Mat<T>* noise) {
    const double a = schedule.alpha(t);
    const double ab = schedule.alpha_bar(t);
    Mat<T> mean;
    if (!guidance.clip) {
        const T c_eps = static_cast<T>((1.0 - a) / std::sqrt(1.0 - ab));
        const T inv_sqrt_a = static_cast<T>(1.0 / std::sqrt(a));
        mean = (x - c_eps * eps_hat) * inv_sqrt_a;
    } else {
        const double ab_prev = schedule.alpha_bar(t - 1);
        const T lim = static_cast<T>(guidance.clip_value);
        const Mat<T> x0 = ((x - static_cast<T>(std::sqrt(1.0 - ab)) * eps_hat) * static_cast<T>(1.0 / std::sqrt(ab)))
                              .cwiseMax(-lim)
                              .cwiseMin(lim);
        const T c0 = static_cast<T>(std::sqrt(ab_prev) * schedule.beta(t) / (1.0 - ab));
        const T ct = static_cast<T>(std::sqrt(a) * (1.0 - ab_prev) / (1.0 - ab));
        mean = c0 * x0 + ct * x;
    }
    if (noise != nullptr && t > 1) {
        mean += static_cast<T>(guidance.temperature * schedule.sigma(t)) * *noise;
    }
    return mean;
}

namespace {

template <typename T>
Mat<T> draw_normal(Rng& rng, Eigen::Index n) {
    Mat<T> z(1, n);
    rng.fill_normal(z.data(), static_cast<std::size_t>(n));
    return z;
}

} // namespace

template <typename T>
Mat<T> sample_from(const Model<T>& model, const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& content,
                   const Eigen::Ref<const Mat<T>>& style, const GuidanceConfig& guidance, Mat<T> x, Rng& rng) {
    guidance.validate();
    const auto n = x.cols();
    expect_dim(static_cast<std::size_t>(content.cols()), static_cast<std::size_t>(n), "content length");
    expect_dim(static_cast<std::size_t>(style.cols()), static_cast<std::size_t>(n), "style length");
    const Mat<T> encoded_content = model.encode_content(content);
    const Mat<T> encoded_style = model.encode_style(style);
    const auto cond_u = model.prepare_encoded(std::nullopt, std::nullopt);
    const auto cond_c = model.prepare_encoded(encoded_content, std::nullopt);
    const auto cond_s = model.prepare_encoded(std::nullopt, encoded_style);
    for (int t = schedule.steps(); t >= 1; --t) {
        const Mat<T> eps_u = model.predict_noise(x, t, cond_u);
        const Mat<T> eps_c = model.predict_noise(x, t, cond_c);
        const Mat<T> eps_s = model.predict_noise(x, t, cond_s);
        const Mat<T> eps_hat =
            combine_guidance<T>(eps_u, eps_c, eps_s, guidance.content_scale, guidance.style_scale);
        if (t > 1) {
            const Mat<T> z = draw_normal<T>(rng, n);
            x = reverse_step<T>(schedule, x, t, eps_hat, guidance, &z);
        } else {
            x = reverse_step<T>(schedule, x, t, eps_hat, guidance, nullptr);
        }
        if (!x.allFinite()) {
            throw NumericError("sampler: non-finite state at step " + std::to_string(t));
        }
    }
    return x;
}

template <typename T>
Mat<T> sample_normalized(const Model<T>& model, const NoiseSchedule& schedule,
                         const Eigen::Ref<const Mat<T>>& content, const Eigen::Ref<const Mat<T>>& style,
                         const GuidanceConfig& guidance, Rng& rng) {
    expect_dim(static_cast<std::size_t>(style.cols()), static_cast<std::size_t>(content.cols()), "style length");
    Mat<T> x = draw_normal<T>(rng, content.cols());
    return sample_from<T>(model, schedule, content, style, guidance, std::move(x), rng);
}

template <typename T>
Mat<T> sample_unconditional(const Model<T>& model, const NoiseSchedule& schedule, std::size_t length,
                            const GuidanceConfig& guidance, Rng& rng) {
    guidance.validate();
    if (length < 1) {
        throw InvalidArgument("sample_unconditional: length must be >= 1");
    }
    const auto n = static_cast<Eigen::Index>(length);
    Mat<T> x = draw_normal<T>(rng, n);
    const auto cond_u = model.prepare_encoded(std::nullopt, std::nullopt);
    for (int t = schedule.steps(); t >= 1; --t) {
        const Mat<T> eps_u = model.predict_noise(x, t, cond_u);
        if (t > 1) {
            const Mat<T> z = draw_normal<T>(rng, n);
            x = reverse_step<T>(schedule, x, t, eps_u, guidance, &z);
        } else {
            x = reverse_step<T>(schedule, x, t, eps_u, guidance, nullptr);
        }
        if (!x.allFinite()) {
            throw NumericError("sampler: non-finite state at step " + std::to_string(t));
        }
    }
    return x;
}

template <typename T>
Series sample(const Model<T>& model, const NoiseSchedule& schedule, const Series& content, const Series& style,
              const GuidanceConfig& guidance, std::uint64_t seed) {
    expect_same_length(content, style, "sample");
    const Normalized a = z_normalize(content);
    const Normalized b = z_normalize(style);
    Rng rng(seed);
    const Mat<T> x = sample_normalized<T>(model, schedule, to_row<T>(a.values), to_row<T>(b.values), guidance, rng);
    return denormalize(to_series<T>(x), a.mean, a.std);
}

namespace {

[[noreturn]] void rethrow_with_index(std::size_t i) {
    const std::string prefix = "pair " + std::to_string(i) + ": ";
    try {
        throw;
    } catch (const ShapeError& e) {
        throw ShapeError(prefix + e.what());
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(prefix + e.what());
    } catch (const DataError& e) {
        throw DataError(prefix + e.what());
    } catch (const NumericError& e) {
        throw NumericError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

} // namespace

template <typename T>
std::vector<Series> sample_batch(const Model<T>& model, const NoiseSchedule& schedule,
                                 const std::vector<SeriesPair>& pairs, const GuidanceConfig& guidance,
                                 const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() != pairs.size()) {
        throw InvalidArgument("sample_batch: " + std::to_string(pairs.size()) + " pairs but " +
                              std::to_string(seeds.size()) + " seeds");
    }
    std::vector<Series> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        try {
            out.push_back(sample<T>(model, schedule, pairs[i].content, pairs[i].style, guidance, seeds[i]));
        } catch (const Error&) {
            rethrow_with_index(i);
        }
    }
    return out;
}

#define DTSST_DIFFUSION_INSTANTIATE(T)                                                                            \
    template Mat<T> forward_noise<T>(const NoiseSchedule&, const Eigen::Ref<const Mat<T>>&, int,                  \
                                     const Eigen::Ref<const Mat<T>>&);                                            \
    template class AdamW<T>;                                                                                      \
    template double train_step<T>(Model<T>&, const NoiseSchedule&, const std::vector<Mat<T>>&, AdamW<T>&, Rng&); \
    template Mat<T> combine_guidance<T>(const Eigen::Ref<const Mat<T>>&, const Eigen::Ref<const Mat<T>>&,        \
                                        const Eigen::Ref<const Mat<T>>&, double, double);                         \
    template Mat<T> reverse_step<T>(const NoiseSchedule&, const Eigen::Ref<const Mat<T>>&, int,                   \
                                    const Eigen::Ref<const Mat<T>>&, const GuidanceConfig&, const Mat<T>*);       \
    template Mat<T> sample_from<T>(const Model<T>&, const NoiseSchedule&, const Eigen::Ref<const Mat<T>>&,        \
                                   const Eigen::Ref<const Mat<T>>&, const GuidanceConfig&, Mat<T>, Rng&);         \
    template Mat<T> sample_normalized<T>(const Model<T>&, const NoiseSchedule&, const Eigen::Ref<const Mat<T>>&,  \
                                         const Eigen::Ref<const Mat<T>>&, const GuidanceConfig&, Rng&);           \
    template Mat<T> sample_unconditional<T>(const Model<T>&, const NoiseSchedule&, std::size_t,                   \
                                            const GuidanceConfig&, Rng&);                                         \
    template Series sample<T>(const Model<T>&, const NoiseSchedule&, const Series&, const Series&,                \
                              const GuidanceConfig&, std::uint64_t);                                              \
    template std::vector<Series> sample_batch<T>(const Model<T>&, const NoiseSchedule&,                           \
                                                 const std::vector<SeriesPair>&, const GuidanceConfig&,           \
                                                 const std::vector<std::uint64_t>&);

DTSST_DIFFUSION_INSTANTIATE(float)
DTSST_DIFFUSION_INSTANTIATE(double)

} // namespace dtsst
