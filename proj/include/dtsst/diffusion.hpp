#pragma once

// DDPM noise schedule, forward corruption, the classifier-free-guidance
// training step and the guided reverse sampler.

#include <cstdint>
#include <vector>

#include "dtsst/model.hpp"
#include "dtsst/series.hpp"

namespace dtsst {

/// Linear beta schedule. Steps are 1-based: t = 1..T. alpha_bar(0) is 1.
class NoiseSchedule {
public:
    explicit NoiseSchedule(int steps = 500, double beta_start = 1e-4, double beta_end = 2e-2);

    int steps() const { return steps_; }
    double beta(int t) const { return beta_[check(t)]; }
    double alpha(int t) const { return 1.0 - beta_[check(t)]; }
    double alpha_bar(int t) const;
    /// Posterior std: sigma_t^2 = beta_t (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t).
    double sigma(int t) const { return sigma_[check(t)]; }

private:
    std::size_t check(int t) const;

    int steps_;
    std::vector<double> beta_;       // index t, entry 0 unused
    std::vector<double> alpha_bar_;  // index t, entry 0 = 1
    std::vector<double> sigma_;
};

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
template <typename T>
Mat<T> forward_noise(const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& x0, int t,
                     const Eigen::Ref<const Mat<T>>& eps);

/// Decoupled weight decay Adam (the PyTorch AdamW update, decay applied to every parameter).
struct AdamWConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    bool operator==(const AdamWConfig&) const = default;
};

template <typename T>
class AdamW {
public:
    AdamW(const ParamStore<T>& params, const AdamWConfig& cfg);

    void step(ParamStore<T>& params);

    const AdamWConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return steps_; }
    void set_step_count(std::uint64_t n) { steps_ = n; }
    std::vector<Array<T>>& first_moments() { return m_; }
    std::vector<Array<T>>& second_moments() { return v_; }
    const std::vector<Array<T>>& first_moments() const { return m_; }
    const std::vector<Array<T>>& second_moments() const { return v_; }

private:
    AdamWConfig cfg_;
    std::uint64_t steps_ = 0;
    std::vector<Array<T>> m_;
    std::vector<Array<T>> v_;
};

/// One optimizer step on a batch of normalized clean windows. Per example,
/// in order: t ~ U{1..T}, eps ~ N(0, I), content drop ~ Bernoulli(p_c),
/// style drop ~ Bernoulli(p_s). Returns the batch-mean noise MSE.
/// Throws NumericError if the loss is not finite (parameters untouched).
template <typename T>
double train_step(Model<T>& model, const NoiseSchedule& schedule, const std::vector<Mat<T>>& batch,
                  AdamW<T>& optimizer, Rng& rng);

struct GuidanceConfig {
    double content_scale = 1.0;
    double style_scale = 1.0;
    double temperature = 1.0;
    /// Clamp the implied x0 estimate to [-clip_value, clip_value] at every step.
    bool clip = false;
    double clip_value = 5.0;

    void validate() const;
};

/// eps_u + s_c (eps_c - eps_u) + s_s (eps_s - eps_u).
template <typename T>
Mat<T> combine_guidance(const Eigen::Ref<const Mat<T>>& eps_u, const Eigen::Ref<const Mat<T>>& eps_c,
                        const Eigen::Ref<const Mat<T>>& eps_s, double content_scale, double style_scale);

/// One reverse update x_t -> x_{t-1}. `noise` may be null (treated as zero).
template <typename T>
Mat<T> reverse_step(const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& x, int t,
                    const Eigen::Ref<const Mat<T>>& eps_hat, const GuidanceConfig& guidance, const Mat<T>* noise);

/// Guided reverse process on already-normalized conditions, starting from
/// x_T. At every t > 1 one Gaussian vector z is drawn from `rng` (also when
/// the temperature is 0, so the stream does not depend on it).
template <typename T>
Mat<T> sample_from(const Model<T>& model, const NoiseSchedule& schedule, const Eigen::Ref<const Mat<T>>& content,
                   const Eigen::Ref<const Mat<T>>& style, const GuidanceConfig& guidance, Mat<T> x_T, Rng& rng);

/// Same as sample_from with x_T drawn from `rng` first.
template <typename T>
Mat<T> sample_normalized(const Model<T>& model, const NoiseSchedule& schedule,
                         const Eigen::Ref<const Mat<T>>& content, const Eigen::Ref<const Mat<T>>& style,
                         const GuidanceConfig& guidance, Rng& rng);

/// Condition-free reverse process with the same random stream layout.
template <typename T>
Mat<T> sample_unconditional(const Model<T>& model, const NoiseSchedule& schedule, std::size_t length,
                            const GuidanceConfig& guidance, Rng& rng);

/// Full pipeline on raw series: a and b are z-normalized independently,
/// the result is denormalized with a's statistics. Rng(seed) drives x_T and z.
template <typename T>
Series sample(const Model<T>& model, const NoiseSchedule& schedule, const Series& content, const Series& style,
              const GuidanceConfig& guidance, std::uint64_t seed);

struct SeriesPair {
    Series content;
    Series style;
};

/// Order-preserving; item i uses seeds[i] only. Errors are rethrown with the pair index.
template <typename T>
std::vector<Series> sample_batch(const Model<T>& model, const NoiseSchedule& schedule,
                                 const std::vector<SeriesPair>& pairs, const GuidanceConfig& guidance,
                                 const std::vector<std::uint64_t>& seeds);

extern template class AdamW<float>;
extern template class AdamW<double>;

} // namespace dtsst
