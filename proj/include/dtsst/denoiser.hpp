#pragma once

// Noise-prediction transformer: patch embedding, sinusoidal time
// conditioning through a SiLU MLP, stacked blocks of
//   self-attention -> cross-attention(content) -> cross-attention(style) -> MLP
// (pre-LayerNorm, residual around each sublayer, ALiBi biases on every
// attention), final LayerNorm and a linear unpatch head.

#include <optional>
#include <string>
#include <vector>

#include "dtsst/numerics/ops.hpp"
#include "dtsst/numerics/param_store.hpp"
#include "dtsst/numerics/rng.hpp"

namespace dtsst {

struct DenoiserConfig {
    std::size_t hidden = 256;
    std::size_t heads = 4;
    std::size_t layers = 4;
    std::size_t patch = 8;
    std::size_t mlp_ratio = 4;
    double content_drop = 0.10;
    double style_drop = 0.15;

    void validate() const;
    std::size_t head_dim() const { return hidden / heads; }
    /// Geometric ALiBi slopes 2^(-8 i / heads), i = 1..heads.
    std::vector<double> alibi_slopes() const;
};

template <typename T>
struct Patches {
    Mat<T> values;  // n x p
    std::size_t pad_amount = 0;
    std::size_t length = 0;
};

/// Splits a 1 x L series into ceil(L/p) rows of p samples, zero right-padding.
template <typename T>
Patches<T> patchify(const Eigen::Ref<const Mat<T>>& x, std::size_t patch);

/// Concatenates n x p patch rows and crops to `length`.
template <typename T>
Mat<T> unpatchify(const Eigen::Ref<const Mat<T>>& patches, std::size_t length);

/// Raw sinusoidal embedding [sin(t w0), cos(t w0), ...], w_j = exp(-j ln(1e4) / (h/2 - 1)).
template <typename T>
RowVec<T> time_embedding(double t, std::size_t hidden);

/// bias(i, j) = -slope * |i - j|.
template <typename T>
Mat<T> alibi_bias(std::size_t n_q, std::size_t n_k, double slope);

template <typename T>
class Linear {
public:
    Linear() = default;
    Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out, bool bias = true);

    /// Gaussian weights with std gain / sqrt(in); zero bias.
    void init(ParamStore<T>& store, Rng& rng, double gain = 1.0) const;
    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x) const;
    /// Accumulates dW, db; returns dL/dx.
    Mat<T> backward(ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x, const Eigen::Ref<const Mat<T>>& dy,
                    bool want_input_grad = true) const;

    ParamId weight() const { return weight_; }
    std::optional<ParamId> bias() const { return bias_; }

private:
    ParamId weight_;
    std::optional<ParamId> bias_;
};

template <typename T>
class LayerNorm {
public:
    LayerNorm() = default;
    LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t hidden);
    void init(ParamStore<T>& store) const;
    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x, LayerNormCache<T>* cache) const;
    Mat<T> backward(ParamStore<T>& store, const LayerNormCache<T>& cache, const Eigen::Ref<const Mat<T>>& dy) const;

private:
    ParamId gain_;
    ParamId shift_;
};

/// Multi-head attention with per-head ALiBi slopes. Keys/values may be
/// projected once and reused (conditions are fixed across sampling steps).
template <typename T>
class Attention {
public:
    struct KeyValue {
        Mat<T> keys;
        Mat<T> values;
    };
    struct Cache {
        Mat<T> query_input;
        Mat<T> queries;
        std::vector<Mat<T>> probs;  // per head, n_q x n_k
        Mat<T> heads;               // concatenated head outputs, n_q x h
    };
    struct Grads {
        Mat<T> d_query_input;
        Mat<T> d_keys;
        Mat<T> d_values;
    };

    Attention() = default;
    Attention(ParamStore<T>& store, const std::string& name, std::size_t hidden, std::size_t heads,
              std::vector<double> slopes);

    void init(ParamStore<T>& store, Rng& rng) const;
    KeyValue project(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& kv_input) const;
    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& query_input, const KeyValue& kv,
                   Cache* cache) const;
    Grads backward(ParamStore<T>& store, const Cache& cache, const KeyValue& kv,
                   const Eigen::Ref<const Mat<T>>& dy) const;
    /// Back-propagates key/value gradients to the projection weights; returns dL/d(kv_input).
    Mat<T> project_backward(ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& kv_input,
                            const Eigen::Ref<const Mat<T>>& d_keys, const Eigen::Ref<const Mat<T>>& d_values) const;

    const Linear<T>& output() const { return out_; }

private:
    std::size_t hidden_ = 0;
    std::size_t heads_ = 1;
    std::vector<double> slopes_;
    Linear<T> wq_, wk_, wv_, out_;
};

/// Condition keys/values for one block; absent when the condition is dropped.
template <typename T>
struct BlockConditions {
    std::optional<typename Attention<T>::KeyValue> content;
    std::optional<typename Attention<T>::KeyValue> style;
};

template <typename T>
class ScDitBlock {
public:
    struct Cache {
        Mat<T> x0, x1, x2, x3;
        LayerNormCache<T> ln1, ln2, ln3, ln4;
        typename Attention<T>::Cache self_attn, content_attn, style_attn;
        Mat<T> n1;  // normalized input of self-attention (its key/value source)
        typename Attention<T>::KeyValue self_kv;
        Mat<T> mlp_in, mlp_pre, mlp_act;
        bool has_content = false;
        bool has_style = false;
    };
    struct Grads {
        Mat<T> d_input;
        std::optional<Mat<T>> d_content_keys, d_content_values, d_style_keys, d_style_values;
    };

    ScDitBlock() = default;
    ScDitBlock(ParamStore<T>& store, const std::string& name, const DenoiserConfig& cfg);

    void init(ParamStore<T>& store, Rng& rng) const;
    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& tokens,
                   const BlockConditions<T>& cond, Cache* cache) const;
    Grads backward(ParamStore<T>& store, const Cache& cache, const BlockConditions<T>& cond,
                   const Eigen::Ref<const Mat<T>>& dy) const;

    const Attention<T>& self_attention() const { return self_attn_; }
    const Attention<T>& content_attention() const { return content_attn_; }
    const Attention<T>& style_attention() const { return style_attn_; }
    const Linear<T>& mlp_out() const { return fc2_; }

private:
    std::size_t hidden_ = 0;
    LayerNorm<T> ln1_, ln2_, ln3_, ln4_;
    Attention<T> self_attn_, content_attn_, style_attn_;
    Linear<T> fc1_, fc2_;
};

/// Encoded conditions as patch-token matrices (E^c, E^s); nullopt = dropped.
template <typename T>
struct ConditionTokens {
    std::optional<Mat<T>> content;
    std::optional<Mat<T>> style;
};

template <typename T>
class Denoiser {
public:
    struct Cache {
        std::size_t length = 0;
        Patches<T> noisy;
        Mat<T> time_raw, time_pre, time_act;
        std::vector<typename ScDitBlock<T>::Cache> blocks;
        std::vector<BlockConditions<T>> conditions;
        Mat<T> final_in;
        LayerNormCache<T> final_ln;
        Mat<T> final_norm;
        std::optional<Patches<T>> content_patches, style_patches;
        std::optional<Mat<T>> content_tokens, style_tokens;
    };
    /// Gradients reaching the encoded condition series (1 x L each).
    struct ConditionGrads {
        std::optional<Mat<T>> content;
        std::optional<Mat<T>> style;
    };

    Denoiser() = default;
    Denoiser(ParamStore<T>& store, const std::string& prefix, const DenoiserConfig& cfg);

    void init(ParamStore<T>& store, Rng& rng) const;
    const DenoiserConfig& config() const { return cfg_; }

    /// Embeds an encoded condition series into patch tokens.
    Mat<T> content_tokens(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& encoded) const;
    Mat<T> style_tokens(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& encoded) const;
    /// Projects condition tokens to per-block keys/values.
    std::vector<BlockConditions<T>> prepare(const ParamStore<T>& store, const ConditionTokens<T>& tokens) const;

    /// Conditioning time embedding vector (after the MLP) for step t in 1..T.
    RowVec<T> time_vector(const ParamStore<T>& store, int t) const;

    /// Predicts the noise for x_t (1 x L). `t` is the 1-based diffusion step;
    /// the sinusoid is evaluated at t - 1.
    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
                   const std::vector<BlockConditions<T>>& conditions) const;

    /// Training forward from encoded condition series; fills the cache.
    Mat<T> forward_train(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
                         const std::optional<Mat<T>>& content, const std::optional<Mat<T>>& style,
                         Cache& cache) const;
    ConditionGrads backward(ParamStore<T>& store, const Cache& cache, const Eigen::Ref<const Mat<T>>& dy) const;

    const std::vector<ScDitBlock<T>>& blocks() const { return blocks_; }
    const Linear<T>& unpatch() const { return unpatch_; }
    const Linear<T>& patch_noisy() const { return patch_x_; }

private:
    Mat<T> run(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
               const std::vector<BlockConditions<T>>& conditions, Cache* cache) const;

    DenoiserConfig cfg_;
    Linear<T> patch_x_, patch_c_, patch_s_;
    Linear<T> time_fc1_, time_fc2_;
    std::vector<ScDitBlock<T>> blocks_;
    LayerNorm<T> final_ln_;
    Linear<T> unpatch_;
};

extern template class Linear<float>;
extern template class Linear<double>;
extern template class LayerNorm<float>;
extern template class LayerNorm<double>;
extern template class Attention<float>;
extern template class Attention<double>;
extern template class ScDitBlock<float>;
extern template class ScDitBlock<double>;
extern template class Denoiser<float>;
extern template class Denoiser<double>;

} // namespace dtsst
