#include "dtsst/denoiser.hpp"

#include <cmath>

namespace dtsst {

void DenoiserConfig::validate() const {
    if (hidden < 4 || hidden % 2 != 0) {
        throw InvalidArgument("denoiser: hidden size must be even and >= 4");
    }
    if (heads < 1 || hidden % heads != 0) {
        throw InvalidArgument("denoiser: hidden size " + std::to_string(hidden) + " not divisible by heads " +
                              std::to_string(heads));
    }
    if (patch < 1 || layers < 1 || mlp_ratio < 1) {
        throw InvalidArgument("denoiser: patch, layers and mlp_ratio must be >= 1");
    }
    if (!(content_drop >= 0.0 && content_drop <= 1.0) || !(style_drop >= 0.0 && style_drop <= 1.0)) {
        throw InvalidArgument("denoiser: drop probabilities must lie in [0, 1]");
    }
}

std::vector<double> DenoiserConfig::alibi_slopes() const {
    std::vector<double> slopes(heads);
    for (std::size_t i = 0; i < heads; ++i) {
        slopes[i] = std::exp2(-8.0 * static_cast<double>(i + 1) / static_cast<double>(heads));
    }
    return slopes;
}

template <typename T>
Patches<T> patchify(const Eigen::Ref<const Mat<T>>& x, std::size_t patch) {
    if (patch < 1) {
        throw InvalidArgument("patchify: patch size must be >= 1");
    }
    expect_dim(static_cast<std::size_t>(x.rows()), 1, "patchify rows");
    const auto length = static_cast<std::size_t>(x.cols());
    if (length < 1) {
        throw ShapeError("patchify: empty series");
    }
    const std::size_t n = (length + patch - 1) / patch;
    Patches<T> out;
    out.length = length;
    out.pad_amount = n * patch - length;
    out.values = Mat<T>::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(patch));
    std::copy(x.data(), x.data() + length, out.values.data());
    return out;
}

template <typename T>
Mat<T> unpatchify(const Eigen::Ref<const Mat<T>>& patches, std::size_t length) {
    const auto total = static_cast<std::size_t>(patches.size());
    if (length > total) {
        throw ShapeError("unpatchify: length " + std::to_string(length) + " exceeds " + std::to_string(total) +
                         " patch samples");
    }
    Mat<T> out(1, static_cast<Eigen::Index>(length));
    const Mat<T> dense = patches;  // row-major: rows are consecutive patches
    std::copy(dense.data(), dense.data() + length, out.data());
    return out;
}

template <typename T>
RowVec<T> time_embedding(double t, std::size_t hidden) {
    if (hidden < 4 || hidden % 2 != 0) {
        throw InvalidArgument("time_embedding: hidden size must be even and >= 4, got " + std::to_string(hidden));
    }
    const std::size_t half = hidden / 2;
    RowVec<T> tau(static_cast<Eigen::Index>(hidden));
    for (std::size_t j = 0; j < half; ++j) {
        const double omega = std::exp(-static_cast<double>(j) * std::log(10000.0) / static_cast<double>(half - 1));
        tau(2 * j) = static_cast<T>(std::sin(t * omega));
        tau(2 * j + 1) = static_cast<T>(std::cos(t * omega));
    }
    return tau;
}

template <typename T>
Mat<T> alibi_bias(std::size_t n_q, std::size_t n_k, double slope) {
    Mat<T> b(static_cast<Eigen::Index>(n_q), static_cast<Eigen::Index>(n_k));
    for (std::size_t i = 0; i < n_q; ++i) {
        for (std::size_t j = 0; j < n_k; ++j) {
            const double dist = i > j ? static_cast<double>(i - j) : static_cast<double>(j - i);
            b(i, j) = static_cast<T>(-slope * dist);
        }
    }
    return b;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out, bool bias) {
    weight_ = store.add(name + ".weight", {in, out});
    if (bias) {
        bias_ = store.add(name + ".bias", {out});
    }
}

template <typename T>
void Linear<T>::init(ParamStore<T>& store, Rng& rng, double gain) const {
    auto& w = store.value(weight_);
    const double fan_in = static_cast<double>(w.dim(0));
    if (gain == 0.0) {
        w.fill(T(0));
    } else {
        rng.fill_normal(w.data(), w.size(), gain / std::sqrt(fan_in));
    }
    if (bias_) {
        store.value(*bias_).fill(T(0));
    }
}

template <typename T>
Mat<T> Linear<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x) const {
    const auto w = store.mat(weight_);
    expect_dim(static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(w.rows()), "linear input features");
    Mat<T> y = x * w;
    if (bias_) {
        y.rowwise() += store.row(*bias_);
    }
    return y;
}

template <typename T>
Mat<T> Linear<T>::backward(ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x,
                           const Eigen::Ref<const Mat<T>>& dy, bool want_input_grad) const {
    store.grad_mat(weight_).noalias() += x.transpose() * dy;
    if (bias_) {
        store.grad_row(*bias_) += dy.colwise().sum();
    }
    if (!want_input_grad) {
        return {};
    }
    return dy * store.mat(weight_).transpose();
}

// ------------------------------------------------------------- LayerNorm

template <typename T>
LayerNorm<T>::LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t hidden) {
    gain_ = store.add(name + ".gain", {hidden});
    shift_ = store.add(name + ".shift", {hidden});
}

template <typename T>
void LayerNorm<T>::init(ParamStore<T>& store) const {
    store.value(gain_).fill(T(1));
    store.value(shift_).fill(T(0));
}

template <typename T>
Mat<T> LayerNorm<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x,
                             LayerNormCache<T>* cache) const {
    return layer_norm<T>(x, store.row(gain_), store.row(shift_), cache);
}

template <typename T>
Mat<T> LayerNorm<T>::backward(ParamStore<T>& store, const LayerNormCache<T>& cache,
                              const Eigen::Ref<const Mat<T>>& dy) const {
    return layer_norm_backward<T>(cache, store.row(gain_), dy, store.grad_row(gain_), store.grad_row(shift_));
}

// ------------------------------------------------------------- Attention

template <typename T>
Attention<T>::Attention(ParamStore<T>& store, const std::string& name, std::size_t hidden, std::size_t heads,
                        std::vector<double> slopes)
    : hidden_(hidden), heads_(heads), slopes_(std::move(slopes)) {
    if (heads_ < 1 || hidden_ % heads_ != 0 || slopes_.size() != heads_) {
        throw InvalidArgument("attention: bad head layout");
    }
    wq_ = Linear<T>(store, name + ".q", hidden, hidden, false);
    wk_ = Linear<T>(store, name + ".k", hidden, hidden, false);
    wv_ = Linear<T>(store, name + ".v", hidden, hidden, false);
    out_ = Linear<T>(store, name + ".out", hidden, hidden, true);
}

template <typename T>
void Attention<T>::init(ParamStore<T>& store, Rng& rng) const {
    wq_.init(store, rng);
    wk_.init(store, rng);
    wv_.init(store, rng);
    out_.init(store, rng);
}

template <typename T>
typename Attention<T>::KeyValue Attention<T>::project(const ParamStore<T>& store,
                                                      const Eigen::Ref<const Mat<T>>& kv_input) const {
    return {wk_.forward(store, kv_input), wv_.forward(store, kv_input)};
}

namespace {

template <typename T>
Mat<T> distance_matrix(Eigen::Index n_q, Eigen::Index n_k) {
    return alibi_bias<T>(static_cast<std::size_t>(n_q), static_cast<std::size_t>(n_k), -1.0);
}

} // namespace

template <typename T>
Mat<T> Attention<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& query_input,
                             const KeyValue& kv, Cache* cache) const {
    expect_dim(static_cast<std::size_t>(query_input.cols()), hidden_, "attention query width");
    expect_dim(static_cast<std::size_t>(kv.keys.cols()), hidden_, "attention key width");
    const Mat<T> q = wq_.forward(store, query_input);
    const Eigen::Index dk = static_cast<Eigen::Index>(hidden_ / heads_);
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    const Mat<T> dist = distance_matrix<T>(q.rows(), kv.keys.rows());
    Mat<T> heads(q.rows(), static_cast<Eigen::Index>(hidden_));
    if (cache != nullptr) {
        cache->probs.resize(heads_);
    }
    for (std::size_t hd = 0; hd < heads_; ++hd) {
        const Eigen::Index off = static_cast<Eigen::Index>(hd) * dk;
        Mat<T> scores = (q.middleCols(off, dk) * kv.keys.middleCols(off, dk).transpose()) * scale;
        scores.noalias() -= static_cast<T>(slopes_[hd]) * dist;
        Mat<T> p = softmax_rows<T>(scores);
        heads.middleCols(off, dk).noalias() = p * kv.values.middleCols(off, dk);
        if (cache != nullptr) {
            cache->probs[hd] = std::move(p);
        }
    }
    Mat<T> y = out_.forward(store, heads);
    if (cache != nullptr) {
        cache->query_input = query_input;
        cache->queries = q;
        cache->heads = std::move(heads);
    }
    return y;
}

template <typename T>
typename Attention<T>::Grads Attention<T>::backward(ParamStore<T>& store, const Cache& cache, const KeyValue& kv,
                                                    const Eigen::Ref<const Mat<T>>& dy) const {
    const Mat<T> d_heads = out_.backward(store, cache.heads, dy);
    const Eigen::Index dk = static_cast<Eigen::Index>(hidden_ / heads_);
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    Mat<T> dq = Mat<T>::Zero(cache.queries.rows(), cache.queries.cols());
    Grads g;
    g.d_keys = Mat<T>::Zero(kv.keys.rows(), kv.keys.cols());
    g.d_values = Mat<T>::Zero(kv.values.rows(), kv.values.cols());
    for (std::size_t hd = 0; hd < heads_; ++hd) {
        const Eigen::Index off = static_cast<Eigen::Index>(hd) * dk;
        const Mat<T>& p = cache.probs[hd];
        const auto d_out = d_heads.middleCols(off, dk);
        const Mat<T> dp = d_out * kv.values.middleCols(off, dk).transpose();
        g.d_values.middleCols(off, dk).noalias() += p.transpose() * d_out;
        const Mat<T> ds = softmax_rows_backward<T>(p, dp) * scale;
        dq.middleCols(off, dk).noalias() += ds * kv.keys.middleCols(off, dk);
        g.d_keys.middleCols(off, dk).noalias() += ds.transpose() * cache.queries.middleCols(off, dk);
    }
    g.d_query_input = wq_.backward(store, cache.query_input, dq);
    return g;
}

template <typename T>
Mat<T> Attention<T>::project_backward(ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& kv_input,
                                      const Eigen::Ref<const Mat<T>>& d_keys,
                                      const Eigen::Ref<const Mat<T>>& d_values) const {
    Mat<T> dx = wk_.backward(store, kv_input, d_keys);
    dx += wv_.backward(store, kv_input, d_values);
    return dx;
}

// ------------------------------------------------------------ ScDitBlock

template <typename T>
ScDitBlock<T>::ScDitBlock(ParamStore<T>& store, const std::string& name, const DenoiserConfig& cfg)
    : hidden_(cfg.hidden) {
    const auto slopes = cfg.alibi_slopes();
    ln1_ = LayerNorm<T>(store, name + ".ln_self", cfg.hidden);
    self_attn_ = Attention<T>(store, name + ".self_attn", cfg.hidden, cfg.heads, slopes);
    ln2_ = LayerNorm<T>(store, name + ".ln_content", cfg.hidden);
    content_attn_ = Attention<T>(store, name + ".content_attn", cfg.hidden, cfg.heads, slopes);
    ln3_ = LayerNorm<T>(store, name + ".ln_style", cfg.hidden);
    style_attn_ = Attention<T>(store, name + ".style_attn", cfg.hidden, cfg.heads, slopes);
    ln4_ = LayerNorm<T>(store, name + ".ln_mlp", cfg.hidden);
    fc1_ = Linear<T>(store, name + ".mlp.fc1", cfg.hidden, cfg.hidden * cfg.mlp_ratio);
    fc2_ = Linear<T>(store, name + ".mlp.fc2", cfg.hidden * cfg.mlp_ratio, cfg.hidden);
}

template <typename T>
void ScDitBlock<T>::init(ParamStore<T>& store, Rng& rng) const {
    ln1_.init(store);
    ln2_.init(store);
    ln3_.init(store);
    ln4_.init(store);
    self_attn_.init(store, rng);
    content_attn_.init(store, rng);
    style_attn_.init(store, rng);
    fc1_.init(store, rng, std::sqrt(2.0));
    fc2_.init(store, rng);
}

template <typename T>
Mat<T> ScDitBlock<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& tokens,
                              const BlockConditions<T>& cond, Cache* cache) const {
    expect_dim(static_cast<std::size_t>(tokens.cols()), hidden_, "block token width");
    LayerNormCache<T>* ln1c = cache ? &cache->ln1 : nullptr;
    Mat<T> n1 = ln1_.forward(store, tokens, ln1c);
    auto self_kv = self_attn_.project(store, n1);
    Mat<T> x1 = tokens + self_attn_.forward(store, n1, self_kv, cache ? &cache->self_attn : nullptr);

    Mat<T> x2;
    if (cond.content) {
        const Mat<T> n2 = ln2_.forward(store, x1, cache ? &cache->ln2 : nullptr);
        x2 = x1 + content_attn_.forward(store, n2, *cond.content, cache ? &cache->content_attn : nullptr);
    } else {
        x2 = x1;
    }
    Mat<T> x3;
    if (cond.style) {
        const Mat<T> n3 = ln3_.forward(store, x2, cache ? &cache->ln3 : nullptr);
        x3 = x2 + style_attn_.forward(store, n3, *cond.style, cache ? &cache->style_attn : nullptr);
    } else {
        x3 = x2;
    }
    Mat<T> n4 = ln4_.forward(store, x3, cache ? &cache->ln4 : nullptr);
    Mat<T> pre = fc1_.forward(store, n4);
    Mat<T> act = gelu(pre);
    Mat<T> out = x3 + fc2_.forward(store, act);
    if (cache != nullptr) {
        cache->x0 = tokens;
        cache->n1 = std::move(n1);
        cache->self_kv = std::move(self_kv);
        cache->x1 = std::move(x1);
        cache->x2 = std::move(x2);
        cache->x3 = std::move(x3);
        cache->mlp_in = std::move(n4);
        cache->mlp_pre = std::move(pre);
        cache->mlp_act = std::move(act);
        cache->has_content = cond.content.has_value();
        cache->has_style = cond.style.has_value();
    }
    return out;
}

template <typename T>
typename ScDitBlock<T>::Grads ScDitBlock<T>::backward(ParamStore<T>& store, const Cache& cache,
                                                      const BlockConditions<T>& cond,
                                                      const Eigen::Ref<const Mat<T>>& dy) const {
    Grads g;
    Mat<T> d = dy;
    {
        const Mat<T> d_act = fc2_.backward(store, cache.mlp_act, d);
        const Mat<T> d_pre = gelu_backward<T>(cache.mlp_pre, d_act);
        const Mat<T> d_n4 = fc1_.backward(store, cache.mlp_in, d_pre);
        d += ln4_.backward(store, cache.ln4, d_n4);
    }
    if (cache.has_style) {
        auto ag = style_attn_.backward(store, cache.style_attn, *cond.style, d);
        d += ln3_.backward(store, cache.ln3, ag.d_query_input);
        g.d_style_keys = std::move(ag.d_keys);
        g.d_style_values = std::move(ag.d_values);
    }
    if (cache.has_content) {
        auto ag = content_attn_.backward(store, cache.content_attn, *cond.content, d);
        d += ln2_.backward(store, cache.ln2, ag.d_query_input);
        g.d_content_keys = std::move(ag.d_keys);
        g.d_content_values = std::move(ag.d_values);
    }
    {
        auto ag = self_attn_.backward(store, cache.self_attn, cache.self_kv, d);
        Mat<T> d_n1 = ag.d_query_input + self_attn_.project_backward(store, cache.n1, ag.d_keys, ag.d_values);
        d += ln1_.backward(store, cache.ln1, d_n1);
    }
    g.d_input = std::move(d);
    return g;
}

// -------------------------------------------------------------- Denoiser

template <typename T>
Denoiser<T>::Denoiser(ParamStore<T>& store, const std::string& prefix, const DenoiserConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t h = cfg.hidden;
    patch_x_ = Linear<T>(store, prefix + ".patch_noisy", cfg.patch, h);
    patch_c_ = Linear<T>(store, prefix + ".patch_content", cfg.patch, h);
    patch_s_ = Linear<T>(store, prefix + ".patch_style", cfg.patch, h);
    time_fc1_ = Linear<T>(store, prefix + ".time.fc1", h, h);
    time_fc2_ = Linear<T>(store, prefix + ".time.fc2", h, h);
    for (std::size_t b = 0; b < cfg.layers; ++b) {
        blocks_.emplace_back(store, prefix + ".block" + std::to_string(b), cfg);
    }
    final_ln_ = LayerNorm<T>(store, prefix + ".ln_final", h);
    unpatch_ = Linear<T>(store, prefix + ".unpatch", h, cfg.patch);
}

template <typename T>
void Denoiser<T>::init(ParamStore<T>& store, Rng& rng) const {
    patch_x_.init(store, rng);
    patch_c_.init(store, rng);
    patch_s_.init(store, rng);
    time_fc1_.init(store, rng, std::sqrt(2.0));
    time_fc2_.init(store, rng);
    for (const auto& b : blocks_) {
        b.init(store, rng);
    }
    final_ln_.init(store);
    // Zero head: the initial prediction is exactly zero.
    unpatch_.init(store, rng, 0.0);
}

template <typename T>
Mat<T> Denoiser<T>::content_tokens(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& encoded) const {
    return patch_c_.forward(store, patchify<T>(encoded, cfg_.patch).values);
}

template <typename T>
Mat<T> Denoiser<T>::style_tokens(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& encoded) const {
    return patch_s_.forward(store, patchify<T>(encoded, cfg_.patch).values);
}

template <typename T>
std::vector<BlockConditions<T>> Denoiser<T>::prepare(const ParamStore<T>& store,
                                                     const ConditionTokens<T>& tokens) const {
    std::vector<BlockConditions<T>> out(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        if (tokens.content) {
            out[b].content = blocks_[b].content_attention().project(store, *tokens.content);
        }
        if (tokens.style) {
            out[b].style = blocks_[b].style_attention().project(store, *tokens.style);
        }
    }
    return out;
}

template <typename T>
RowVec<T> Denoiser<T>::time_vector(const ParamStore<T>& store, int t) const {
    const Mat<T> raw = time_embedding<T>(static_cast<double>(t - 1), cfg_.hidden);
    return time_fc2_.forward(store, silu(time_fc1_.forward(store, raw)));
}

template <typename T>
Mat<T> Denoiser<T>::run(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
                        const std::vector<BlockConditions<T>>& conditions, Cache* cache) const {
    if (conditions.size() != blocks_.size()) {
        throw ShapeError("denoiser: expected conditions for " + std::to_string(blocks_.size()) + " blocks, got " +
                         std::to_string(conditions.size()));
    }
    Patches<T> patches = patchify<T>(noisy, cfg_.patch);
    const auto n = static_cast<std::size_t>(patches.values.rows());
    for (const auto& c : conditions) {
        if (c.content) {
            expect_dim(static_cast<std::size_t>(c.content->keys.rows()), n, "content token count");
        }
        if (c.style) {
            expect_dim(static_cast<std::size_t>(c.style->keys.rows()), n, "style token count");
        }
    }
    Mat<T> e = patch_x_.forward(store, patches.values);
    Mat<T> raw = time_embedding<T>(static_cast<double>(t - 1), cfg_.hidden);
    Mat<T> pre = time_fc1_.forward(store, raw);
    Mat<T> act = silu(pre);
    const Mat<T> temb = time_fc2_.forward(store, act);
    e.rowwise() += temb.row(0);
    if (cache != nullptr) {
        cache->blocks.resize(blocks_.size());
    }
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        e = blocks_[b].forward(store, e, conditions[b], cache ? &cache->blocks[b] : nullptr);
    }
    Mat<T> norm = final_ln_.forward(store, e, cache ? &cache->final_ln : nullptr);
    const Mat<T> out_patches = unpatch_.forward(store, norm);
    Mat<T> out = unpatchify<T>(out_patches, patches.length);
    if (cache != nullptr) {
        cache->length = patches.length;
        cache->noisy = std::move(patches);
        cache->time_raw = std::move(raw);
        cache->time_pre = std::move(pre);
        cache->time_act = std::move(act);
        cache->final_in = std::move(e);
        cache->final_norm = std::move(norm);
    }
    return out;
}

template <typename T>
Mat<T> Denoiser<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
                            const std::vector<BlockConditions<T>>& conditions) const {
    return run(store, noisy, t, conditions, nullptr);
}

template <typename T>
Mat<T> Denoiser<T>::forward_train(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& noisy, int t,
                                  const std::optional<Mat<T>>& content, const std::optional<Mat<T>>& style,
                                  Cache& cache) const {
    ConditionTokens<T> tokens;
    cache.content_patches.reset();
    cache.style_patches.reset();
    if (content) {
        cache.content_patches = patchify<T>(*content, cfg_.patch);
        tokens.content = patch_c_.forward(store, cache.content_patches->values);
    }
    if (style) {
        cache.style_patches = patchify<T>(*style, cfg_.patch);
        tokens.style = patch_s_.forward(store, cache.style_patches->values);
    }
    cache.conditions = prepare(store, tokens);
    cache.content_tokens = std::move(tokens.content);
    cache.style_tokens = std::move(tokens.style);
    return run(store, noisy, t, cache.conditions, &cache);
}

template <typename T>
typename Denoiser<T>::ConditionGrads Denoiser<T>::backward(ParamStore<T>& store, const Cache& cache,
                                                           const Eigen::Ref<const Mat<T>>& dy) const {
    expect_dim(static_cast<std::size_t>(dy.cols()), cache.length, "denoiser backward length");
    const Mat<T> d_out_patches = patchify<T>(dy, cfg_.patch).values;
    const Mat<T> d_norm = unpatch_.backward(store, cache.final_norm, d_out_patches);
    Mat<T> d = final_ln_.backward(store, cache.final_ln, d_norm);

    std::optional<Mat<T>> d_content_tokens;
    std::optional<Mat<T>> d_style_tokens;
    for (std::size_t b = blocks_.size(); b-- > 0;) {
        auto g = blocks_[b].backward(store, cache.blocks[b], cache.conditions[b], d);
        d = std::move(g.d_input);
        if (g.d_content_keys) {
            Mat<T> dt = blocks_[b].content_attention().project_backward(store, *cache.content_tokens,
                                                                       *g.d_content_keys, *g.d_content_values);
            d_content_tokens = d_content_tokens ? Mat<T>(*d_content_tokens + dt) : dt;
        }
        if (g.d_style_keys) {
            Mat<T> dt = blocks_[b].style_attention().project_backward(store, *cache.style_tokens, *g.d_style_keys,
                                                                     *g.d_style_values);
            d_style_tokens = d_style_tokens ? Mat<T>(*d_style_tokens + dt) : dt;
        }
    }
    const Mat<T> d_temb = d.colwise().sum();
    const Mat<T> d_act = time_fc2_.backward(store, cache.time_act, d_temb);
    time_fc1_.backward(store, cache.time_raw, silu_backward<T>(cache.time_pre, d_act), false);
    patch_x_.backward(store, cache.noisy.values, d, false);

    ConditionGrads out;
    if (cache.content_tokens) {
        const Mat<T> dt = d_content_tokens ? *d_content_tokens : Mat<T>::Zero(cache.content_tokens->rows(),
                                                                                 cache.content_tokens->cols());
        const Mat<T> dp = patch_c_.backward(store, cache.content_patches->values, dt);
        out.content = unpatchify<T>(dp, cache.content_patches->length);
    }
    if (cache.style_tokens) {
        const Mat<T> dt = d_style_tokens ? *d_style_tokens : Mat<T>::Zero(cache.style_tokens->rows(),
                                                                           cache.style_tokens->cols());
        const Mat<T> dp = patch_s_.backward(store, cache.style_patches->values, dt);
        out.style = unpatchify<T>(dp, cache.style_patches->length);
    }
    return out;
}

template Patches<float> patchify<float>(const Eigen::Ref<const Mat<float>>&, std::size_t);
template Patches<double> patchify<double>(const Eigen::Ref<const Mat<double>>&, std::size_t);
template Mat<float> unpatchify<float>(const Eigen::Ref<const Mat<float>>&, std::size_t);
template Mat<double> unpatchify<double>(const Eigen::Ref<const Mat<double>>&, std::size_t);
template RowVec<float> time_embedding<float>(double, std::size_t);
template RowVec<double> time_embedding<double>(double, std::size_t);
template Mat<float> alibi_bias<float>(std::size_t, std::size_t, double);
template Mat<double> alibi_bias<double>(std::size_t, std::size_t, double);

template class Linear<float>;
template class Linear<double>;
template class LayerNorm<float>;
template class LayerNorm<double>;
template class Attention<float>;
template class Attention<double>;
template class ScDitBlock<float>;
template class ScDitBlock<double>;
template class Denoiser<float>;
template class Denoiser<double>;

} // namespace dtsst
