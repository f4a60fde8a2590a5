#include "dtsst/model.hpp"

namespace dtsst {

bool operator==(const ContentEncoderConfig& a, const ContentEncoderConfig& b) {
    return a.downsample == b.downsample && a.kernel == b.kernel && a.channels == b.channels && a.blocks == b.blocks;
}

bool operator==(const StyleEncoderConfig& a, const StyleEncoderConfig& b) {
    return a.channels == b.channels && a.depth == b.depth && a.kernel == b.kernel;
}

bool operator==(const DenoiserConfig& a, const DenoiserConfig& b) {
    return a.hidden == b.hidden && a.heads == b.heads && a.layers == b.layers && a.patch == b.patch &&
           a.mlp_ratio == b.mlp_ratio && a.content_drop == b.content_drop && a.style_drop == b.style_drop;
}

void ModelConfig::validate() const {
    denoiser.validate();
    if (content.downsample < 1 || content.kernel < 1 || content.channels < 1) {
        throw InvalidArgument("content encoder: downsample, kernel and channels must be >= 1");
    }
    if (style.kernel % 2 == 0 || style.channels < 1 || style.depth < 1) {
        throw InvalidArgument("style encoder: kernel must be odd, channels and depth >= 1");
    }
    if (plain_channels < 1) {
        throw InvalidArgument("plain encoder channels must be >= 1");
    }
}

ModelConfig full_model_config() {
    return ModelConfig{};
}

ModelConfig desk_model_config() {
    ModelConfig cfg;
    cfg.denoiser.hidden = 64;
    cfg.denoiser.heads = 4;
    cfg.denoiser.layers = 2;
    cfg.denoiser.patch = 8;
    cfg.content.channels = 32;
    return cfg;
}

ModelConfig tiny_model_config() {
    ModelConfig cfg;
    cfg.denoiser.hidden = 16;
    cfg.denoiser.heads = 2;
    cfg.denoiser.layers = 1;
    cfg.denoiser.patch = 4;
    cfg.content.channels = 4;
    cfg.content.blocks = 1;
    cfg.style.channels = 4;
    return cfg;
}

template <typename T>
Model<T>::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    content_ = cfg.content_kind == EncoderKind::specialized
                   ? ConvEncoder<T>::content(store_, "content_encoder", cfg.content)
                   : ConvEncoder<T>::plain(store_, "content_encoder", cfg.plain_channels);
    style_ = cfg.style_kind == EncoderKind::specialized
                 ? ConvEncoder<T>::style(store_, "style_encoder", cfg.style)
                 : ConvEncoder<T>::plain(store_, "style_encoder", cfg.plain_channels);
    denoiser_ = Denoiser<T>(store_, "denoiser", cfg.denoiser);
}

template <typename T>
void Model<T>::init(std::uint64_t seed) {
    Rng rng(seed);
    content_.init(store_, rng);
    style_.init(store_, rng);
    denoiser_.init(store_, rng);
    store_.zero_grad();
}

template <typename T>
Mat<T> Model<T>::encode_content(const Eigen::Ref<const Mat<T>>& x) const {
    return content_.forward(store_, x);
}

template <typename T>
Mat<T> Model<T>::encode_style(const Eigen::Ref<const Mat<T>>& x) const {
    return style_.forward(store_, x);
}

template <typename T>
void Model<T>::project_style_constraints() {
    style_.project_constraints(store_);
}

template <typename T>
std::vector<BlockConditions<T>> Model<T>::prepare_encoded(const std::optional<Mat<T>>& encoded_content,
                                                          const std::optional<Mat<T>>& encoded_style) const {
    ConditionTokens<T> tokens;
    if (encoded_content) {
        tokens.content = denoiser_.content_tokens(store_, *encoded_content);
    }
    if (encoded_style) {
        tokens.style = denoiser_.style_tokens(store_, *encoded_style);
    }
    return denoiser_.prepare(store_, tokens);
}

template <typename T>
std::vector<BlockConditions<T>> Model<T>::prepare_conditions(const std::optional<Mat<T>>& content_series,
                                                             const std::optional<Mat<T>>& style_series) const {
    std::optional<Mat<T>> c;
    std::optional<Mat<T>> s;
    if (content_series) {
        c = encode_content(*content_series);
    }
    if (style_series) {
        s = encode_style(*style_series);
    }
    return prepare_encoded(c, s);
}

template <typename T>
Mat<T> Model<T>::predict_noise(const Eigen::Ref<const Mat<T>>& noisy, int t,
                               const std::optional<Mat<T>>& content_series,
                               const std::optional<Mat<T>>& style_series) const {
    const auto length = static_cast<std::size_t>(noisy.cols());
    if (content_series) {
        expect_dim(static_cast<std::size_t>(content_series->cols()), length, "content condition length");
    }
    if (style_series) {
        expect_dim(static_cast<std::size_t>(style_series->cols()), length, "style condition length");
    }
    return denoiser_.forward(store_, noisy, t, prepare_conditions(content_series, style_series));
}

template <typename T>
Mat<T> Model<T>::predict_noise(const Eigen::Ref<const Mat<T>>& noisy, int t,
                               const std::vector<BlockConditions<T>>& conditions) const {
    return denoiser_.forward(store_, noisy, t, conditions);
}

template <typename T>
double Model<T>::accumulate_example(const Eigen::Ref<const Mat<T>>& clean, const Eigen::Ref<const Mat<T>>& noisy,
                                    int t, const Eigen::Ref<const Mat<T>>& noise, bool drop_content, bool drop_style,
                                    T scale) {
    expect_dim(static_cast<std::size_t>(noisy.cols()), static_cast<std::size_t>(clean.cols()), "noisy length");
    expect_dim(static_cast<std::size_t>(noise.cols()), static_cast<std::size_t>(clean.cols()), "noise length");
    typename ConvEncoder<T>::Cache content_cache;
    typename ConvEncoder<T>::Cache style_cache;
    std::optional<Mat<T>> content;
    std::optional<Mat<T>> style;
    if (!drop_content) {
        content = content_.forward(store_, clean, &content_cache);
    }
    if (!drop_style) {
        style = style_.forward(store_, clean, &style_cache);
    }
    typename Denoiser<T>::Cache cache;
    const Mat<T> pred = denoiser_.forward_train(store_, noisy, t, content, style, cache);
    const Mat<T> diff = pred - noise;
    const auto n = static_cast<double>(diff.size());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < diff.size(); ++i) {
        loss += static_cast<double>(diff(i)) * static_cast<double>(diff(i));
    }
    loss /= n;
    const Mat<T> dpred = diff * static_cast<T>(2.0 / n) * scale;
    const auto cg = denoiser_.backward(store_, cache, dpred);
    if (cg.content) {
        content_.backward(store_, content_cache, *cg.content);
    }
    if (cg.style) {
        style_.backward(store_, style_cache, *cg.style);
    }
    return loss;
}

template <typename Src, typename Dst>
void copy_parameters(const ParamStore<Src>& from, ParamStore<Dst>& to) {
    if (from.size() != to.size()) {
        throw ShapeError("copy_parameters: parameter counts differ");
    }
    for (std::size_t i = 0; i < from.size(); ++i) {
        const auto& a = from.entries()[i];
        auto& b = to.entries()[i];
        if (a.name != b.name || a.value.shape() != b.value.shape()) {
            throw ShapeError("copy_parameters: layout mismatch at '" + a.name + "'");
        }
        for (std::size_t k = 0; k < a.value.size(); ++k) {
            b.value[k] = static_cast<Dst>(a.value[k]);
        }
    }
}

template void copy_parameters<float, float>(const ParamStore<float>&, ParamStore<float>&);
template void copy_parameters<float, double>(const ParamStore<float>&, ParamStore<double>&);
template void copy_parameters<double, float>(const ParamStore<double>&, ParamStore<float>&);
template void copy_parameters<double, double>(const ParamStore<double>&, ParamStore<double>&);

template class Model<float>;
template class Model<double>;

} // namespace dtsst
