#pragma once

#include <cstdint>
#include <optional>

#include "dtsst/denoiser.hpp"
#include "dtsst/encoders.hpp"

namespace dtsst {

struct ModelConfig {
    ContentEncoderConfig content;
    StyleEncoderConfig style;
    DenoiserConfig denoiser;
    EncoderKind content_kind = EncoderKind::specialized;
    EncoderKind style_kind = EncoderKind::specialized;
    /// Channel width of the plain-conv replacement encoders.
    std::size_t plain_channels = 16;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

bool operator==(const ContentEncoderConfig& a, const ContentEncoderConfig& b);
bool operator==(const StyleEncoderConfig& a, const StyleEncoderConfig& b);
bool operator==(const DenoiserConfig& a, const DenoiserConfig& b);

/// Full-size architecture (d=256, 4 heads, 4 blocks, p=8, content H=128).
ModelConfig full_model_config();
/// Reduced width and depth for single-core CPU training.
ModelConfig desk_model_config();
/// Smallest configuration used by the gradient checks (h=16, 2 heads, 1 block, p=4).
ModelConfig tiny_model_config();

/// Encoders + denoiser over one parameter store.
template <typename T>
class Model {
public:
    explicit Model(const ModelConfig& cfg);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    /// Deterministic initialization; also projects the style kernels.
    void init(std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore<T>& params() { return store_; }
    const ParamStore<T>& params() const { return store_; }
    const ConvEncoder<T>& content_encoder() const { return content_; }
    const ConvEncoder<T>& style_encoder() const { return style_; }
    const Denoiser<T>& denoiser() const { return denoiser_; }

    Mat<T> encode_content(const Eigen::Ref<const Mat<T>>& x) const;
    Mat<T> encode_style(const Eigen::Ref<const Mat<T>>& x) const;
    void project_style_constraints();

    /// Per-block condition keys/values from raw (unencoded) condition series.
    /// A missing series means the condition is dropped.
    std::vector<BlockConditions<T>> prepare_conditions(const std::optional<Mat<T>>& content_series,
                                                       const std::optional<Mat<T>>& style_series) const;
    /// Same, from already-encoded series (a^c, b^s).
    std::vector<BlockConditions<T>> prepare_encoded(const std::optional<Mat<T>>& encoded_content,
                                                    const std::optional<Mat<T>>& encoded_style) const;

    /// eps_theta(x_t, t, content, style) with raw condition series.
    Mat<T> predict_noise(const Eigen::Ref<const Mat<T>>& noisy, int t, const std::optional<Mat<T>>& content_series,
                         const std::optional<Mat<T>>& style_series) const;
    Mat<T> predict_noise(const Eigen::Ref<const Mat<T>>& noisy, int t,
                         const std::vector<BlockConditions<T>>& conditions) const;

    /// One training example: both encoders read the clean series x0, the
    /// denoiser sees x_t. Accumulates `scale` * dMSE/dw into the gradients
    /// and returns the example's mean squared noise error.
    double accumulate_example(const Eigen::Ref<const Mat<T>>& clean, const Eigen::Ref<const Mat<T>>& noisy, int t,
                              const Eigen::Ref<const Mat<T>>& noise, bool drop_content, bool drop_style, T scale);

private:
    ModelConfig cfg_;
    ParamStore<T> store_;
    ConvEncoder<T> content_;
    ConvEncoder<T> style_;
    Denoiser<T> denoiser_;
};

/// Copies parameter values by position, converting precision; layouts must match.
template <typename Src, typename Dst>
void copy_parameters(const ParamStore<Src>& from, ParamStore<Dst>& to);

extern template class Model<float>;
extern template class Model<double>;

} // namespace dtsst
