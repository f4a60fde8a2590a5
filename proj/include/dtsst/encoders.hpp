#pragma once

// Content and style encoders. Both map a 1 x L series to a 1 x L series.
//
// Content: reflect-pad on the right to a multiple of the downsample factor,
// strided conv + GELU, a trunk of (conv, GELU, conv, GELU) blocks at the low
// resolution, a 1x1 projection to one channel, then linear interpolation
// back to the padded length and a crop to L.
//
// Style: full-resolution symmetric zero-DC convolutions (reflect padding,
// no bias) with GELU, followed by a bias-free 1x1 projection.

#include <string>
#include <vector>

#include "dtsst/numerics/ops.hpp"
#include "dtsst/numerics/param_store.hpp"
#include "dtsst/numerics/rng.hpp"

namespace dtsst {

struct ContentEncoderConfig {
    std::size_t downsample = 8;
    std::size_t kernel = 5;
    std::size_t channels = 128;
    std::size_t blocks = 3;
};

struct StyleEncoderConfig {
    std::size_t channels = 16;
    std::size_t depth = 2;
    std::size_t kernel = 3;
};

/// `plain_conv` replaces an encoder by generic unconstrained k=3 convolutions
/// (used by the encoder ablation).
enum class EncoderKind { specialized, plain_conv };

struct ConvLayerSpec {
    Conv1dShape shape;
    bool bias = true;
    bool gelu = true;
    /// Kernel is kept symmetric and zero-mean (see project_zero_dc_symmetric).
    bool constrained = false;
};

/// Symmetrizes a kernel (average with its reversal), removes the mean and
/// pins the center tap so the taps sum to exactly zero. Idempotent bit for
/// bit. Requires an odd length.
template <typename T>
void project_zero_dc_symmetric(T* w, std::size_t k);

/// A stack of 1-D conv layers with optional right-padding before and
/// interpolation after; both encoders and the ablation replacements are
/// instances of it.
template <typename T>
class ConvEncoder {
public:
    struct Cache {
        std::size_t length = 0;
        std::vector<Mat<T>> inputs;   // input of each layer
        std::vector<Mat<T>> preacts;  // conv output before GELU
    };

    ConvEncoder() = default;
    ConvEncoder(ParamStore<T>& store, const std::string& prefix, std::vector<ConvLayerSpec> layers,
                std::size_t pad_multiple, bool upsample);

    static ConvEncoder content(ParamStore<T>& store, const std::string& prefix, const ContentEncoderConfig& cfg);
    static ConvEncoder style(ParamStore<T>& store, const std::string& prefix, const StyleEncoderConfig& cfg);
    static ConvEncoder plain(ParamStore<T>& store, const std::string& prefix, std::size_t channels);

    void init(ParamStore<T>& store, Rng& rng) const;

    /// Minimum series length accepted by forward().
    std::size_t min_length() const;

    Mat<T> forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x, Cache* cache = nullptr) const;

    /// Accumulates parameter gradients for dL/d(output).
    void backward(ParamStore<T>& store, const Cache& cache, const Eigen::Ref<const Mat<T>>& dy) const;

    /// Re-imposes kernel constraints on every constrained layer.
    void project_constraints(ParamStore<T>& store) const;

    const std::vector<ConvLayerSpec>& layers() const { return layers_; }
    const std::vector<ParamId>& weights() const { return weights_; }
    std::size_t pad_multiple() const { return pad_multiple_; }
    bool upsamples() const { return upsample_; }

private:
    std::vector<ConvLayerSpec> layers_;
    std::vector<ParamId> weights_;
    std::vector<std::optional<ParamId>> biases_;
    std::size_t pad_multiple_ = 1;
    bool upsample_ = false;
};

/// Right-pads by mirror reflection to the next multiple of `multiple`.
template <typename T>
Mat<T> reflect_pad_right(const Eigen::Ref<const Mat<T>>& x, std::size_t multiple);

extern template class ConvEncoder<float>;
extern template class ConvEncoder<double>;

} // namespace dtsst
