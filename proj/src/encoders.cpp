#include "dtsst/encoders.hpp"

#include <cmath>

namespace dtsst {

template <typename T>
void project_zero_dc_symmetric(T* w, std::size_t k) {
    if (k % 2 == 0) {
        throw InvalidArgument("project_zero_dc_symmetric: kernel length must be odd");
    }
    const std::size_t center = k / 2;
    for (std::size_t j = 0; j < center; ++j) {
        const T avg = (w[j] + w[k - 1 - j]) / T(2);
        w[j] = avg;
        w[k - 1 - j] = avg;
    }
    // The mean is accumulated as 2 * (left half) + center so that a kernel
    // which already satisfies the constraint sees a mean of exactly zero.
    T half = T(0);
    for (std::size_t j = 0; j < center; ++j) {
        half += w[j];
    }
    const T mean = (T(2) * half + w[center]) / static_cast<T>(k);
    for (std::size_t j = 0; j < k; ++j) {
        w[j] -= mean;
    }
    half = T(0);
    for (std::size_t j = 0; j < center; ++j) {
        half += w[j];
    }
    w[center] = -T(2) * half;
}

template void project_zero_dc_symmetric<float>(float*, std::size_t);
template void project_zero_dc_symmetric<double>(double*, std::size_t);

template <typename T>
Mat<T> reflect_pad_right(const Eigen::Ref<const Mat<T>>& x, std::size_t multiple) {
    const auto n = static_cast<std::size_t>(x.cols());
    const std::size_t padded = (n + multiple - 1) / multiple * multiple;
    Mat<T> out(x.rows(), static_cast<Eigen::Index>(padded));
    out.leftCols(n) = x;
    for (std::size_t i = n; i < padded; ++i) {
        out.col(i) = x.col(reflect_index(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(n)));
    }
    return out;
}

template Mat<float> reflect_pad_right<float>(const Eigen::Ref<const Mat<float>>&, std::size_t);
template Mat<double> reflect_pad_right<double>(const Eigen::Ref<const Mat<double>>&, std::size_t);

template <typename T>
ConvEncoder<T>::ConvEncoder(ParamStore<T>& store, const std::string& prefix, std::vector<ConvLayerSpec> layers,
                            std::size_t pad_multiple, bool upsample)
    : layers_(std::move(layers)), pad_multiple_(pad_multiple), upsample_(upsample) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& s = layers_[i].shape;
        const std::string name = prefix + ".conv" + std::to_string(i);
        weights_.push_back(store.add(name + ".weight", {s.out_channels, s.in_channels, s.kernel}));
        if (layers_[i].bias) {
            biases_.push_back(store.add(name + ".bias", {s.out_channels}));
        } else {
            biases_.push_back(std::nullopt);
        }
    }
}

template <typename T>
ConvEncoder<T> ConvEncoder<T>::content(ParamStore<T>& store, const std::string& prefix,
                                       const ContentEncoderConfig& cfg) {
    if (cfg.downsample < 1 || cfg.kernel < 1 || cfg.channels < 1) {
        throw InvalidArgument("content encoder: downsample, kernel and channels must be >= 1");
    }
    std::vector<ConvLayerSpec> layers;
    layers.push_back({Conv1dShape{1, cfg.channels, cfg.kernel, cfg.downsample, Padding::zero}, true, true});
    for (std::size_t b = 0; b < 2 * cfg.blocks; ++b) {
        layers.push_back({Conv1dShape{cfg.channels, cfg.channels, cfg.kernel, 1, Padding::zero}, true, true});
    }
    layers.push_back({Conv1dShape{cfg.channels, 1, 1, 1, Padding::none}, true, false});
    return ConvEncoder(store, prefix, std::move(layers), cfg.downsample, true);
}

template <typename T>
ConvEncoder<T> ConvEncoder<T>::style(ParamStore<T>& store, const std::string& prefix, const StyleEncoderConfig& cfg) {
    if (cfg.kernel % 2 == 0) {
        throw InvalidArgument("style encoder: kernel must be odd");
    }
    std::vector<ConvLayerSpec> layers;
    std::size_t in = 1;
    for (std::size_t d = 0; d < cfg.depth; ++d) {
        layers.push_back({Conv1dShape{in, cfg.channels, cfg.kernel, 1, Padding::reflect, true}, false, true, true});
        in = cfg.channels;
    }
    layers.push_back({Conv1dShape{in, 1, 1, 1, Padding::none}, false, false});
    return ConvEncoder(store, prefix, std::move(layers), 1, false);
}

template <typename T>
ConvEncoder<T> ConvEncoder<T>::plain(ParamStore<T>& store, const std::string& prefix, std::size_t channels) {
    std::vector<ConvLayerSpec> layers;
    layers.push_back({Conv1dShape{1, channels, 3, 1, Padding::zero}, true, true});
    layers.push_back({Conv1dShape{channels, channels, 3, 1, Padding::zero}, true, true});
    layers.push_back({Conv1dShape{channels, 1, 1, 1, Padding::none}, true, false});
    return ConvEncoder(store, prefix, std::move(layers), 1, false);
}

template <typename T>
void ConvEncoder<T>::init(ParamStore<T>& store, Rng& rng) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& spec = layers_[i];
        const auto fan_in = static_cast<double>(spec.shape.in_channels * spec.shape.kernel);
        const double gain = spec.gelu ? std::sqrt(2.0) : 1.0;
        auto& w = store.value(weights_[i]);
        rng.fill_normal(w.data(), w.size(), gain / std::sqrt(fan_in));
        if (biases_[i]) {
            store.value(*biases_[i]).fill(T(0));
        }
    }
    project_constraints(store);
}

template <typename T>
std::size_t ConvEncoder<T>::min_length() const {
    std::size_t m = std::max<std::size_t>(pad_multiple_, 1);
    for (const auto& l : layers_) {
        if (l.shape.padding != Padding::zero) {
            m = std::max(m, l.shape.kernel);
        }
    }
    return m;
}

template <typename T>
Mat<T> ConvEncoder<T>::forward(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& x, Cache* cache) const {
    expect_dim(static_cast<std::size_t>(x.rows()), 1, "encoder input rows");
    const auto length = static_cast<std::size_t>(x.cols());
    if (length < min_length()) {
        throw ShapeError("encoder: series length " + std::to_string(length) + " below minimum " +
                         std::to_string(min_length()));
    }
    Mat<T> h = pad_multiple_ > 1 ? reflect_pad_right<T>(x, pad_multiple_) : Mat<T>(x);
    const auto padded_len = static_cast<std::size_t>(h.cols());
    if (cache != nullptr) {
        cache->length = length;
        cache->inputs.clear();
        cache->preacts.clear();
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& spec = layers_[i];
        const T* bias = biases_[i] ? store.value(*biases_[i]).data() : nullptr;
        Mat<T> pre = conv1d<T>(h, store.mat(weights_[i]), bias, spec.shape);
        if (cache != nullptr) {
            cache->inputs.push_back(std::move(h));
        }
        if (spec.gelu) {
            h = gelu(pre);
        } else {
            h = pre;
        }
        if (cache != nullptr) {
            cache->preacts.push_back(std::move(pre));
        }
    }
    if (upsample_) {
        if (h.cols() >= 2) {
            h = linear_interp_resize<T>(h, padded_len);
        } else {
            // A single low-resolution sample interpolates to a constant.
            h = Mat<T>::Constant(1, static_cast<Eigen::Index>(padded_len), h(0, 0));
        }
    }
    return h.leftCols(static_cast<Eigen::Index>(length));
}

template <typename T>
void ConvEncoder<T>::backward(ParamStore<T>& store, const Cache& cache, const Eigen::Ref<const Mat<T>>& dy) const {
    expect_dim(static_cast<std::size_t>(dy.cols()), cache.length, "encoder backward length");
    Mat<T> g;
    if (upsample_) {
        const auto low_len = static_cast<std::size_t>(cache.preacts.back().cols());
        const auto padded_len = static_cast<std::size_t>(cache.inputs.front().cols());
        Mat<T> dpad = Mat<T>::Zero(1, static_cast<Eigen::Index>(padded_len));
        dpad.leftCols(dy.cols()) = dy;
        if (low_len >= 2) {
            g = linear_interp_resize_backward<T>(dpad, low_len);
        } else {
            g = Mat<T>::Constant(1, 1, dpad.sum());
        }
    } else {
        g = dy;
    }
    for (std::size_t i = layers_.size(); i-- > 0;) {
        const auto& spec = layers_[i];
        if (spec.gelu) {
            g = gelu_backward<T>(cache.preacts[i], g);
        }
        T* dbias = biases_[i] ? store.grad(*biases_[i]).data() : nullptr;
        g = conv1d_backward<T>(cache.inputs[i], store.mat(weights_[i]), g, spec.shape, store.grad_mat(weights_[i]),
                               dbias, i > 0);
    }
}

template <typename T>
void ConvEncoder<T>::project_constraints(ParamStore<T>& store) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (!layers_[i].constrained) {
            continue;
        }
        auto& w = store.value(weights_[i]);
        const std::size_t k = layers_[i].shape.kernel;
        for (std::size_t off = 0; off < w.size(); off += k) {
            project_zero_dc_symmetric(w.data() + off, k);
        }
    }
}

template class ConvEncoder<float>;
template class ConvEncoder<double>;

} // namespace dtsst
