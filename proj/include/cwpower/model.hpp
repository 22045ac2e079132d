#pragma once

// DC-CNN and Sine-CNN: three stride-1 convolutions (kernels 9, 7, 5) with ReLU, global average
// pooling to a 64-dim embedding, and a two-layer MLP regressing (Re g, Im g).

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cwpower/autograd/ops.hpp"
#include "cwpower/rng.hpp"
#include "cwpower/signal.hpp"
#include "cwpower/spectral.hpp"

namespace cwpower {

enum class Variant : std::uint8_t { dc_cnn = 0, sine_cnn = 1 };

inline std::string_view to_string(Variant v) { return v == Variant::dc_cnn ? "dc_cnn" : "sine_cnn"; }

inline Variant parse_variant(std::string_view s) {
    if (s == "dc_cnn") return Variant::dc_cnn;
    if (s == "sine_cnn") return Variant::sine_cnn;
    throw std::invalid_argument("unknown model variant '" + std::string(s) + "' (expected dc_cnn or sine_cnn)");
}

/// Fixed input rescale: the weakest CW level of the grid (-67.5 dBm) maps to unit amplitude.
inline const double kDefaultInputScale = std::pow(10.0, 67.5 / 20.0);

struct ModelSpec {
    Variant variant = Variant::dc_cnn;
    std::array<std::uint32_t, 3> conv_channels{16, 32, 64};
    std::array<std::uint32_t, 3> kernels{9, 7, 5};
    std::uint32_t embedding_dim = 64;
    std::uint32_t mlp_hidden = 32;
    std::uint32_t output_dim = 2;
    std::uint32_t input_channels = 2;
    std::uint32_t input_length = 1000;
    double probe_offset_hz = 0.0;
    double input_scale = kDefaultInputScale;

    static ModelSpec dc_cnn() { return ModelSpec{}; }
    static ModelSpec sine_cnn() {
        ModelSpec s;
        s.variant = Variant::sine_cnn;
        s.probe_offset_hz = 200e3;
        return s;
    }
    static ModelSpec for_variant(Variant v) { return v == Variant::dc_cnn ? dc_cnn() : sine_cnn(); }

    /// Diameter of the input span seen by one pre-pooling activation.
    std::uint32_t receptive_field() const {
        std::uint32_t rf = 1;
        for (std::uint32_t k : kernels) rf += k - 1;
        return rf;
    }

    void validate() const {
        for (std::uint32_t k : kernels) {
            if (k == 0 || k % 2 == 0) throw std::invalid_argument("model spec: kernel sizes must be odd");
        }
        for (std::uint32_t c : conv_channels) {
            if (c == 0) throw std::invalid_argument("model spec: channel counts must be positive");
        }
        if (embedding_dim != conv_channels.back()) {
            throw std::invalid_argument("model spec: embedding dimension must equal the last conv width");
        }
        if (input_channels != 2 || output_dim != 2) {
            throw std::invalid_argument("model spec: I/Q in, (re, im) out");
        }
        if (mlp_hidden == 0 || input_length == 0) {
            throw std::invalid_argument("model spec: hidden width and input length must be positive");
        }
        if (!(input_scale > 0.0) || !std::isfinite(input_scale) || !std::isfinite(probe_offset_hz)) {
            throw std::invalid_argument("model spec: input scale must be positive and finite");
        }
    }

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct LayerInfo {
    std::string name;
    ag::Shape weight_shape;
    ag::Shape bias_shape;
    std::size_t fan_in = 0;

    std::size_t parameter_count() const { return ag::shape_size(weight_shape) + ag::shape_size(bias_shape); }
};

inline std::vector<LayerInfo> layer_table(const ModelSpec& spec) {
    spec.validate();
    std::vector<LayerInfo> layers;
    std::size_t c_in = spec.input_channels;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t c_out = spec.conv_channels[l], k = spec.kernels[l];
        layers.push_back({"conv" + std::to_string(l + 1), {c_out, c_in, k}, {c_out}, c_in * k});
        c_in = c_out;
    }
    layers.push_back({"fc1", {spec.mlp_hidden, spec.embedding_dim}, {spec.mlp_hidden}, spec.embedding_dim});
    layers.push_back({"fc2", {spec.output_dim, spec.mlp_hidden}, {spec.output_dim}, spec.mlp_hidden});
    return layers;
}

struct EpochLoss {
    double train_db2 = 0.0;
    double val_db2 = 0.0;

    friend bool operator==(const EpochLoss&, const EpochLoss&) = default;
};

struct TrainingMetadata {
    std::uint32_t epoch = 0;  // epoch of the selected weights, 0 = untrained
    std::uint64_t seed = 0;
    std::vector<EpochLoss> loss_history;

    friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

template <typename T>
struct NamedTensor {
    std::string name;
    ag::Tensor<T> tensor;
};

template <typename T>
struct ModelWeights {
    ModelSpec spec;
    std::vector<NamedTensor<T>> params;  // conv1.weight, conv1.bias, ..., fc2.bias
    TrainingMetadata meta;

    const ag::Tensor<T>& at(std::string_view name) const {
        for (const auto& p : params)
            if (p.name == name) return p.tensor;
        throw std::out_of_range("model has no parameter '" + std::string(name) + "'");
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& p : params) out.push_back(p.name);
        return out;
    }

    void set_requires_grad(bool on) {
        for (auto& p : params) p.tensor.set_requires_grad(on);
    }

    void zero_grad() {
        for (auto& p : params) p.tensor.zero_grad();
    }

    /// Independent deep copy (fresh tensor storage).
    ModelWeights clone() const {
        ModelWeights out{spec, {}, meta};
        for (const auto& p : params) out.params.push_back({p.name, p.tensor.detached_copy(p.tensor.requires_grad())});
        return out;
    }
};

template <typename T>
std::size_t count_parameters(const ModelWeights<T>& w) {
    std::size_t n = 0;
    for (const auto& p : w.params) n += p.tensor.size();
    return n;
}

/// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); every tensor has its
/// own seed stream, so values are identical for any T up to rounding.
template <typename T>
ModelWeights<T> build_model(const ModelSpec& spec, std::uint64_t init_seed) {
    const std::vector<LayerInfo> layers = layer_table(spec);
    ModelWeights<T> w;
    w.spec = spec;
    w.meta.seed = init_seed;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const LayerInfo& info = layers[l];
        const double bound = 1.0 / std::sqrt(static_cast<double>(info.fan_in));
        const auto draw = [&](const ag::Shape& shape, std::uint64_t stream) {
            Rng rng(derive_seed(init_seed, l, stream));
            std::vector<T> v(ag::shape_size(shape));
            for (T& x : v) x = static_cast<T>(rng.uniform(-bound, bound));
            return ag::Tensor<T>(shape, std::move(v), true);
        };
        w.params.push_back({info.name + ".weight", draw(info.weight_shape, 0)});
        w.params.push_back({info.name + ".bias", draw(info.bias_shape, 1)});
    }
    return w;
}

template <typename U, typename T>
ModelWeights<U> cast_weights(const ModelWeights<T>& src) {
    ModelWeights<U> out;
    out.spec = src.spec;
    out.meta = src.meta;
    for (const auto& p : src.params) {
        std::vector<U> v(p.tensor.values().begin(), p.tensor.values().end());
        out.params.push_back({p.name, ag::Tensor<U>(p.tensor.shape(), std::move(v), p.tensor.requires_grad())});
    }
    return out;
}

/// [2 x N] tensor: channel 0 in-phase, channel 1 quadrature, multiplied by the input scale.
template <typename T>
ag::Tensor<T> burst_to_input(const Burst& burst, double input_scale) {
    const std::size_t n = burst.size();
    std::vector<T> v(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        v[k] = static_cast<T>(burst[k].real() * input_scale);
        v[n + k] = static_cast<T>(burst[k].imag() * input_scale);
    }
    return ag::Tensor<T>({2, n}, std::move(v));
}

/// Post-ReLU output of the last convolution, before pooling: [C3 x N].
template <typename T>
ag::Tensor<T> forward_features(const ModelWeights<T>& w, const ag::Tensor<T>& input) {
    const std::vector<LayerInfo> layers = layer_table(w.spec);
    ag::Tensor<T> h = input;
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t pad = (w.spec.kernels[l] - 1) / 2;
        h = ag::relu(ag::conv1d_forward(h, w.params[2 * l].tensor, w.params[2 * l + 1].tensor, pad));
    }
    return h;
}

/// Full forward pass on a scaled input tensor; returns the gain (re, im) in sqrt(mW).
template <typename T>
ag::Tensor<T> forward(const ModelWeights<T>& w, const ag::Tensor<T>& input) {
    ag::Tensor<T> h = forward_features(w, input);
    h = ag::adaptive_avg_pool(h, 1);
    h = ag::reshape(h, {w.spec.embedding_dim});
    h = ag::relu(ag::linear(h, w.params[6].tensor, w.params[7].tensor));
    h = ag::linear(h, w.params[8].tensor, w.params[9].tensor);
    return ag::scale(h, static_cast<T>(1.0 / w.spec.input_scale));
}

/// The representation a variant consumes: DC-centred for dc_cnn, raw (+200 kHz) for sine_cnn.
inline bool expects_dc_representation(Variant v) { return v == Variant::dc_cnn; }

template <typename T>
GainEstimate predict_gain(const ModelWeights<T>& w, const Burst& burst) {
    if (burst.size() != w.spec.input_length) {
        throw std::invalid_argument("predict_gain: burst has " + std::to_string(burst.size()) +
                                    " samples, model expects " + std::to_string(w.spec.input_length));
    }
    const ag::Tensor<T> out = forward(w, burst_to_input<T>(burst, w.spec.input_scale));
    return GainEstimate::from_gain(cplx(static_cast<double>(out.values()[0]), static_cast<double>(out.values()[1])));
}

}  // namespace cwpower
