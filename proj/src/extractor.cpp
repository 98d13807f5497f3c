#include "hybgnn/extractor.hpp"

#include "hybgnn/errors.hpp"

#include <cmath>

namespace hybgnn {

std::vector<ConvLayerSpec> default_extractor_layers() {
    return {{7, 4, 1, 16}, {5, 2, 16, 32}};
}

void validate_layers(std::span<const ConvLayerSpec> layers) {
    if (layers.empty()) throw ConfigError("extractor: at least one conv layer is required");
    std::size_t channels = 1;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.in_channels != channels) {
            throw ConfigError("extractor: layer " + std::to_string(i) + " expects " + std::to_string(l.in_channels) +
                              " input channels but receives " + std::to_string(channels));
        }
        if (l.kernel == 0 || l.stride == 0 || l.out_channels == 0) {
            throw ConfigError("extractor: layer " + std::to_string(i) + " has a zero kernel, stride or width");
        }
        channels = l.out_channels;
    }
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

ExtractorParams init_extractor(std::span<const ConvLayerSpec> layers, Rng& rng) {
    validate_layers(layers);
    ExtractorParams p;
    p.layers.assign(layers.begin(), layers.end());
    for (const auto& l : layers) {
        p.weights.push_back(parameter(glorot_uniform({l.out_channels, l.in_channels, l.kernel},
                                                     l.in_channels * l.kernel, l.out_channels * l.kernel, rng)));
        p.biases.push_back(parameter(Tensor({1, l.out_channels, 1})));
    }
    return p;
}

std::size_t min_input_length(std::span<const ConvLayerSpec> layers) {
    std::size_t need = 1;
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) need = (need - 1) * it->stride + it->kernel;
    return need;
}

Tensor zscore_rows(const Tensor& segment) {
    if (segment.rank() != 2) throw ShapeError("zscore_rows", "expected [N, T], got " + to_string(segment.shape()));
    const std::size_t n = segment.dim(0), t = segment.dim(1);
    Tensor out(segment.shape());
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = segment.data().data() + r * t;
        double mean = 0.0;
        for (std::size_t i = 0; i < t; ++i) mean += row[i];
        mean /= static_cast<double>(t);
        double var = 0.0;
        for (std::size_t i = 0; i < t; ++i) var += (row[i] - mean) * (row[i] - mean);
        const double sd = std::max(std::sqrt(var / static_cast<double>(t)), 1e-8);
        double* dst = out.data().data() + r * t;
        for (std::size_t i = 0; i < t; ++i) dst[i] = (row[i] - mean) / sd;
    }
    return out;
}

Var extract_features(const Tensor& segment, const ExtractorParams& params) {
    if (segment.rank() != 2) {
        throw ShapeError("extract_features", "expected segment [N, T_s], got " + to_string(segment.shape()));
    }
    const std::size_t n = segment.dim(0);
    std::size_t length = segment.dim(1);
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        const auto& l = params.layers[i];
        if (length < l.kernel) {
            throw ConfigError("extract_features: conv layer " + std::to_string(i) + " (kernel " +
                              std::to_string(l.kernel) + ") receives only " + std::to_string(length) +
                              " samples; segments need at least " + std::to_string(min_input_length(params.layers)));
        }
        length = (length - l.kernel) / l.stride + 1;
    }

    Var h = constant(zscore_rows(segment).reshaped({n, 1, segment.dim(1)}));
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        h = relu(add(conv1d(h, params.weights[i], params.layers[i].stride), params.biases[i]));
    }
    return reshape(mean(h, 2), {n, params.output_dim()});
}

std::vector<double> conv1d(std::span<const double> signal, std::span<const double> kernel, std::size_t stride) {
    if (kernel.empty() || stride == 0) throw ConfigError("conv1d: kernel must be non-empty and stride >= 1");
    if (signal.size() < kernel.size()) {
        throw ConfigError("conv1d: signal length " + std::to_string(signal.size()) + " is shorter than kernel " +
                          std::to_string(kernel.size()));
    }
    const std::size_t out_len = (signal.size() - kernel.size()) / stride + 1;
    std::vector<double> out(out_len, 0.0);
    for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t j = 0; j < kernel.size(); ++j) out[t] += signal[t * stride + j] * kernel[j];
    return out;
}

}  // namespace hybgnn
