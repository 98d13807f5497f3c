#pragma once

#include "hybgnn/autodiff.hpp"
#include "hybgnn/random.hpp"

#include <span>
#include <vector>

namespace hybgnn {

struct ConvLayerSpec {
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;

    friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

// (7, stride 4, 1->16), (5, stride 2, 16->32); F_d = 32.
std::vector<ConvLayerSpec> default_extractor_layers();

// Throws ConfigError unless channel counts chain from 1.
void validate_layers(std::span<const ConvLayerSpec> layers);

// Per-electrode temporal CNN shared across electrodes. Each layer is
// conv -> bias -> relu; the remaining time axis is averaged away.
struct ExtractorParams {
    std::vector<ConvLayerSpec> layers;
    std::vector<Var> weights;  // [out, in, kernel]
    std::vector<Var> biases;   // [1, out, 1]

    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out_channels; }
};

ExtractorParams init_extractor(std::span<const ConvLayerSpec> layers, Rng& rng);

// Smallest input length that leaves every layer with >= 1 output sample.
std::size_t min_input_length(std::span<const ConvLayerSpec> layers);

// Rows normalized to zero mean and unit variance (std floored at 1e-8).
Tensor zscore_rows(const Tensor& segment);

// segment [N, T_s] -> X [N, F_d]. Row m of X depends on row m of the segment only.
Var extract_features(const Tensor& segment, const ExtractorParams& params);

// Reference single-channel valid convolution, used by tests and tooling.
std::vector<double> conv1d(std::span<const double> signal, std::span<const double> kernel, std::size_t stride);

// Glorot-uniform tensor with the given fans.
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace hybgnn
