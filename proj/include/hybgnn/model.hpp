#pragma once

#include "hybgnn/extractor.hpp"
#include "hybgnn/gpum.hpp"
#include "hybgnn/graph.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hybgnn {

// Ablation variants:
//   a    common branch only
//   b    individual branch only
//   c    both branches, no pooling
//   d    both branches, pooling on the common branch
//   e    both branches, pooling on both
//   full both branches, pooling on the individual branch
enum class Variant { a, b, c, d, e, full };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);
const std::vector<Variant>& all_variants();

struct ModelConfig {
    std::size_t channels = 19;  // N
    std::vector<ConvLayerSpec> extractor = default_extractor_layers();
    std::size_t projection_dim = 16;  // F_m
    std::size_t out_dim = 16;         // d
    std::size_t gcn_steps = 2;        // L
    std::size_t region_steps = 1;     // L'
    std::size_t regions = 5;          // N_r
    Variant variant = Variant::full;
    std::size_t classifier_hidden = 0;
    SoftmaxAxis adjacency_softmax = SoftmaxAxis::column;

    static constexpr std::size_t classes = 2;

    std::size_t feature_dim() const { return extractor.empty() ? 0 : extractor.back().out_channels; }
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& c);
// Missing keys keep their defaults; unknown variant or axis names throw ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

enum class ParamGroup { extractor, common_adj, individual_adj, cgnn_stack, ignn_stack, gpum_cgnn, gpum_ignn, head };

std::string_view to_string(ParamGroup g);

// Parameter groups trained by the configured variant.
std::vector<ParamGroup> build_variant(const ModelConfig& config);
bool has_group(const ModelConfig& config, ParamGroup g);
std::size_t head_input_width(const ModelConfig& config);

struct HeadParams {
    std::optional<Var> hidden_weight;  // [W, H]
    std::optional<Var> hidden_bias;    // [1, H]
    Var weight;                        // [H or W, C]
    Var bias;                          // [1, C]
};

struct ModelParams {
    ExtractorParams extractor;
    std::optional<CommonAdjacencyParams> common_adj;
    std::optional<IndividualAdjacencyParams> individual_adj;
    std::optional<GcnStack> cgnn_stack;
    std::optional<GcnStack> ignn_stack;
    std::optional<GpumParams> gpum_cgnn;
    std::optional<GpumParams> gpum_ignn;
    HeadParams head;
};

struct NamedParam {
    std::string name;
    ParamGroup group;
    Var var;
};

struct ForwardResult {
    Var probs;  // [C]
    Var features;  // X [N, F_d]
    Var merged;    // Y_all
    std::optional<Var> common_adjacency;      // A_C
    std::optional<Var> individual_adjacency;  // A_I
    std::optional<Var> individual_assignment; // R on the individual branch
    std::optional<Var> common_assignment;     // R on the common branch

    // Assignment matrices regularized by the entropy term.
    std::vector<Var> assignments() const;
};

class Model {
public:
    // Fresh initialization; each parameter group draws from its own seed stream.
    Model(ModelConfig config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }

    // Stable ordering; names are used by the parameter file.
    std::vector<NamedParam> named_parameters() const;
    std::vector<Var> parameters() const;

    // Replace parameter values by name. Throws ShapeError on missing, extra or
    // mis-shaped entries; leaves the model untouched on failure.
    void load_state(const std::vector<std::pair<std::string, Tensor>>& state);

    // Share the given leaves (named_parameters order) instead of the owned
    // ones, e.g. to differentiate with respect to externally created leaves.
    void bind_parameters(std::span<const Var> leaves);

    ForwardResult forward(const Tensor& segment) const;

    // Deep copy with independent parameter leaves.
    Model clone() const;

private:
    ModelConfig config_;
    ModelParams params_;
};

}  // namespace hybgnn
