#include "hybgnn/model.hpp"

#include "hybgnn/errors.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace hybgnn {

namespace {

bool dual_branch(Variant v) { return v != Variant::a && v != Variant::b; }

Var clone_leaf(const Var& v) { return parameter(v.value()); }

GcnStack clone_stack(const GcnStack& s) {
    GcnStack out;
    for (const auto& w : s.weights) out.weights.push_back(clone_leaf(w));
    return out;
}

GpumParams clone_gpum(const GpumParams& g) { return {clone_leaf(g.q), clone_stack(g.region_stack)}; }

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::a: return "a";
        case Variant::b: return "b";
        case Variant::c: return "c";
        case Variant::d: return "d";
        case Variant::e: return "e";
        case Variant::full: return "full";
    }
    return "?";
}

Variant parse_variant(std::string_view s) {
    for (Variant v : all_variants()) {
        if (s == to_string(v)) return v;
    }
    throw ConfigError("unknown variant '" + std::string(s) + "' (expected a, b, c, d, e or full)");
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::a, Variant::b, Variant::c, Variant::d, Variant::e, Variant::full};
    return v;
}

std::string_view to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::extractor: return "extractor";
        case ParamGroup::common_adj: return "common_adj";
        case ParamGroup::individual_adj: return "individual_adj";
        case ParamGroup::cgnn_stack: return "cgnn_stack";
        case ParamGroup::ignn_stack: return "ignn_stack";
        case ParamGroup::gpum_cgnn: return "gpum_cgnn";
        case ParamGroup::gpum_ignn: return "gpum_ignn";
        case ParamGroup::head: return "head";
    }
    return "?";
}

void ModelConfig::validate() const {
    validate_layers(extractor);
    if (channels == 0) throw ConfigError("model: channel count N must be positive");
    if (projection_dim == 0 || out_dim == 0) throw ConfigError("model: F_m and d must be positive");
    const bool pooled = has_group(*this, ParamGroup::gpum_cgnn) || has_group(*this, ParamGroup::gpum_ignn);
    if (pooled && (regions == 0 || regions > channels)) {
        throw ConfigError("model: N_r must lie in [1, N]; got N_r=" + std::to_string(regions) +
                          ", N=" + std::to_string(channels));
    }
}

nlohmann::json to_json(const ModelConfig& c) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : c.extractor) {
        layers.push_back({{"kernel", l.kernel}, {"stride", l.stride}, {"in_channels", l.in_channels},
                          {"out_channels", l.out_channels}});
    }
    return {{"channels", c.channels},
            {"extractor", layers},
            {"feature_dim", c.feature_dim()},
            {"projection_dim", c.projection_dim},
            {"out_dim", c.out_dim},
            {"gcn_steps", c.gcn_steps},
            {"region_steps", c.region_steps},
            {"regions", c.regions},
            {"variant", std::string(to_string(c.variant))},
            {"classifier_hidden", c.classifier_hidden},
            {"adjacency_softmax", c.adjacency_softmax == SoftmaxAxis::column ? "column" : "row"},
            {"classes", ModelConfig::classes}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        c.channels = j.value("channels", c.channels);
        if (j.contains("extractor")) {
            c.extractor.clear();
            for (const auto& l : j.at("extractor")) {
                c.extractor.push_back({l.at("kernel").get<std::size_t>(), l.at("stride").get<std::size_t>(),
                                       l.at("in_channels").get<std::size_t>(), l.at("out_channels").get<std::size_t>()});
            }
        }
        c.projection_dim = j.value("projection_dim", c.projection_dim);
        c.out_dim = j.value("out_dim", c.out_dim);
        c.gcn_steps = j.value("gcn_steps", c.gcn_steps);
        c.region_steps = j.value("region_steps", c.region_steps);
        c.regions = j.value("regions", c.regions);
        c.classifier_hidden = j.value("classifier_hidden", c.classifier_hidden);
        if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
        if (j.contains("adjacency_softmax")) {
            const auto axis = j.at("adjacency_softmax").get<std::string>();
            if (axis == "column") c.adjacency_softmax = SoftmaxAxis::column;
            else if (axis == "row") c.adjacency_softmax = SoftmaxAxis::row;
            else throw ConfigError("adjacency_softmax must be 'column' or 'row', got '" + axis + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model config: ") + e.what());
    }
    return c;
}

std::vector<ParamGroup> build_variant(const ModelConfig& config) {
    using G = ParamGroup;
    switch (config.variant) {
        case Variant::a: return {G::extractor, G::common_adj, G::cgnn_stack, G::head};
        case Variant::b: return {G::extractor, G::individual_adj, G::ignn_stack, G::head};
        case Variant::c: return {G::extractor, G::common_adj, G::individual_adj, G::cgnn_stack, G::ignn_stack, G::head};
        case Variant::d:
            return {G::extractor, G::common_adj, G::individual_adj, G::cgnn_stack, G::ignn_stack, G::gpum_cgnn, G::head};
        case Variant::e:
            return {G::extractor, G::common_adj, G::individual_adj, G::cgnn_stack,
                    G::ignn_stack, G::gpum_cgnn,  G::gpum_ignn,      G::head};
        case Variant::full:
            return {G::extractor, G::common_adj, G::individual_adj, G::cgnn_stack, G::ignn_stack, G::gpum_ignn, G::head};
    }
    throw ConfigError("unknown variant");
}

bool has_group(const ModelConfig& config, ParamGroup g) {
    const auto groups = build_variant(config);
    return std::find(groups.begin(), groups.end(), g) != groups.end();
}

std::size_t head_input_width(const ModelConfig& config) {
    return dual_branch(config.variant) ? 2 * config.out_dim : config.out_dim;
}

std::vector<Var> ForwardResult::assignments() const {
    std::vector<Var> out;
    if (individual_assignment) out.push_back(*individual_assignment);
    if (common_assignment) out.push_back(*common_assignment);
    return out;
}

namespace {

// Forward/backward allocate and free several large buffers per sample. With
// glibc defaults each of those is a fresh mmap, and page faults dominate the
// runtime, so keep them on the heap instead.
void keep_large_allocations_on_heap() {
#ifdef __GLIBC__
    static std::once_flag once;
    std::call_once(once, [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
    });
#endif
}

}  // namespace

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    keep_large_allocations_on_heap();
    config_.validate();
    const std::size_t fd = config_.feature_dim();
    const std::size_t d = config_.out_dim;
    auto rng_for = [seed](ParamGroup g) { return Rng(stream_seed(seed, "init/" + std::string(to_string(g)))); };

    {
        Rng rng = rng_for(ParamGroup::extractor);
        params_.extractor = init_extractor(config_.extractor, rng);
    }
    if (has_group(config_, ParamGroup::common_adj)) {
        Rng rng = rng_for(ParamGroup::common_adj);
        params_.common_adj = init_common_adjacency(config_.channels, rng);
    }
    if (has_group(config_, ParamGroup::individual_adj)) {
        Rng rng = rng_for(ParamGroup::individual_adj);
        params_.individual_adj = init_individual_adjacency(fd, config_.projection_dim, rng);
    }
    if (has_group(config_, ParamGroup::cgnn_stack)) {
        Rng rng = rng_for(ParamGroup::cgnn_stack);
        params_.cgnn_stack = init_gcn_stack(config_.gcn_steps, fd, d, rng);
    }
    if (has_group(config_, ParamGroup::ignn_stack)) {
        Rng rng = rng_for(ParamGroup::ignn_stack);
        params_.ignn_stack = init_gcn_stack(config_.gcn_steps, fd, d, rng);
    }
    if (has_group(config_, ParamGroup::gpum_cgnn)) {
        Rng rng = rng_for(ParamGroup::gpum_cgnn);
        params_.gpum_cgnn = init_gpum(fd, config_.regions, config_.region_steps, d, rng);
    }
    if (has_group(config_, ParamGroup::gpum_ignn)) {
        Rng rng = rng_for(ParamGroup::gpum_ignn);
        params_.gpum_ignn = init_gpum(fd, config_.regions, config_.region_steps, d, rng);
    }
    {
        Rng rng = rng_for(ParamGroup::head);
        std::size_t width = head_input_width(config_);
        const std::size_t c = ModelConfig::classes;
        if (config_.classifier_hidden > 0) {
            const std::size_t h = config_.classifier_hidden;
            params_.head.hidden_weight = parameter(glorot_uniform({width, h}, width, h, rng));
            params_.head.hidden_bias = parameter(Tensor({1, h}));
            width = h;
        }
        params_.head.weight = parameter(glorot_uniform({width, c}, width, c, rng));
        params_.head.bias = parameter(Tensor({1, c}));
    }
}

namespace {

// Visits every parameter slot in file order; P is ModelParams or const ModelParams.
template <class P, class Fn>
void for_each_slot(P& p, Fn&& fn) {
    for (std::size_t i = 0; i < p.extractor.weights.size(); ++i) {
        fn("extractor.conv" + std::to_string(i) + ".weight", ParamGroup::extractor, p.extractor.weights[i]);
        fn("extractor.conv" + std::to_string(i) + ".bias", ParamGroup::extractor, p.extractor.biases[i]);
    }
    if (p.common_adj) fn("common_adj.raw", ParamGroup::common_adj, p.common_adj->raw);
    if (p.individual_adj) {
        fn("individual_adj.w1", ParamGroup::individual_adj, p.individual_adj->w1);
        fn("individual_adj.w2", ParamGroup::individual_adj, p.individual_adj->w2);
    }
    auto stack = [&](const std::string& prefix, ParamGroup g, auto& s) {
        for (std::size_t l = 0; l < s.weights.size(); ++l) fn(prefix + ".w" + std::to_string(l), g, s.weights[l]);
    };
    if (p.cgnn_stack) stack("cgnn", ParamGroup::cgnn_stack, *p.cgnn_stack);
    if (p.ignn_stack) stack("ignn", ParamGroup::ignn_stack, *p.ignn_stack);
    if (p.gpum_cgnn) {
        fn("gpum_cgnn.q", ParamGroup::gpum_cgnn, p.gpum_cgnn->q);
        stack("gpum_cgnn", ParamGroup::gpum_cgnn, p.gpum_cgnn->region_stack);
    }
    if (p.gpum_ignn) {
        fn("gpum_ignn.q", ParamGroup::gpum_ignn, p.gpum_ignn->q);
        stack("gpum_ignn", ParamGroup::gpum_ignn, p.gpum_ignn->region_stack);
    }
    if (p.head.hidden_weight) {
        fn("head.hidden.weight", ParamGroup::head, *p.head.hidden_weight);
        fn("head.hidden.bias", ParamGroup::head, *p.head.hidden_bias);
    }
    fn("head.weight", ParamGroup::head, p.head.weight);
    fn("head.bias", ParamGroup::head, p.head.bias);
}

}  // namespace

std::vector<NamedParam> Model::named_parameters() const {
    std::vector<NamedParam> out;
    for_each_slot(params_, [&](std::string name, ParamGroup g, const Var& v) { out.push_back({std::move(name), g, v}); });
    return out;
}

void Model::bind_parameters(std::span<const Var> leaves) {
    std::size_t count = 0;
    for_each_slot(params_, [&](const std::string&, ParamGroup, Var&) { ++count; });
    if (leaves.size() != count) {
        throw ShapeError("bind_parameters", "expected " + std::to_string(count) + " leaves, got " +
                                                std::to_string(leaves.size()));
    }
    std::size_t i = 0;
    for_each_slot(params_, [&](const std::string& name, ParamGroup, Var& v) {
        if (leaves[i].shape() != v.shape()) throw ShapeError("bind_parameters", v.shape(), leaves[i].shape(), name);
        ++i;
    });
    i = 0;
    for_each_slot(params_, [&](const std::string&, ParamGroup, Var& v) { v = leaves[i++]; });
}

std::vector<Var> Model::parameters() const {
    std::vector<Var> out;
    for (auto& np : named_parameters()) out.push_back(np.var);
    return out;
}

void Model::load_state(const std::vector<std::pair<std::string, Tensor>>& state) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : state) {
        if (!by_name.emplace(name, &t).second) throw ShapeError("load_state", "duplicate tensor '" + name + "'");
    }
    auto named = named_parameters();
    if (by_name.size() != named.size()) {
        throw ShapeError("load_state", "expected " + std::to_string(named.size()) + " tensors, got " +
                                           std::to_string(by_name.size()));
    }
    for (const auto& np : named) {
        auto it = by_name.find(np.name);
        if (it == by_name.end()) throw ShapeError("load_state", "missing tensor '" + np.name + "'");
        if (it->second->shape() != np.var.shape()) {
            throw ShapeError("load_state", np.var.shape(), it->second->shape(), np.name);
        }
    }
    for (auto& np : named) np.var.mutable_value() = *by_name.at(np.name);
}

ForwardResult Model::forward(const Tensor& segment) const {
    if (segment.rank() != 2 || segment.dim(0) != config_.channels) {
        throw ShapeError("forward", "segment " + to_string(segment.shape()) + " does not have N=" +
                                        std::to_string(config_.channels) + " channels");
    }
    ForwardResult r;
    r.features = extract_features(segment, params_.extractor);
    const Var& x = r.features;

    std::optional<Var> y_common;
    std::optional<Var> y_individual;
    std::optional<Var> individual_unpooled;
    if (params_.cgnn_stack) {
        Var a = common_adjacency(*params_.common_adj);
        Var a_hat = normalize_adjacency(a);
        r.common_adjacency = a;
        Var y = gcn_propagate(a_hat, x, *params_.cgnn_stack);
        if (params_.gpum_cgnn) {
            GpumOutput g = apply_gpum(a, a_hat, x, *params_.gpum_cgnn);
            r.common_assignment = g.assignment;
            y = add(y, g.unpooled);
        }
        y_common = y;
    }
    if (params_.ignn_stack) {
        Var a = individual_adjacency(x, *params_.individual_adj, config_.adjacency_softmax);
        Var a_hat = normalize_adjacency(a);
        r.individual_adjacency = a;
        y_individual = gcn_propagate(a_hat, x, *params_.ignn_stack);
        if (params_.gpum_ignn) {
            GpumOutput g = apply_gpum(a, a_hat, x, *params_.gpum_ignn);
            r.individual_assignment = g.assignment;
            individual_unpooled = g.unpooled;
        }
    }

    if (y_common && y_individual) {
        r.merged = individual_unpooled ? merge(*y_individual, *individual_unpooled, *y_common)
                                       : concat({*y_individual, *y_common}, 1);
    } else if (y_common) {
        r.merged = *y_common;
    } else {
        r.merged = individual_unpooled ? add(*y_individual, *individual_unpooled) : *y_individual;
    }

    // Head: relu, node mean, optional hidden layer, linear, softmax.
    Var h = mean(relu(r.merged), 0);
    if (params_.head.hidden_weight) h = relu(add(matmul(h, *params_.head.hidden_weight), *params_.head.hidden_bias));
    Var logits = add(matmul(h, params_.head.weight), params_.head.bias);
    r.probs = reshape(softmax(logits, 1), {ModelConfig::classes});
    return r;
}

Model Model::clone() const {
    Model m = *this;
    auto& p = m.params_;
    for (auto& w : p.extractor.weights) w = clone_leaf(w);
    for (auto& b : p.extractor.biases) b = clone_leaf(b);
    if (p.common_adj) p.common_adj->raw = clone_leaf(p.common_adj->raw);
    if (p.individual_adj) *p.individual_adj = {clone_leaf(p.individual_adj->w1), clone_leaf(p.individual_adj->w2)};
    if (p.cgnn_stack) p.cgnn_stack = clone_stack(*p.cgnn_stack);
    if (p.ignn_stack) p.ignn_stack = clone_stack(*p.ignn_stack);
    if (p.gpum_cgnn) p.gpum_cgnn = clone_gpum(*p.gpum_cgnn);
    if (p.gpum_ignn) p.gpum_ignn = clone_gpum(*p.gpum_ignn);
    if (p.head.hidden_weight) p.head.hidden_weight = clone_leaf(*p.head.hidden_weight);
    if (p.head.hidden_bias) p.head.hidden_bias = clone_leaf(*p.head.hidden_bias);
    p.head.weight = clone_leaf(p.head.weight);
    p.head.bias = clone_leaf(p.head.bias);
    return m;
}

}  // namespace hybgnn
