#include "hybgnn/graph.hpp"

#include "hybgnn/errors.hpp"
#include "hybgnn/extractor.hpp"

#include <stdexcept>

namespace hybgnn {

CommonAdjacencyParams init_common_adjacency(std::size_t nodes, Rng& rng) {
    Tensor raw({nodes, nodes});
    for (double& v : raw.data()) v = rng.uniform(0.0, 0.05);
    return {parameter(std::move(raw))};
}

IndividualAdjacencyParams init_individual_adjacency(std::size_t feature_dim, std::size_t projection_dim, Rng& rng) {
    if (projection_dim == 0) throw ConfigError("individual adjacency: F_m must be positive");
    IndividualAdjacencyParams p;
    p.w1 = parameter(glorot_uniform({feature_dim, projection_dim}, feature_dim, projection_dim, rng));
    p.w2 = parameter(glorot_uniform({feature_dim, projection_dim}, feature_dim, projection_dim, rng));
    return p;
}

Var common_adjacency(const CommonAdjacencyParams& params) { return relu(params.raw); }

Var individual_adjacency(const Var& x, const IndividualAdjacencyParams& params, SoftmaxAxis axis) {
    Var scores = matmul(matmul(x, params.w1), transpose(matmul(x, params.w2)));
    return softmax(scores, axis == SoftmaxAxis::column ? 0 : 1);
}

Var normalize_adjacency(const Var& a) {
    const Tensor& v = a.value();
    if (v.rank() != 2 || v.dim(0) != v.dim(1)) throw ShapeError("normalize_adjacency", "expected square matrix, got " + to_string(v.shape()));
    for (double e : v.data()) {
        if (e < 0.0) throw std::domain_error("normalize_adjacency: adjacency has a negative entry");
    }
    Var with_loops = add(a, constant(Tensor::identity(v.dim(0))));
    Var inv_sqrt_degree = pow(sum(with_loops, 1), -0.5);  // [N, 1]
    return mul(mul(with_loops, inv_sqrt_degree), transpose(inv_sqrt_degree));
}

GcnStack init_gcn_stack(std::size_t steps, std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    GcnStack s;
    for (std::size_t l = 0; l <= steps; ++l) s.weights.push_back(parameter(glorot_uniform({in_dim, out_dim}, in_dim, out_dim, rng)));
    return s;
}

Var gcn_propagate(const Var& a_hat, const Var& x, const GcnStack& stack) {
    if (stack.weights.empty()) throw ConfigError("gcn_propagate: stack has no weights");
    const Shape& as = a_hat.shape();
    if (as.size() != 2 || as[0] != as[1] || x.shape().size() != 2 || x.shape()[0] != as[0]) {
        throw ShapeError("gcn_propagate", as, x.shape());
    }
    Var z = x;
    Var y = matmul(z, stack.weights[0]);
    for (std::size_t l = 1; l < stack.weights.size(); ++l) {
        z = matmul(a_hat, z);
        y = add(y, matmul(z, stack.weights[l]));
    }
    return y;
}

BranchOutputs branch_outputs(const Var& x, const Var& a_common, const Var& a_individual, const GcnStack& cgnn,
                             const GcnStack& ignn) {
    if (cgnn.out_dim() != ignn.out_dim()) {
        throw ConfigError("branch_outputs: branch widths differ (" + std::to_string(cgnn.out_dim()) + " vs " +
                          std::to_string(ignn.out_dim()) + ")");
    }
    return {gcn_propagate(normalize_adjacency(a_common), x, cgnn),
            gcn_propagate(normalize_adjacency(a_individual), x, ignn)};
}

}  // namespace hybgnn
