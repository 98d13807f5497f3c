#include "hybgnn/gpum.hpp"

#include "hybgnn/errors.hpp"
#include "hybgnn/extractor.hpp"

namespace hybgnn {

GpumParams init_gpum(std::size_t feature_dim, std::size_t regions, std::size_t region_steps, std::size_t out_dim,
                     Rng& rng) {
    if (regions == 0) throw ConfigError("gpum: N_r must be positive");
    GpumParams p;
    p.q = parameter(glorot_uniform({feature_dim, regions}, feature_dim, regions, rng));
    p.region_stack = init_gcn_stack(region_steps, feature_dim, out_dim, rng);
    return p;
}

Var assignment_matrix(const Var& a_hat, const Var& x, const GpumParams& params) {
    return softmax(matmul(matmul(a_hat, x), params.q), 1);
}

PooledGraph pool(const Var& r, const Var& a, const Var& x) {
    if (r.shape().size() != 2 || r.shape()[0] != a.shape()[0]) throw ShapeError("pool", r.shape(), a.shape());
    Var rt = transpose(r);
    return {matmul(matmul(rt, a), r), matmul(rt, x)};
}

Var region_conv(const PooledGraph& pooled, const GpumParams& params) {
    return gcn_propagate(normalize_adjacency(pooled.adjacency), pooled.features, params.region_stack);
}

Var unpool(const Var& r, const Var& y_r) { return matmul(r, y_r); }

Var merge(const Var& y_individual, const Var& y_r_prime, const Var& y_common) {
    if (y_individual.shape() != y_r_prime.shape()) throw ShapeError("merge", y_individual.shape(), y_r_prime.shape());
    if (y_individual.shape() != y_common.shape()) throw ShapeError("merge", y_individual.shape(), y_common.shape());
    return concat({add(y_individual, y_r_prime), y_common}, 1);
}

GpumOutput apply_gpum(const Var& a, const Var& a_hat, const Var& x, const GpumParams& params) {
    if (params.regions() > a.shape()[0]) {
        throw ConfigError("gpum: N_r = " + std::to_string(params.regions()) + " exceeds node count " +
                          std::to_string(a.shape()[0]));
    }
    GpumOutput out;
    out.assignment = assignment_matrix(a_hat, x, params);
    out.pooled = pool(out.assignment, a, x);
    out.region_embedding = region_conv(out.pooled, params);
    out.unpooled = unpool(out.assignment, out.region_embedding);
    return out;
}

}  // namespace hybgnn
