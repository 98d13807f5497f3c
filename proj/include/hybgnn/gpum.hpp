#pragma once

// Graph pooling and unpooling: soft channel-to-region assignment, region-level
// graph convolution, projection back to channels, and merge with the
// channel-level branch outputs.

#include "hybgnn/graph.hpp"

namespace hybgnn {

struct GpumParams {
    Var q;                 // [F_d, N_r]
    GcnStack region_stack; // L' + 1 weights, each [F_d, d]

    std::size_t regions() const { return q.shape()[1]; }
};

GpumParams init_gpum(std::size_t feature_dim, std::size_t regions, std::size_t region_steps, std::size_t out_dim,
                     Rng& rng);

// R = softmax(A_hat X Q) over regions: each row is a membership distribution.
Var assignment_matrix(const Var& a_hat, const Var& x, const GpumParams& params);

struct PooledGraph {
    Var adjacency;  // A_r = R^T A R   [N_r, N_r]
    Var features;   // X_r = R^T X     [N_r, F_d]
};

// `a` is the un-normalized channel adjacency.
PooledGraph pool(const Var& r, const Var& a, const Var& x);

// Y_r = sum_l' normalize(A_r)^l' X_r W_r^(l').
Var region_conv(const PooledGraph& pooled, const GpumParams& params);

// Y'_r = R Y_r.
Var unpool(const Var& r, const Var& y_r);

// [ (Y_I + Y'_r) || Y_C ], IGNN half first.
Var merge(const Var& y_individual, const Var& y_r_prime, const Var& y_common);

struct GpumOutput {
    Var assignment;  // R
    PooledGraph pooled;
    Var region_embedding;  // Y_r
    Var unpooled;          // Y'_r
};

// Full pooling/unpooling pass for one branch given its raw and normalized adjacency.
GpumOutput apply_gpum(const Var& a, const Var& a_hat, const Var& x, const GpumParams& params);

}  // namespace hybgnn
