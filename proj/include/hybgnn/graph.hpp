#pragma once

#include "hybgnn/autodiff.hpp"
#include "hybgnn/random.hpp"

#include <vector>

namespace hybgnn {

// ---------------------------------------------------------------------------
// Adjacency construction
// ---------------------------------------------------------------------------

// Learned, instance-independent adjacency. The raw parameter is mapped
// through relu so the effective matrix stays non-negative.
struct CommonAdjacencyParams {
    Var raw;  // [N, N]
};

// Bilinear similarity projections for the per-instance adjacency.
struct IndividualAdjacencyParams {
    Var w1;  // [F_d, F_m]
    Var w2;  // [F_d, F_m]
};

// Which index the per-instance softmax normalizes over. `column` sums over
// the first index i, so every column of A_I sums to one.
enum class SoftmaxAxis { column, row };

CommonAdjacencyParams init_common_adjacency(std::size_t nodes, Rng& rng);
IndividualAdjacencyParams init_individual_adjacency(std::size_t feature_dim, std::size_t projection_dim, Rng& rng);

Var common_adjacency(const CommonAdjacencyParams& params);

// h = (X W1)(X W2)^T followed by softmax along `axis`.
Var individual_adjacency(const Var& x, const IndividualAdjacencyParams& params,
                         SoftmaxAxis axis = SoftmaxAxis::column);

// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I. Throws std::domain_error
// on a negative entry.
Var normalize_adjacency(const Var& a);

// ---------------------------------------------------------------------------
// Polynomial graph convolution: Y = sum_l A_hat^l X W_l
// ---------------------------------------------------------------------------

struct GcnStack {
    std::vector<Var> weights;  // L + 1 tensors, each [F_d, d]

    std::size_t steps() const { return weights.empty() ? 0 : weights.size() - 1; }
    std::size_t out_dim() const { return weights.empty() ? 0 : weights.front().shape()[1]; }
};

GcnStack init_gcn_stack(std::size_t steps, std::size_t in_dim, std::size_t out_dim, Rng& rng);

// Powers of A_hat are applied incrementally (Z_l = A_hat Z_{l-1}).
Var gcn_propagate(const Var& a_hat, const Var& x, const GcnStack& stack);

struct BranchOutputs {
    Var common;      // Y_C [N, d]
    Var individual;  // Y_I [N, d]
};

// Both branch convolutions over normalized adjacencies. Raw (un-normalized)
// adjacencies are passed in.
BranchOutputs branch_outputs(const Var& x, const Var& a_common, const Var& a_individual, const GcnStack& cgnn,
                             const GcnStack& ignn);

}  // namespace hybgnn
