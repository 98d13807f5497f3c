#pragma once

// Dynamic-graph reverse-mode differentiation over hybgnn::Tensor.
//
// A graph is built implicitly by calling the primitives below on Var handles;
// every call records its parents. backward() on a scalar root walks the graph
// in reverse topological order. Leaf gradients ACCUMULATE across backward()
// calls until zero_grad() is called; interior gradients are recomputed from
// scratch on every call.
//
// A graph (and its leaves' grad buffers) must only be touched by one thread at
// a time. Distinct graphs may share leaves read-only, e.g. for parallel
// inference, as long as nobody calls backward() through them concurrently.

#include "hybgnn/tensor.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace hybgnn {

enum class Op {
    leaf,
    add,
    sub,
    mul,
    scale,
    matmul,
    transpose,
    relu,
    exp,
    log,
    pow,
    softmax,
    sum,
    mean,
    concat,
    reshape,
    slice,
    conv1d,
};

std::string_view op_name(Op op);

struct Node {
    Tensor value;
    Tensor grad;
    Op op = Op::leaf;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    // Mutable access is for optimizers and test harnesses that perturb leaves.
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& mutable_grad() { return node_->grad; }
    const Shape& shape() const { return node_->value.shape(); }
    Op op() const { return node_->op; }
    bool is_leaf() const { return node_->op == Op::leaf; }
    bool requires_grad() const { return node_->requires_grad; }
    const std::vector<std::shared_ptr<Node>>& parents() const { return node_->parents; }
    bool defined() const { return static_cast<bool>(node_); }

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Trainable leaf (zero-initialized grad) and non-trainable leaf.
Var parameter(Tensor value);
Var constant(Tensor value);

// Elementwise ops broadcast over equal-rank operands where a dimension is 1
// on one side (bias add is add(x, b) with b shaped e.g. [1, C]).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var relu(const Var& a);
Var exp(const Var& a);
// Natural log with the argument clamped to >= kLogFloor; no gradient below it.
inline constexpr double kLogFloor = 1e-12;
Var log(const Var& a);
// Elementwise power; the base must be strictly positive.
Var pow(const Var& a, double exponent);

Var softmax(const Var& a, std::size_t axis);
// Reductions keep the reduced axis with size 1.
Var sum(const Var& a, std::size_t axis);
Var mean(const Var& a, std::size_t axis);
// Reductions over every element; result shape [1].
Var sum_all(const Var& a);
Var mean_all(const Var& a);

Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var reshape(const Var& a, Shape shape);
Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end);

// Valid-padding multi-channel 1-D convolution (cross-correlation).
// input [batch, in_channels, length], weight [out_channels, in_channels, kernel]
// -> [batch, out_channels, (length - kernel) / stride + 1].
Var conv1d(const Var& input, const Var& weight, std::size_t stride);

// Populate gradients of everything reachable from a scalar root.
void backward(const Var& root);
void zero_grad(std::span<Var> leaves);

// When installed, relu records the smallest |pre-activation| it sees on this
// thread. Used by the gradient checker to detect evaluation points near kinks.
class KinkMonitor {
public:
    KinkMonitor();
    ~KinkMonitor();
    KinkMonitor(const KinkMonitor&) = delete;
    KinkMonitor& operator=(const KinkMonitor&) = delete;

    double min_abs_preactivation() const { return min_; }
    void record(double v);

private:
    double min_;
    KinkMonitor* previous_;
};

}  // namespace hybgnn
