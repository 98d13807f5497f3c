#include "hybgnn/autodiff.hpp"
#include "hybgnn/gradcheck.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hybgnn;
using oracle::random_tensor;

namespace {

// Scalar probe: sum(f(x) * c) for a fixed random c, so every output entry
// contributes a distinct weight to the gradient.
struct Probe {
    Tensor weights;
    double operator()(const Tensor& y) const {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * weights[i];
        return s;
    }
};

// Checks d/dx_k of sum(op(x_0..x_n) * c) against central differences for every input.
void expect_matches_fd(const std::function<Var(const std::vector<Var>&)>& op, const std::vector<Tensor>& inputs,
                       Rng& rng, double tol = 1e-5) {
    std::vector<Var> leaves;
    for (const auto& t : inputs) leaves.push_back(parameter(t));
    Var y = op(leaves);
    const Tensor weights = random_tensor(y.shape(), rng);
    backward(sum_all(mul(y, constant(weights))));
    const Probe probe{weights};
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        auto f = [&](const Tensor& xk) {
            std::vector<Var> vs;
            for (std::size_t j = 0; j < inputs.size(); ++j) vs.push_back(constant(j == k ? xk : inputs[j]));
            return probe(op(vs).value());
        };
        const Tensor numeric = oracle::numeric_grad(f, inputs[k]);
        EXPECT_LT(oracle::relative_error(leaves[k].grad(), numeric), tol) << "input " << k;
    }
}

std::size_t dim(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

}  // namespace

TEST(Primitives, ScalarAdd) {
    EXPECT_EQ(add(constant(Tensor::scalar(2)), constant(Tensor::scalar(3))).value().item(), 5.0);
}

TEST(Primitives, IdentityMatmul) {
    Rng rng(1);
    for (std::size_t k = 1; k <= 5; ++k) {
        const Tensor m = random_tensor({3, k}, rng);
        EXPECT_EQ(matmul(constant(Tensor::identity(3)), constant(m)).value(), m);
    }
}

TEST(Primitives, SoftmaxOfEqualScores) {
    const Tensor p = softmax(constant(Tensor::vector({0, 0})), 0).value();
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Primitives, ShapeErrorNamesPrimitiveAndShapes) {
    try {
        matmul(constant(Tensor({2, 3})), constant(Tensor({4, 5})));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("matmul"), std::string::npos);
        EXPECT_NE(msg.find("[2, 3]"), std::string::npos);
        EXPECT_NE(msg.find("[4, 5]"), std::string::npos);
    }
    EXPECT_THROW(add(constant(Tensor({2, 3})), constant(Tensor({3, 2}))), ShapeError);
    EXPECT_THROW(concat({constant(Tensor({2, 3})), constant(Tensor({3, 3}))}, 1), ShapeError);
    EXPECT_THROW(slice(constant(Tensor({2, 3})), 1, 2, 4), ShapeError);
    EXPECT_THROW(reshape(constant(Tensor({2, 3})), {4}), ShapeError);
    EXPECT_THROW(softmax(constant(Tensor({2, 3})), 2), ShapeError);
    EXPECT_THROW(conv1d(constant(Tensor({1, 1, 3})), constant(Tensor({1, 1, 4})), 1), ShapeError);
}

TEST(Primitives, LogClampsAtFloor) {
    Var x = parameter(Tensor::vector({0.0, 1.0}));
    Var y = log(x);
    EXPECT_DOUBLE_EQ(y.value()[0], std::log(kLogFloor));
    EXPECT_DOUBLE_EQ(y.value()[1], 0.0);
    backward(sum_all(y));
    EXPECT_EQ(x.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 1.0);
}

TEST(Primitives, BiasBroadcastMatchesLoops) {
    Rng rng(2);
    const Tensor x = random_tensor({3, 4, 5}, rng);
    const Tensor b = random_tensor({1, 4, 1}, rng);
    const Tensor y = add(constant(x), constant(b)).value();
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t c = 0; c < 4; ++c)
            for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(y[(i * 4 + c) * 5 + t], x[(i * 4 + c) * 5 + t] + b[c]);
}

TEST(Primitives, Conv1dMatchesLoops) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = dim(rng, 1, 4), stride = dim(rng, 1, 3);
        const Tensor x = random_tensor({dim(rng, 1, 3), dim(rng, 1, 3), k + dim(rng, 0, 9)}, rng);
        const Tensor w = random_tensor({dim(rng, 1, 3), x.dim(1), k}, rng);
        EXPECT_LT(oracle::max_diff(conv1d(constant(x), constant(w), stride).value(), oracle::conv(x, w, stride)), 1e-12);
    }
}

TEST(Backward, PowerRule) {
    Var x = parameter(Tensor::scalar(3));
    backward(mul(x, x));
    EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Backward, SoftmaxSumHasZeroGradient) {
    Rng rng(4);
    Var z = parameter(random_tensor({6}, rng));
    backward(sum_all(softmax(z, 0)));
    for (double g : z.grad().data()) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(Backward, DotProduct) {
    Var x = parameter(Tensor::vector({0.3, -0.7}));
    backward(sum_all(mul(x, constant(Tensor::vector({1, 2})))));
    EXPECT_DOUBLE_EQ(x.grad()[0], 1.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 2.0);
}

TEST(Backward, RequiresScalarRoot) {
    Var x = parameter(Tensor({2}));
    EXPECT_THROW(backward(x), ShapeError);
}

TEST(Backward, AccumulatesUntilZeroGrad) {
    Var x = parameter(Tensor::scalar(3));
    Var y = mul(x, x);
    backward(y);
    backward(y);
    EXPECT_DOUBLE_EQ(x.grad().item(), 12.0);
    std::vector<Var> leaves{x};
    zero_grad(leaves);
    EXPECT_DOUBLE_EQ(x.grad().item(), 0.0);
    backward(y);
    EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Backward, SharedSubexpression) {
    // y = (x + x) * x, dy/dx = 4x
    Var x = parameter(Tensor::scalar(1.5));
    Var s = add(x, x);
    backward(mul(s, x));
    EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Backward, ConstantsReceiveNoGraph) {
    Var c = constant(Tensor::scalar(2));
    Var y = mul(c, c);
    EXPECT_FALSE(y.requires_grad());
    EXPECT_NO_THROW(backward(y));
}

// Finite-difference property tests, 100 random shapes and seeds per primitive.

class PrimitiveGrad : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGrad, Elementwise) {
    Rng rng(1000 + GetParam());
    const Shape s{dim(rng, 1, 4), dim(rng, 1, 4)};
    // Broadcast partner: each axis kept or collapsed to 1.
    const Shape sb{rng.below(2) ? s[0] : 1, rng.below(2) ? s[1] : 1};
    const Tensor a = random_tensor(s, rng), b = random_tensor(sb, rng);
    expect_matches_fd([](const auto& v) { return add(v[0], v[1]); }, {a, b}, rng);
    expect_matches_fd([](const auto& v) { return sub(v[0], v[1]); }, {a, b}, rng);
    expect_matches_fd([](const auto& v) { return mul(v[0], v[1]); }, {a, b}, rng);
    expect_matches_fd([](const auto& v) { return mul(v[1], v[0]); }, {a, b}, rng);
    expect_matches_fd([](const auto& v) { return scale(v[0], -1.7); }, {a}, rng);
}

TEST_P(PrimitiveGrad, Matmul) {
    Rng rng(2000 + GetParam());
    const std::size_t n = dim(rng, 1, 5), k = dim(rng, 1, 5), m = dim(rng, 1, 5);
    expect_matches_fd([](const auto& v) { return matmul(v[0], v[1]); },
                      {random_tensor({n, k}, rng), random_tensor({k, m}, rng)}, rng);
    expect_matches_fd([](const auto& v) { return transpose(v[0]); }, {random_tensor({n, m}, rng)}, rng);
}

TEST_P(PrimitiveGrad, Nonlinear) {
    Rng rng(3000 + GetParam());
    const Shape s{dim(rng, 1, 4), dim(rng, 1, 4)};
    // Keep relu inputs away from the kink.
    Tensor r = random_tensor(s, rng);
    for (auto& v : r.data()) v = (v < 0 ? -0.1 : 0.1) + v;
    expect_matches_fd([](const auto& v) { return relu(v[0]); }, {r}, rng);
    expect_matches_fd([](const auto& v) { return exp(v[0]); }, {random_tensor(s, rng)}, rng);
    expect_matches_fd([](const auto& v) { return log(v[0]); }, {random_tensor(s, rng, 0.2, 2.0)}, rng);
    expect_matches_fd([](const auto& v) { return pow(v[0], -0.5); }, {random_tensor(s, rng, 0.2, 2.0)}, rng);
    expect_matches_fd([](const auto& v) { return pow(v[0], 2.5); }, {random_tensor(s, rng, 0.2, 2.0)}, rng);
}

TEST_P(PrimitiveGrad, SoftmaxAndReductions) {
    Rng rng(4000 + GetParam());
    const Shape s{dim(rng, 1, 4), dim(rng, 1, 4), dim(rng, 1, 3)};
    const std::size_t axis = rng.below(3);
    const Tensor x = random_tensor(s, rng, -3, 3);
    expect_matches_fd([axis](const auto& v) { return softmax(v[0], axis); }, {x}, rng);
    expect_matches_fd([axis](const auto& v) { return sum(v[0], axis); }, {x}, rng);
    expect_matches_fd([axis](const auto& v) { return mean(v[0], axis); }, {x}, rng);
    expect_matches_fd([](const auto& v) { return sum_all(v[0]); }, {x}, rng);
    expect_matches_fd([](const auto& v) { return mean_all(v[0]); }, {x}, rng);
}

TEST_P(PrimitiveGrad, Structural) {
    Rng rng(5000 + GetParam());
    const std::size_t axis = rng.below(2);
    Shape s1{dim(rng, 1, 4), dim(rng, 1, 4)}, s2 = s1;
    s2[axis] = dim(rng, 1, 4);
    const Tensor a = random_tensor(s1, rng), b = random_tensor(s2, rng);
    expect_matches_fd([axis](const auto& v) { return concat({v[0], v[1]}, axis); }, {a, b}, rng);
    const std::size_t begin = rng.below(s1[axis]);
    const std::size_t end = begin + 1 + rng.below(s1[axis] - begin);
    expect_matches_fd([=](const auto& v) { return slice(v[0], axis, begin, end); }, {a}, rng);
    expect_matches_fd([](const auto& v) { return reshape(v[0], {v[0].value().size()}); }, {a}, rng);
}

TEST_P(PrimitiveGrad, Conv1d) {
    Rng rng(6000 + GetParam());
    const std::size_t k = dim(rng, 1, 4), stride = dim(rng, 1, 3);
    const Tensor x = random_tensor({dim(rng, 1, 3), dim(rng, 1, 3), k + dim(rng, 0, 7)}, rng);
    const Tensor w = random_tensor({dim(rng, 1, 3), x.dim(1), k}, rng);
    expect_matches_fd([stride](const auto& v) { return conv1d(v[0], v[1], stride); }, {x, w}, rng);
}

INSTANTIATE_TEST_SUITE_P(Seeds, PrimitiveGrad, ::testing::Range(0, 100));

TEST(Properties, SoftmaxIsADistribution) {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Shape s{dim(rng, 1, 5), dim(rng, 1, 5)};
        const std::size_t axis = rng.below(2);
        const Tensor y = softmax(constant(random_tensor(s, rng, -20, 20)), axis).value();
        const std::size_t rows = s[0], cols = s[1];
        for (std::size_t o = 0; o < (axis == 0 ? cols : rows); ++o) {
            double total = 0.0;
            for (std::size_t i = 0; i < (axis == 0 ? rows : cols); ++i) {
                const double v = axis == 0 ? y(i, o) : y(o, i);
                EXPECT_GT(v, 0.0);
                EXPECT_LE(v, 1.0);
                total += v;
            }
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(Properties, ConcatThenSliceIsExact) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t axis = rng.below(3);
        Shape s1{dim(rng, 1, 4), dim(rng, 1, 4), dim(rng, 1, 4)}, s2 = s1;
        s2[axis] = dim(rng, 1, 4);
        const Tensor a = random_tensor(s1, rng), b = random_tensor(s2, rng);
        Var c = concat({constant(a), constant(b)}, axis);
        EXPECT_EQ(slice(c, axis, 0, s1[axis]).value(), a);
        EXPECT_EQ(slice(c, axis, s1[axis], s1[axis] + s2[axis]).value(), b);
    }
}

TEST(Properties, TransposeOfProduct) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor a = random_tensor({dim(rng, 1, 6), dim(rng, 1, 6)}, rng);
        const Tensor b = random_tensor({a.dim(1), dim(rng, 1, 6)}, rng);
        const Tensor lhs = transpose(matmul(constant(a), constant(b))).value();
        const Tensor rhs = matmul(transpose(constant(b)), transpose(constant(a))).value();
        EXPECT_LT(oracle::max_diff(lhs, rhs), 1e-12);
        EXPECT_LT(oracle::max_diff(matmul(constant(a), constant(b)).value(), oracle::mm(a, b)), 1e-12);
    }
}

TEST(GradientCheck, TwoLayerChain) {
    Rng rng(10);
    const ScalarFn f = [](std::span<const Var> p) {
        return sum_all(relu(matmul(relu(matmul(p[0], p[1])), p[2])));
    };
    auto sample = [&rng](int) {
        return std::vector<Tensor>{random_tensor({3, 3}, rng), random_tensor({3, 3}, rng), random_tensor({3, 3}, rng)};
    };
    const GradCheckReport r = gradient_check(f, sample, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-6);
    EXPECT_GE(r.min_kink_distance, 1e-4);
}

TEST(GradientCheck, AffineIsExact) {
    const Tensor c = Tensor::vector({0.5, -2.0, 3.0});
    const ScalarFn f = [c](std::span<const Var> p) { return sum_all(mul(p[0], constant(c))); };
    const std::vector<Tensor> x{Tensor::vector({1.0, 2.0, -1.0})};
    EXPECT_LT(gradient_check(f, x, 1e-5).max_relative_error, 1e-9);
}

TEST(GradientCheck, RejectsBadEps) {
    const ScalarFn f = [](std::span<const Var> p) { return sum_all(p[0]); };
    const std::vector<Tensor> x{Tensor::vector({1.0})};
    EXPECT_THROW(gradient_check(f, x, 0.0), std::invalid_argument);
    EXPECT_THROW(gradient_check(f, x, 0.1), std::invalid_argument);
}

TEST(GradientCheck, DetectsWrongBackward) {
    // x^2 with a backward rule that forgets the factor 2.
    const ScalarFn f = [](std::span<const Var> p) {
        auto node = std::make_shared<Node>();
        node->op = Op::mul;
        node->value = p[0].value();
        for (auto& v : node->value.data()) v *= v;
        node->requires_grad = true;
        node->parents = {p[0].node()};
        node->backward_fn = [](Node& self) {
            Node& x = *self.parents[0];
            for (std::size_t i = 0; i < x.grad.size(); ++i) x.grad[i] += self.grad[i] * x.value[i];
        };
        return sum_all(Var(node));
    };
    const std::vector<Tensor> x{Tensor::vector({1.0, 2.0})};
    EXPECT_NEAR(gradient_check(f, x, 1e-5).max_relative_error, 0.5, 1e-6);
}
