#include "hybgnn/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace hybgnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

thread_local KinkMonitor* current_monitor = nullptr;

Var make_node(Op op, Tensor value, std::vector<std::shared_ptr<Node>> parents,
              std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->op = op;
    node->value = std::move(value);
    node->requires_grad = std::any_of(parents.begin(), parents.end(),
                                      [](const auto& p) { return p->requires_grad; });
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward_fn = std::move(backward_fn);
    }
    return Var(std::move(node));
}

// Grad buffer of a parent, allocated on first touch.
Tensor& grad_of(Node& n) {
    if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

struct AxisSplit {
    std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r;
    for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
    r.n = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
    return r;
}

void check_axis(const char* prim, const Shape& s, std::size_t axis) {
    if (axis >= s.size()) {
        throw ShapeError(prim, "axis " + std::to_string(axis) + " out of range for " + to_string(s));
    }
}

// Broadcast layout for a binary elementwise op on equal-rank operands.
struct Broadcast {
    Shape out;
    std::vector<std::size_t> stride_a, stride_b, stride_out;
    bool same = false;
};

Broadcast make_broadcast(const char* prim, const Shape& a, const Shape& b) {
    Broadcast bc;
    if (a == b) {
        bc.out = a;
        bc.same = true;
        return bc;
    }
    if (a.size() != b.size()) throw ShapeError(prim, a, b, "ranks differ");
    const std::size_t r = a.size();
    bc.out.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        if (a[i] == b[i] || b[i] == 1) {
            bc.out[i] = a[i];
        } else if (a[i] == 1) {
            bc.out[i] = b[i];
        } else {
            throw ShapeError(prim, a, b, "not broadcastable");
        }
    }
    bc.stride_a.assign(r, 0);
    bc.stride_b.assign(r, 0);
    bc.stride_out.assign(r, 0);
    std::size_t sa = 1, sb = 1, so = 1;
    for (std::size_t i = r; i-- > 0;) {
        bc.stride_a[i] = a[i] == 1 ? 0 : sa;
        bc.stride_b[i] = b[i] == 1 ? 0 : sb;
        bc.stride_out[i] = so;
        sa *= a[i];
        sb *= b[i];
        so *= bc.out[i];
    }
    return bc;
}

// Calls fn(out_offset, a_offset, b_offset, run_length, a_step, b_step) for
// every contiguous run along the last axis.
template <class Fn>
void for_each_run(const Broadcast& bc, Fn&& fn) {
    const std::size_t total = numel(bc.out);
    if (total == 0) return;
    if (bc.same) {
        fn(std::size_t{0}, std::size_t{0}, std::size_t{0}, total, std::size_t{1}, std::size_t{1});
        return;
    }
    const std::size_t r = bc.out.size();
    const std::size_t len = bc.out[r - 1];
    const std::size_t sa = bc.stride_a[r - 1], sb = bc.stride_b[r - 1];
    std::vector<std::size_t> idx(r, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t o = 0; o < total; o += len) {
        fn(o, ia, ib, len, sa, sb);
        for (std::size_t d = r - 1; d-- > 0;) {
            ++idx[d];
            ia += bc.stride_a[d];
            ib += bc.stride_b[d];
            if (idx[d] < bc.out[d]) break;
            ia -= bc.stride_a[d] * idx[d];
            ib -= bc.stride_b[d] * idx[d];
            idx[d] = 0;
        }
    }
}

// Inner loop specialised on the run steps so the common cases vectorise.
template <class Body>
inline void run_loop(std::size_t len, std::size_t sa, std::size_t sb, Body&& body) {
    if (sa == 1 && sb == 1) {
        for (std::size_t k = 0; k < len; ++k) body(k, k, k);
    } else if (sa == 1 && sb == 0) {
        for (std::size_t k = 0; k < len; ++k) body(k, k, std::size_t{0});
    } else if (sa == 0 && sb == 1) {
        for (std::size_t k = 0; k < len; ++k) body(k, std::size_t{0}, k);
    } else {
        for (std::size_t k = 0; k < len; ++k) body(k, k * sa, k * sb);
    }
}

template <class Fwd, class BwdA, class BwdB>
Var binary(Op op, const char* prim, const Var& a, const Var& b, Fwd fwd, BwdA da, BwdB db) {
    Broadcast bc = make_broadcast(prim, a.shape(), b.shape());
    Tensor out(bc.out);
    const double* va = a.value().data().data();
    const double* vb = b.value().data().data();
    double* vo = out.data().data();
    for_each_run(bc, [&](std::size_t o, std::size_t ia, std::size_t ib, std::size_t len, std::size_t sa, std::size_t sb) {
        run_loop(len, sa, sb, [&](std::size_t k, std::size_t ka, std::size_t kb) { vo[o + k] = fwd(va[ia + ka], vb[ib + kb]); });
    });
    return make_node(op, std::move(out), {a.node(), b.node()}, [bc, da, db](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double* g = self.grad.data().data();
        const double* xa = pa.value.data().data();
        const double* xb = pb.value.data().data();
        if (pa.requires_grad) {
            double* ga = grad_of(pa).data().data();
            for_each_run(bc, [&](std::size_t o, std::size_t ia, std::size_t ib, std::size_t len, std::size_t sa, std::size_t sb) {
                run_loop(len, sa, sb, [&](std::size_t k, std::size_t ka, std::size_t kb) {
                    ga[ia + ka] += da(g[o + k], xa[ia + ka], xb[ib + kb]);
                });
            });
        }
        if (pb.requires_grad) {
            double* gb = grad_of(pb).data().data();
            for_each_run(bc, [&](std::size_t o, std::size_t ia, std::size_t ib, std::size_t len, std::size_t sa, std::size_t sb) {
                run_loop(len, sa, sb, [&](std::size_t k, std::size_t ka, std::size_t kb) {
                    gb[ib + kb] += db(g[o + k], xa[ia + ka], xb[ib + kb]);
                });
            });
        }
    });
}

template <class Fwd, class Bwd>
Var unary(Op op, const Var& a, Fwd fwd, Bwd bwd) {
    const std::size_t n = a.value().size();
    const double* va = a.value().data().data();
    Tensor out(a.shape());
    double* vo = out.data().data();
    for (std::size_t i = 0; i < n; ++i) vo[i] = fwd(va[i]);
    return make_node(op, std::move(out), {a.node()}, [bwd, n](Node& self) {
        Node& p = *self.parents[0];
        double* gp = grad_of(p).data().data();
        const double* g = self.grad.data().data();
        const double* x = p.value.data().data();
        const double* y = self.value.data().data();
        for (std::size_t i = 0; i < n; ++i) gp[i] += bwd(g[i], x[i], y[i]);
    });
}

}  // namespace

std::string_view op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scale: return "scale";
        case Op::matmul: return "matmul";
        case Op::transpose: return "transpose";
        case Op::relu: return "relu";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::pow: return "pow";
        case Op::softmax: return "softmax";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::concat: return "concat";
        case Op::reshape: return "reshape";
        case Op::slice: return "slice";
        case Op::conv1d: return "conv1d";
    }
    return "?";
}

KinkMonitor::KinkMonitor() : min_(std::numeric_limits<double>::infinity()), previous_(current_monitor) {
    current_monitor = this;
}

KinkMonitor::~KinkMonitor() { current_monitor = previous_; }

void KinkMonitor::record(double v) { min_ = std::min(min_, std::abs(v)); }

Var parameter(Tensor value) {
    auto node = std::make_shared<Node>();
    node->grad = Tensor(value.shape());
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var add(const Var& a, const Var& b) {
    return binary(
        Op::add, "add", a, b, [](double x, double y) { return x + y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Var sub(const Var& a, const Var& b) {
    return binary(
        Op::sub, "sub", a, b, [](double x, double y) { return x - y; },
        [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Var mul(const Var& a, const Var& b) {
    return binary(
        Op::mul, "mul", a, b, [](double x, double y) { return x * y; },
        [](double g, double, double y) { return g * y; }, [](double g, double x, double) { return g * x; });
}

Var scale(const Var& a, double s) {
    return unary(
        Op::scale, a, [s](double x) { return s * x; }, [s](double g, double, double) { return s * g; });
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0)) throw ShapeError("matmul", va.shape(), vb.shape());
    const std::size_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
    Tensor out({m, n});
    MapMat(out.data().data(), m, n).noalias() =
        ConstMapMat(va.data().data(), m, k) * ConstMapMat(vb.data().data(), k, n);
    return make_node(Op::matmul, std::move(out), {a.node(), b.node()}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        ConstMapMat g(self.grad.data().data(), m, n);
        if (pa.requires_grad) {
            MapMat(grad_of(pa).data().data(), m, k).noalias() +=
                g * ConstMapMat(pb.value.data().data(), k, n).transpose();
        }
        if (pb.requires_grad) {
            MapMat(grad_of(pb).data().data(), k, n).noalias() +=
                ConstMapMat(pa.value.data().data(), m, k).transpose() * g;
        }
    });
}

Var transpose(const Var& a) {
    const Tensor& va = a.value();
    if (va.rank() != 2) throw ShapeError("transpose", "expected rank 2, got " + to_string(va.shape()));
    const std::size_t m = va.dim(0), n = va.dim(1);
    Tensor out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out(j, i) = va(i, j);
    return make_node(Op::transpose, std::move(out), {a.node()}, [m, n](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) gp(i, j) += self.grad(j, i);
    });
}

Var relu(const Var& a) {
    if (current_monitor) {
        for (double v : a.value().data()) current_monitor->record(v);
    }
    return unary(
        Op::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double g, double x, double) { return x > 0.0 ? g : 0.0; });
}

Var exp(const Var& a) {
    return unary(
        Op::exp, a, [](double x) { return std::exp(x); }, [](double g, double, double y) { return g * y; });
}

Var log(const Var& a) {
    return unary(
        Op::log, a, [](double x) { return std::log(std::max(x, kLogFloor)); },
        [](double g, double x, double) { return x > kLogFloor ? g / x : 0.0; });
}

Var pow(const Var& a, double exponent) {
    for (double v : a.value().data()) {
        if (!(v > 0.0)) throw ShapeError("pow", "base must be strictly positive");
    }
    return unary(
        Op::pow, a, [exponent](double x) { return std::pow(x, exponent); },
        [exponent](double g, double x, double y) { return g * exponent * y / x; });
}

Var softmax(const Var& a, std::size_t axis) {
    const Tensor& va = a.value();
    check_axis("softmax", va.shape(), axis);
    const AxisSplit s = split_at(va.shape(), axis);
    Tensor out(va.shape());
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            const std::size_t base = o * s.n * s.inner + i;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < s.n; ++k) mx = std::max(mx, va[base + k * s.inner]);
            double z = 0.0;
            for (std::size_t k = 0; k < s.n; ++k) {
                const double e = std::exp(va[base + k * s.inner] - mx);
                out[base + k * s.inner] = e;
                z += e;
            }
            for (std::size_t k = 0; k < s.n; ++k) out[base + k * s.inner] /= z;
        }
    }
    return make_node(Op::softmax, std::move(out), {a.node()}, [s](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        const Tensor& y = self.value;
        const Tensor& g = self.grad;
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                const std::size_t base = o * s.n * s.inner + i;
                double dot = 0.0;
                for (std::size_t k = 0; k < s.n; ++k) dot += g[base + k * s.inner] * y[base + k * s.inner];
                for (std::size_t k = 0; k < s.n; ++k) {
                    const std::size_t idx = base + k * s.inner;
                    gp[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

namespace {

Var reduce_axis(Op op, const Var& a, std::size_t axis, double factor) {
    const Tensor& va = a.value();
    check_axis(op == Op::sum ? "sum" : "mean", va.shape(), axis);
    const AxisSplit s = split_at(va.shape(), axis);
    Shape out_shape = va.shape();
    out_shape[axis] = 1;
    Tensor out(out_shape);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.n; ++k)
            for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += va[(o * s.n + k) * s.inner + i];
    for (double& v : out.data()) v *= factor;
    return make_node(op, std::move(out), {a.node()}, [s, factor](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t k = 0; k < s.n; ++k)
                for (std::size_t i = 0; i < s.inner; ++i)
                    gp[(o * s.n + k) * s.inner + i] += factor * self.grad[o * s.inner + i];
    });
}

Var reduce_all(Op op, const Var& a, bool average) {
    const Tensor& va = a.value();
    double total = 0.0;
    for (double v : va.data()) total += v;
    const double factor = average ? 1.0 / static_cast<double>(std::max<std::size_t>(va.size(), 1)) : 1.0;
    return make_node(op, Tensor::scalar(total * factor), {a.node()}, [factor](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        const double g = self.grad[0] * factor;
        for (double& v : gp.data()) v += g;
    });
}

}  // namespace

Var sum(const Var& a, std::size_t axis) { return reduce_axis(Op::sum, a, axis, 1.0); }

Var mean(const Var& a, std::size_t axis) {
    check_axis("mean", a.shape(), axis);
    return reduce_axis(Op::mean, a, axis, 1.0 / static_cast<double>(a.shape()[axis]));
}

Var sum_all(const Var& a) { return reduce_all(Op::sum, a, false); }
Var mean_all(const Var& a) { return reduce_all(Op::mean, a, true); }

Var concat(std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat", "no inputs");
    const Shape& first = parts[0].shape();
    check_axis("concat", first, axis);
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> widths;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
        if (!ok) throw ShapeError("concat", first, s, "axis " + std::to_string(axis));
        out_shape[axis] += s[axis];
        widths.push_back(s[axis]);
    }
    const AxisSplit so = split_at(out_shape, axis);
    Tensor out(out_shape);
    std::vector<std::shared_ptr<Node>> parents;
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const Tensor& v = parts[p].value();
        const std::size_t w = widths[p];
        for (std::size_t o = 0; o < so.outer; ++o)
            std::copy_n(v.data().begin() + o * w * so.inner, w * so.inner,
                        out.data().begin() + (o * so.n + offset) * so.inner);
        offset += w;
        parents.push_back(parts[p].node());
    }
    return make_node(Op::concat, std::move(out), std::move(parents), [so, widths](Node& self) {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < widths.size(); ++p) {
            Node& parent = *self.parents[p];
            const std::size_t w = widths[p];
            if (parent.requires_grad) {
                Tensor& gp = grad_of(parent);
                for (std::size_t o = 0; o < so.outer; ++o)
                    for (std::size_t j = 0; j < w * so.inner; ++j)
                        gp[o * w * so.inner + j] += self.grad[(o * so.n + offset) * so.inner + j];
            }
            offset += w;
        }
    });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
    return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var reshape(const Var& a, Shape shape) {
    if (numel(shape) != a.value().size()) throw ShapeError("reshape", a.shape(), shape);
    Tensor out(std::move(shape), a.value().storage());
    return make_node(Op::reshape, std::move(out), {a.node()}, [](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i];
    });
}

Var slice(const Var& a, std::size_t axis, std::size_t begin, std::size_t end) {
    const Tensor& va = a.value();
    check_axis("slice", va.shape(), axis);
    if (begin >= end || end > va.shape()[axis]) {
        throw ShapeError("slice", "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                      ") invalid for axis " + std::to_string(axis) + " of " + to_string(va.shape()));
    }
    const AxisSplit s = split_at(va.shape(), axis);
    const std::size_t w = end - begin;
    Shape out_shape = va.shape();
    out_shape[axis] = w;
    Tensor out(out_shape);
    for (std::size_t o = 0; o < s.outer; ++o)
        std::copy_n(va.data().begin() + (o * s.n + begin) * s.inner, w * s.inner,
                    out.data().begin() + o * w * s.inner);
    return make_node(Op::slice, std::move(out), {a.node()}, [s, w, begin](Node& self) {
        Tensor& gp = grad_of(*self.parents[0]);
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t j = 0; j < w * s.inner; ++j)
                gp[(o * s.n + begin) * s.inner + j] += self.grad[o * w * s.inner + j];
    });
}

Var conv1d(const Var& input, const Var& weight, std::size_t stride) {
    const Tensor& x = input.value();
    const Tensor& w = weight.value();
    if (x.rank() != 3 || w.rank() != 3 || x.dim(1) != w.dim(1)) {
        throw ShapeError("conv1d", x.shape(), w.shape(), "expected [B, Cin, T] and [Cout, Cin, K]");
    }
    if (stride == 0) throw ShapeError("conv1d", "stride must be >= 1");
    const std::size_t batch = x.dim(0), cin = x.dim(1), len = x.dim(2);
    const std::size_t cout = w.dim(0), k = w.dim(2);
    if (len < k) throw ShapeError("conv1d", x.shape(), w.shape(), "signal shorter than kernel");
    const std::size_t tout = (len - k) / stride + 1;
    const std::size_t rows = cin * k, cols_n = batch * tout;

    // im2col: cols[c*k + j, b*tout + t] = x[b, c, t*stride + j]
    Tensor cols({rows, cols_n});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < cin; ++c) {
            const double* src = x.data().data() + (b * cin + c) * len;
            for (std::size_t j = 0; j < k; ++j) {
                double* dst = cols.data().data() + (c * k + j) * cols_n + b * tout;
                for (std::size_t t = 0; t < tout; ++t) dst[t] = src[t * stride + j];
            }
        }

    RowMat prod = ConstMapMat(w.data().data(), cout, rows) * ConstMapMat(cols.data().data(), rows, cols_n);
    Tensor out({batch, cout, tout});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < cout; ++o)
            std::copy_n(prod.data() + o * cols_n + b * tout, tout, out.data().data() + (b * cout + o) * tout);

    return make_node(Op::conv1d, std::move(out), {input.node(), weight.node()},
                     [cols = std::move(cols), batch, cin, len, cout, k, tout, stride](Node& self) {
                         const std::size_t rows = cin * k, cols_n = batch * tout;
                         RowMat g(cout, cols_n);
                         for (std::size_t b = 0; b < batch; ++b)
                             for (std::size_t o = 0; o < cout; ++o)
                                 std::copy_n(self.grad.data().data() + (b * cout + o) * tout, tout,
                                             g.data() + o * cols_n + b * tout);
                         Node& px = *self.parents[0];
                         Node& pw = *self.parents[1];
                         if (pw.requires_grad) {
                             MapMat(grad_of(pw).data().data(), cout, rows).noalias() +=
                                 g * ConstMapMat(cols.data().data(), rows, cols_n).transpose();
                         }
                         if (px.requires_grad) {
                             RowMat gcols = ConstMapMat(pw.value.data().data(), cout, rows).transpose() * g;
                             Tensor& gx = grad_of(px);
                             for (std::size_t b = 0; b < batch; ++b)
                                 for (std::size_t c = 0; c < cin; ++c) {
                                     double* dst = gx.data().data() + (b * cin + c) * len;
                                     for (std::size_t j = 0; j < k; ++j) {
                                         const double* src = gcols.data() + (c * k + j) * cols_n + b * tout;
                                         for (std::size_t t = 0; t < tout; ++t) dst[t * stride + j] += src[t];
                                     }
                                 }
                         }
                     });
}

void backward(const Var& root) {
    if (root.value().size() != 1) {
        throw ShapeError("backward", "root must be scalar, got " + to_string(root.shape()));
    }
    if (!root.requires_grad()) return;

    // Iterative post-order DFS -> topological order (parents before children).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    for (Node* n : order) {
        if (n->op != Op::leaf) n->grad = Tensor(n->value.shape());
    }
    grad_of(*root.node())[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

void zero_grad(std::span<Var> leaves) {
    for (auto& v : leaves) {
        Tensor& g = v.mutable_grad();
        if (g.shape() != v.shape()) g = Tensor(v.shape());
        else g.fill(0.0);
    }
}

}  // namespace hybgnn
