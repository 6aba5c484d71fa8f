#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mtdnn/error.hpp"
#include "mtdnn/rng.hpp"

namespace mtdnn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;     // same length as data iff requires_grad
    std::uint64_t graph_id = 0;   // 0 = leaf (not produced by any graph)
    std::size_t node_id = 0;      // creation index within the producing graph
};

// Value-semantic handle to a shared dense array of doubles. Scalars are
// shape {1}. A tensor with requires_grad set carries a same-shape gradient
// buffer that graph backward passes accumulate into.
class Tensor {
public:
    Tensor() : impl_(std::make_shared<TensorImpl>()) {
        impl_->shape = {1};
        impl_->data = {0.0};
    }
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        return filled(std::move(shape), 0.0, requires_grad);
    }

    static Tensor filled(Shape shape, double value, bool requires_grad = false) {
        auto impl = std::make_shared<TensorImpl>();
        impl->data.assign(shape_numel(shape), value);
        impl->shape = std::move(shape);
        Tensor t(impl);
        t.set_requires_grad(requires_grad);
        return t;
    }

    static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
        if (shape_numel(shape) != data.size()) {
            throw DimensionError("tensor: shape " + shape_str(shape) + " does not hold " +
                                 std::to_string(data.size()) + " values");
        }
        auto impl = std::make_shared<TensorImpl>();
        impl->shape = std::move(shape);
        impl->data = std::move(data);
        Tensor t(impl);
        t.set_requires_grad(requires_grad);
        return t;
    }

    static Tensor scalar(double value, bool requires_grad = false) {
        return from({1}, {value}, requires_grad);
    }

    static Tensor randn(Shape shape, Rng& rng, double stddev, bool requires_grad = false) {
        Tensor t = zeros(std::move(shape), requires_grad);
        for (double& v : t.impl_->data) v = rng.normal(stddev);
        return t;
    }

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t numel() const { return impl_->data.size(); }
    std::size_t extent(std::size_t axis) const { return impl_->shape.at(axis); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }

    double& at(std::size_t i) { return impl_->data.at(i); }
    double at(std::size_t i) const { return impl_->data.at(i); }
    double& at(std::size_t i, std::size_t j) {
        return impl_->data.at(i * impl_->shape.at(1) + j);
    }
    double at(std::size_t i, std::size_t j) const {
        return impl_->data.at(i * impl_->shape.at(1) + j);
    }

    // Scalar value; throws unless the tensor holds exactly one element.
    double value() const {
        if (numel() != 1) {
            throw ContractError("tensor: value() on non-scalar " + shape_str(shape()));
        }
        return impl_->data[0];
    }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) {
        impl_->requires_grad = rg;
        if (rg) {
            impl_->grad.assign(impl_->data.size(), 0.0);
        } else {
            impl_->grad.clear();
        }
    }

    std::span<double> grad() {
        if (!impl_->requires_grad) {
            throw ContractError("tensor: grad() without requires_grad");
        }
        return impl_->grad;
    }
    std::span<const double> grad() const {
        if (!impl_->requires_grad) {
            throw ContractError("tensor: grad() without requires_grad");
        }
        return impl_->grad;
    }

    void zero_grad() {
        if (impl_->requires_grad) impl_->grad.assign(impl_->data.size(), 0.0);
    }

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

namespace detail {

inline void check_finite(const std::vector<double>& v, const char* op, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string(op) + ": non-finite " + what + " detected");
        }
    }
}

}  // namespace detail

// Tape of operation records. Creation order is the topological order;
// backward() replays the records in strict reverse order exactly once.
// A graph is confined to one thread.
class Graph {
public:
    Graph() : id_(next_id()) {}
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    std::uint64_t id() const { return id_; }
    std::size_t size() const { return records_.size(); }

    // Registers an op. The backward callable accumulates partials from
    // output->grad into the inputs' grad buffers.
    void record(const char* op, std::vector<std::shared_ptr<TensorImpl>> inputs,
                const std::shared_ptr<TensorImpl>& output, std::function<void()> backward) {
        output->graph_id = id_;
        output->node_id = records_.size();
        records_.push_back(Record{op, std::move(inputs), output, std::move(backward)});
    }

    // Inputs must be leaves or tensors produced on this graph.
    void check_input(const char* op, const Tensor& t) const {
        const auto& impl = *t.impl();
        if (impl.graph_id != 0 && impl.graph_id != id_) {
            throw GraphError(std::string(op) + ": input was produced on a different graph");
        }
    }

    // Seeds d(loss)/d(loss) = 1 and accumulates d(loss)/d(leaf) into every
    // requires_grad leaf. Gradients of intermediate (graph-produced) tensors
    // are reset per call, so repeated calls accumulate leaf gradients only.
    void backward(const Tensor& loss) {
        if (loss.numel() != 1) {
            throw ContractError("backward: loss must be scalar, got " + shape_str(loss.shape()));
        }
        auto& li = *loss.impl();
        if (!std::isfinite(li.data[0])) {
            throw NumericError("backward: loss is not finite");
        }
        if (li.graph_id == 0) {
            // Constant or leaf loss: d(loss)/d(loss) contributes, nothing else.
            if (li.requires_grad) li.grad[0] += 1.0;
            return;
        }
        if (li.graph_id != id_) {
            throw GraphError("backward: loss was produced on a different graph");
        }
        for (auto& rec : records_) {
            rec.output->grad.assign(rec.output->data.size(), 0.0);
        }
        li.grad[0] = 1.0;
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            it->backward();
            for (const auto& in : it->inputs) {
                if (in->requires_grad) detail::check_finite(in->grad, it->op, "gradient");
            }
        }
    }

private:
    struct Record {
        const char* op;
        std::vector<std::shared_ptr<TensorImpl>> inputs;
        std::shared_ptr<TensorImpl> output;
        std::function<void()> backward;
    };

    static std::uint64_t next_id() {
        static std::uint64_t counter = 0;
        return ++counter;
    }

    std::uint64_t id_;
    std::vector<Record> records_;
};

namespace detail {

inline Tensor make_op_output(Graph& g, const char* op, Shape shape,
                             std::initializer_list<const Tensor*> inputs) {
    bool rg = false;
    for (const Tensor* t : inputs) {
        g.check_input(op, *t);
        rg = rg || t->requires_grad();
    }
    Tensor out = Tensor::zeros(std::move(shape), rg);
    return out;
}

inline void finish_op(Graph& g, const char* op, std::initializer_list<const Tensor*> inputs,
                      const Tensor& out, std::function<void()> backward) {
    check_finite(out.impl()->data, op, "value");
    if (out.requires_grad()) {
        std::vector<std::shared_ptr<TensorImpl>> ins;
        ins.reserve(inputs.size());
        for (const Tensor* t : inputs) ins.push_back(t->impl());
        g.record(op, std::move(ins), out.impl(), std::move(backward));
    }
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
}

inline void require_rank(const char* op, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got " + shape_str(t.shape()));
    }
}

// Decomposes a shape around `axis` into outer * extent * inner.
struct AxisSplit {
    std::size_t outer, extent, inner;
};

inline AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
    if (axis >= shape.size()) {
        throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                             " out of range for " + shape_str(shape));
    }
    AxisSplit s{1, shape[axis], 1};
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

inline Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
    detail::require_same_shape("add", a, b);
    Tensor out = detail::make_op_output(g, "add", a.shape(), {&a, &b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = a.at(i) + b.at(i);
    detail::finish_op(g, "add", {&a, &b}, out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            if (ai->requires_grad) ai->grad[i] += oi->grad[i];
            if (bi->requires_grad) bi->grad[i] += oi->grad[i];
        }
    });
    return out;
}

inline Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
    detail::require_same_shape("sub", a, b);
    Tensor out = detail::make_op_output(g, "sub", a.shape(), {&a, &b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = a.at(i) - b.at(i);
    detail::finish_op(g, "sub", {&a, &b}, out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            if (ai->requires_grad) ai->grad[i] += oi->grad[i];
            if (bi->requires_grad) bi->grad[i] -= oi->grad[i];
        }
    });
    return out;
}

inline Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
    detail::require_same_shape("mul", a, b);
    Tensor out = detail::make_op_output(g, "mul", a.shape(), {&a, &b});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = a.at(i) * b.at(i);
    detail::finish_op(g, "mul", {&a, &b}, out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            if (ai->requires_grad) ai->grad[i] += oi->grad[i] * bi->data[i];
            if (bi->requires_grad) bi->grad[i] += oi->grad[i] * ai->data[i];
        }
    });
    return out;
}

inline Tensor scale(Graph& g, const Tensor& a, double c) {
    Tensor out = detail::make_op_output(g, "scale", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = c * a.at(i);
    detail::finish_op(g, "scale", {&a}, out, [ai = a.impl(), oi = out.impl(), c] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) ai->grad[i] += c * oi->grad[i];
    });
    return out;
}

// |x|, with the subgradient at 0 fixed to 0.
inline Tensor abs(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "abs", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = std::fabs(a.at(i));
    detail::finish_op(g, "abs", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            const double x = ai->data[i];
            const double s = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
            ai->grad[i] += s * oi->grad[i];
        }
    });
    return out;
}

// 1 - x, elementwise.
inline Tensor one_minus(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "one_minus", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = 1.0 - a.at(i);
    detail::finish_op(g, "one_minus", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) ai->grad[i] -= oi->grad[i];
    });
    return out;
}

inline Tensor sigmoid(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "sigmoid", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double x = a.at(i);
        out.at(i) = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                             : std::exp(x) / (1.0 + std::exp(x));
    }
    detail::finish_op(g, "sigmoid", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            const double y = oi->data[i];
            ai->grad[i] += oi->grad[i] * y * (1.0 - y);
        }
    });
    return out;
}

inline Tensor tanh(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "tanh", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = std::tanh(a.at(i));
    detail::finish_op(g, "tanh", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            const double y = oi->data[i];
            ai->grad[i] += oi->grad[i] * (1.0 - y * y);
        }
    });
    return out;
}

// Exact (erf-based) GELU.
inline Tensor gelu(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "gelu", a.shape(), {&a});
    const double inv_sqrt2 = 0.70710678118654752440;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double x = a.at(i);
        out.at(i) = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
    }
    detail::finish_op(g, "gelu", {&a}, out, [ai = a.impl(), oi = out.impl(), inv_sqrt2] {
        const double inv_sqrt_2pi = 0.39894228040143267794;
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            const double x = ai->data[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
            ai->grad[i] += oi->grad[i] * (cdf + x * pdf);
        }
    });
    return out;
}

// log(max(x, floor)); coordinates at or below the floor get zero gradient.
inline Tensor log_clamped(Graph& g, const Tensor& a, double floor) {
    if (floor <= 0.0) throw ContractError("log_clamped: floor must be positive");
    Tensor out = detail::make_op_output(g, "log_clamped", a.shape(), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) {
        out.at(i) = std::log(a.at(i) > floor ? a.at(i) : floor);
    }
    detail::finish_op(g, "log_clamped", {&a}, out, [ai = a.impl(), oi = out.impl(), floor] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) {
            if (ai->data[i] > floor) ai->grad[i] += oi->grad[i] / ai->data[i];
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline Tensor matmul(Graph& g, const Tensor& a, const Tensor& b) {
    detail::require_rank("matmul", a, 2);
    detail::require_rank("matmul", b, 2);
    if (a.extent(1) != b.extent(0)) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    }
    const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor out = detail::make_op_output(g, "matmul", {m, n}, {&a, &b});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
        }
    }
    detail::finish_op(g, "matmul", {&a, &b}, out,
                      [ai = a.impl(), bi = b.impl(), oi = out.impl(), m, k, n] {
                          // dA = G * B^T, dB = A^T * G
                          if (ai->requires_grad) {
                              for (std::size_t i = 0; i < m; ++i) {
                                  for (std::size_t p = 0; p < k; ++p) {
                                      double acc = 0.0;
                                      for (std::size_t j = 0; j < n; ++j) {
                                          acc += oi->grad[i * n + j] * bi->data[p * n + j];
                                      }
                                      ai->grad[i * k + p] += acc;
                                  }
                              }
                          }
                          if (bi->requires_grad) {
                              for (std::size_t i = 0; i < m; ++i) {
                                  for (std::size_t p = 0; p < k; ++p) {
                                      const double av = ai->data[i * k + p];
                                      for (std::size_t j = 0; j < n; ++j) {
                                          bi->grad[p * n + j] += av * oi->grad[i * n + j];
                                      }
                                  }
                              }
                          }
                      });
    return out;
}

inline Tensor transpose(Graph& g, const Tensor& a) {
    detail::require_rank("transpose", a, 2);
    const std::size_t m = a.extent(0), n = a.extent(1);
    Tensor out = detail::make_op_output(g, "transpose", {n, m}, {&a});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
    }
    detail::finish_op(g, "transpose", {&a}, out, [ai = a.impl(), oi = out.impl(), m, n] {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[j * m + i];
        }
    });
    return out;
}

// Dot product of two equal-length rank-1 tensors; scalar result.
inline Tensor dot(Graph& g, const Tensor& a, const Tensor& b) {
    detail::require_rank("dot", a, 1);
    detail::require_rank("dot", b, 1);
    detail::require_same_shape("dot", a, b);
    Tensor out = detail::make_op_output(g, "dot", {1}, {&a, &b});
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.at(i) * b.at(i);
    out.at(0) = acc;
    detail::finish_op(g, "dot", {&a, &b}, out, [ai = a.impl(), bi = b.impl(), oi = out.impl()] {
        const double go = oi->grad[0];
        for (std::size_t i = 0; i < ai->data.size(); ++i) {
            if (ai->requires_grad) ai->grad[i] += go * bi->data[i];
            if (bi->requires_grad) bi->grad[i] += go * ai->data[i];
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Reductions and shape ops
// ---------------------------------------------------------------------------

inline Tensor sum(Graph& g, const Tensor& a) {
    Tensor out = detail::make_op_output(g, "sum", {1}, {&a});
    double acc = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) acc += a.at(i);
    out.at(0) = acc;
    detail::finish_op(g, "sum", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        const double go = oi->grad[0];
        for (double& gv : ai->grad) gv += go;
    });
    return out;
}

inline Tensor mean(Graph& g, const Tensor& a) {
    if (a.numel() == 0) throw DimensionError("mean: empty tensor");
    return scale(g, sum(g, a), 1.0 / static_cast<double>(a.numel()));
}

inline Tensor reshape(Graph& g, const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                             shape_str(shape));
    }
    Tensor out = detail::make_op_output(g, "reshape", std::move(shape), {&a});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = a.at(i);
    detail::finish_op(g, "reshape", {&a}, out, [ai = a.impl(), oi = out.impl()] {
        for (std::size_t i = 0; i < oi->data.size(); ++i) ai->grad[i] += oi->grad[i];
    });
    return out;
}

// Element i of a rank-1 tensor as a scalar.
inline Tensor select(Graph& g, const Tensor& a, std::size_t index) {
    detail::require_rank("select", a, 1);
    if (index >= a.numel()) {
        throw IndexError("select: index " + std::to_string(index) + " out of range [0, " +
                         std::to_string(a.numel()) + ")");
    }
    Tensor out = detail::make_op_output(g, "select", {1}, {&a});
    out.at(0) = a.at(index);
    detail::finish_op(g, "select", {&a}, out, [ai = a.impl(), oi = out.impl(), index] {
        ai->grad[index] += oi->grad[0];
    });
    return out;
}

// Rows [start, start+len) of a rank-2 tensor.
inline Tensor slice_rows(Graph& g, const Tensor& a, std::size_t start, std::size_t len) {
    detail::require_rank("slice_rows", a, 2);
    const std::size_t m = a.extent(0), n = a.extent(1);
    if (start + len > m) {
        throw IndexError("slice_rows: rows [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         shape_str(a.shape()));
    }
    Tensor out = detail::make_op_output(g, "slice_rows", {len, n}, {&a});
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = a.at(start + i, j);
    }
    detail::finish_op(g, "slice_rows", {&a}, out, [ai = a.impl(), oi = out.impl(), start, len, n] {
        for (std::size_t i = 0; i < len; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                ai->grad[(start + i) * n + j] += oi->grad[i * n + j];
            }
        }
    });
    return out;
}

// Columns [start, start+len) of a rank-2 tensor.
inline Tensor slice_cols(Graph& g, const Tensor& a, std::size_t start, std::size_t len) {
    detail::require_rank("slice_cols", a, 2);
    const std::size_t m = a.extent(0), n = a.extent(1);
    if (start + len > n) {
        throw IndexError("slice_cols: cols [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of range for " +
                         shape_str(a.shape()));
    }
    Tensor out = detail::make_op_output(g, "slice_cols", {m, len}, {&a});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < len; ++j) out.at(i, j) = a.at(i, start + j);
    }
    detail::finish_op(g, "slice_cols", {&a}, out, [ai = a.impl(), oi = out.impl(), m, start, len, n] {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < len; ++j) {
                ai->grad[i * n + start + j] += oi->grad[i * len + j];
            }
        }
    });
    return out;
}

// Row i of a rank-2 tensor as a rank-1 tensor.
inline Tensor take_row(Graph& g, const Tensor& a, std::size_t row) {
    detail::require_rank("take_row", a, 2);
    if (row >= a.extent(0)) {
        throw IndexError("take_row: row " + std::to_string(row) + " out of range for " +
                         shape_str(a.shape()));
    }
    return reshape(g, slice_rows(g, a, row, 1), {a.extent(1)});
}

// Concatenation along axis 0 (rank 1 or 2) or axis 1 (rank 2).
inline Tensor concat(Graph& g, const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    const std::size_t rank = parts[0].rank();
    if (rank > 2 || axis >= rank) {
        throw DimensionError("concat: unsupported axis " + std::to_string(axis) + " for " +
                             shape_str(parts[0].shape()));
    }
    Shape shape = parts[0].shape();
    std::size_t total = 0;
    bool rg = false;
    for (const Tensor& p : parts) {
        g.check_input("concat", p);
        if (p.rank() != rank || (rank == 2 && p.extent(1 - axis) != shape[1 - axis])) {
            throw DimensionError("concat: incompatible shapes " + shape_str(shape) + " vs " +
                                 shape_str(p.shape()));
        }
        total += p.extent(axis);
        rg = rg || p.requires_grad();
    }
    shape[axis] = total;
    Tensor out = Tensor::zeros(shape, rg);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        if (axis == 0) {
            const std::size_t base = offset * (rank == 2 ? shape[1] : 1);
            for (std::size_t i = 0; i < p.numel(); ++i) out.at(base + i) = p.at(i);
        } else {
            for (std::size_t i = 0; i < p.extent(0); ++i) {
                for (std::size_t j = 0; j < p.extent(1); ++j) out.at(i, offset + j) = p.at(i, j);
            }
        }
        offset += p.extent(axis);
    }
    std::vector<std::shared_ptr<TensorImpl>> ins;
    std::vector<std::size_t> extents;
    for (const Tensor& p : parts) {
        ins.push_back(p.impl());
        extents.push_back(p.extent(axis));
    }
    detail::check_finite(out.impl()->data, "concat", "value");
    if (rg) {
        g.record("concat", ins, out.impl(), [ins, extents, oi = out.impl(), axis, shape, rank] {
            std::size_t offset = 0;
            for (std::size_t pi = 0; pi < ins.size(); ++pi) {
                auto& in = ins[pi];
                const std::size_t e = extents[pi];
                if (in->requires_grad) {
                    if (axis == 0) {
                        const std::size_t base = offset * (rank == 2 ? shape[1] : 1);
                        for (std::size_t i = 0; i < in->data.size(); ++i) {
                            in->grad[i] += oi->grad[base + i];
                        }
                    } else {
                        const std::size_t rows = in->data.size() / e;
                        for (std::size_t i = 0; i < rows; ++i) {
                            for (std::size_t j = 0; j < e; ++j) {
                                in->grad[i * e + j] += oi->grad[i * shape[1] + offset + j];
                            }
                        }
                    }
                }
                offset += e;
            }
        });
    }
    return out;
}

// Adds a rank-1 bias to every row of a rank-2 tensor.
inline Tensor add_row_broadcast(Graph& g, const Tensor& x, const Tensor& bias) {
    detail::require_rank("add_row_broadcast", x, 2);
    detail::require_rank("add_row_broadcast", bias, 1);
    const std::size_t m = x.extent(0), n = x.extent(1);
    if (bias.numel() != n) {
        throw DimensionError("add_row_broadcast: bias " + shape_str(bias.shape()) +
                             " does not match row width of " + shape_str(x.shape()));
    }
    Tensor out = detail::make_op_output(g, "add_row_broadcast", x.shape(), {&x, &bias});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) = x.at(i, j) + bias.at(j);
    }
    detail::finish_op(g, "add_row_broadcast", {&x, &bias}, out,
                      [xi = x.impl(), bi = bias.impl(), oi = out.impl(), m, n] {
                          for (std::size_t i = 0; i < m; ++i) {
                              for (std::size_t j = 0; j < n; ++j) {
                                  if (xi->requires_grad) xi->grad[i * n + j] += oi->grad[i * n + j];
                                  if (bi->requires_grad) bi->grad[j] += oi->grad[i * n + j];
                              }
                          }
                      });
    return out;
}

// ---------------------------------------------------------------------------
// Neural-net primitives
// ---------------------------------------------------------------------------

// Numerically stabilized softmax along `axis` (max subtraction per lane).
inline Tensor softmax(Graph& g, const Tensor& a, std::size_t axis) {
    const auto sp = detail::split_axis("softmax", a.shape(), axis);
    if (sp.extent == 0) throw DimensionError("softmax: empty axis");
    Tensor out = detail::make_op_output(g, "softmax", a.shape(), {&a});
    for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t in = 0; in < sp.inner; ++in) {
            const auto lane = [&](std::size_t j) { return (o * sp.extent + j) * sp.inner + in; };
            double mx = a.at(lane(0));
            for (std::size_t j = 1; j < sp.extent; ++j) mx = std::max(mx, a.at(lane(j)));
            double denom = 0.0;
            for (std::size_t j = 0; j < sp.extent; ++j) {
                const double e = std::exp(a.at(lane(j)) - mx);
                out.at(lane(j)) = e;
                denom += e;
            }
            for (std::size_t j = 0; j < sp.extent; ++j) out.at(lane(j)) /= denom;
        }
    }
    detail::finish_op(g, "softmax", {&a}, out, [ai = a.impl(), oi = out.impl(), sp] {
        for (std::size_t o = 0; o < sp.outer; ++o) {
            for (std::size_t in = 0; in < sp.inner; ++in) {
                const auto lane = [&](std::size_t j) { return (o * sp.extent + j) * sp.inner + in; };
                double dotv = 0.0;
                for (std::size_t j = 0; j < sp.extent; ++j) {
                    dotv += oi->grad[lane(j)] * oi->data[lane(j)];
                }
                for (std::size_t j = 0; j < sp.extent; ++j) {
                    ai->grad[lane(j)] += oi->data[lane(j)] * (oi->grad[lane(j)] - dotv);
                }
            }
        }
    });
    return out;
}

// Per-row layer normalization over the last axis, then affine gain/bias.
// Variance is the biased (1/d) estimate.
inline Tensor layer_norm(Graph& g, const Tensor& x, const Tensor& gain, const Tensor& bias,
                         double eps) {
    if (x.rank() == 0) throw DimensionError("layer_norm: rank-0 input");
    const std::size_t d = x.shape().back();
    if (d == 0) throw DimensionError("layer_norm: zero-length normalization extent");
    detail::require_rank("layer_norm", gain, 1);
    detail::require_rank("layer_norm", bias, 1);
    if (gain.numel() != d || bias.numel() != d) {
        throw DimensionError("layer_norm: gain/bias must have extent " + std::to_string(d));
    }
    const std::size_t rows = x.numel() / d;
    Tensor out = detail::make_op_output(g, "layer_norm", x.shape(), {&x, &gain, &bias});
    std::vector<double> inv_std(rows), mean_row(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += x.at(r * d + j);
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double c = x.at(r * d + j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        mean_row[r] = mu;
        inv_std[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            out.at(r * d + j) = gain.at(j) * ((x.at(r * d + j) - mu) * is) + bias.at(j);
        }
    }
    detail::finish_op(
        g, "layer_norm", {&x, &gain, &bias}, out,
        [xi = x.impl(), gi = gain.impl(), bi = bias.impl(), oi = out.impl(), rows, d,
         mean_row = std::move(mean_row), inv_std = std::move(inv_std)] {
            const double dd = static_cast<double>(d);
            for (std::size_t r = 0; r < rows; ++r) {
                const double mu = mean_row[r], is = inv_std[r];
                double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double xhat = (xi->data[r * d + j] - mu) * is;
                    const double dxhat = oi->grad[r * d + j] * gi->data[j];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                    if (gi->requires_grad) gi->grad[j] += oi->grad[r * d + j] * xhat;
                    if (bi->requires_grad) bi->grad[j] += oi->grad[r * d + j];
                }
                if (xi->requires_grad) {
                    for (std::size_t j = 0; j < d; ++j) {
                        const double xhat = (xi->data[r * d + j] - mu) * is;
                        const double dxhat = oi->grad[r * d + j] * gi->data[j];
                        xi->grad[r * d + j] +=
                            is * (dxhat - sum_dxhat / dd - xhat * sum_dxhat_xhat / dd);
                    }
                }
            }
        });
    return out;
}

// Gathers rows of `table` by id; backward scatter-adds into the table.
inline Tensor embedding_lookup(Graph& g, const Tensor& table,
                               const std::vector<std::size_t>& ids) {
    detail::require_rank("embedding_lookup", table, 2);
    const std::size_t v = table.extent(0), d = table.extent(1);
    for (std::size_t id : ids) {
        if (id >= v) {
            throw IndexError("embedding_lookup: id " + std::to_string(id) + " out of range [0, " +
                             std::to_string(v) + ")");
        }
    }
    Tensor out = detail::make_op_output(g, "embedding_lookup", {ids.size(), d}, {&table});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) out.at(i, j) = table.at(ids[i], j);
    }
    detail::finish_op(g, "embedding_lookup", {&table}, out,
                      [ti = table.impl(), oi = out.impl(), ids, d] {
                          for (std::size_t i = 0; i < ids.size(); ++i) {
                              for (std::size_t j = 0; j < d; ++j) {
                                  ti->grad[ids[i] * d + j] += oi->grad[i * d + j];
                              }
                          }
                      });
    return out;
}

// Inverted dropout: zeroes elements with probability p at training time and
// scales survivors by 1/(1-p); identity in eval mode.
inline Tensor dropout(Graph& g, const Tensor& x, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw ConfigError("dropout: probability " + std::to_string(p) + " outside [0, 1)");
    }
    if (!training || p == 0.0) return x;
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> mask(x.numel());
    for (double& mv : mask) mv = rng.uniform() >= p ? keep_scale : 0.0;
    Tensor out = detail::make_op_output(g, "dropout", x.shape(), {&x});
    for (std::size_t i = 0; i < out.numel(); ++i) out.at(i) = x.at(i) * mask[i];
    detail::finish_op(g, "dropout", {&x}, out,
                      [xi = x.impl(), oi = out.impl(), mask = std::move(mask)] {
                          for (std::size_t i = 0; i < oi->data.size(); ++i) {
                              xi->grad[i] += oi->grad[i] * mask[i];
                          }
                      });
    return out;
}

// x*W + b for row-major activations.
inline Tensor linear(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b) {
    return add_row_broadcast(g, matmul(g, x, w), b);
}

}  // namespace mtdnn
