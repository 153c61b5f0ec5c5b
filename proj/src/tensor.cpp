#include "skm/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "skm/detail/im2col.hpp"

namespace skm {

namespace {

std::atomic<bool> g_nan_check{false};

struct AxisSplit {
  Index outer = 1;
  Index n = 1;
  Index inner = 1;
};

AxisSplit split_axis(const Shape& shape, int axis) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_str(shape));
  }
  AxisSplit s;
  for (int k = 0; k < axis; ++k) s.outer *= shape[k];
  s.n = shape[axis];
  for (std::size_t k = axis + 1; k < shape.size(); ++k) s.inner *= shape[k];
  return s;
}

template <typename S>
void require_same_shape(const char* op, const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream s;
  s << '(';
  for (std::size_t k = 0; k < shape.size(); ++k) s << (k ? ", " : "") << shape[k];
  s << ')';
  return s.str();
}

Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

void set_nan_check(bool enabled) { g_nan_check = enabled; }
bool nan_check_enabled() { return g_nan_check; }

template <typename S>
Tensor<S>::Tensor(Shape shape, Array values, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

template <typename S>
Tensor<S> Tensor<S>::zeros(const Shape& shape, bool requires_grad) {
  return Tensor(shape, Array::Zero(shape_size(shape)), requires_grad);
}

template <typename S>
Tensor<S> Tensor<S>::full(const Shape& shape, S v, bool requires_grad) {
  return Tensor(shape, Array::Constant(shape_size(shape), v), requires_grad);
}

template <typename S>
Tensor<S> Tensor<S>::scalar(S v) {
  return full({}, v);
}

template <typename S>
Tensor<S> Tensor<S>::record(const char* op, Shape shape, Array value, std::vector<Tensor> inputs,
                            std::function<void(Node&)> backward) {
  if (g_nan_check && !value.allFinite()) {
    throw std::domain_error(std::string("non-finite value produced by ") + op);
  }
  Tensor out(std::move(shape), std::move(value));
  out.node_->op = op;
  const bool any = std::any_of(inputs.begin(), inputs.end(),
                               [](const Tensor& t) { return t.requires_grad(); });
  if (any) {
    out.node_->requires_grad = true;
    out.node_->is_leaf = false;
    out.node_->backward = std::move(backward);
    out.node_->inputs.reserve(inputs.size());
    for (auto& t : inputs) out.node_->inputs.push_back(t.node_);
  }
  return out;
}

template <typename S>
Index Tensor<S>::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis out of range for shape " + shape_str(shape()));
  }
  return node_->shape[axis];
}

template <typename S>
S Tensor<S>::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

template <typename S>
const typename Tensor<S>::Array& Tensor<S>::grad() const {
  return node_->grad_buffer();
}

template <typename S>
void Tensor<S>::zero_grad() {
  if (node_) node_->grad = Array();
}

template <typename S>
void Tensor<S>::backward() const {
  if (size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node* n : order) {
    if (!n->is_leaf) n->grad = Array();
  }
  node_->accumulate(Array::Ones(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf || !n->backward || n->grad.size() == 0) continue;
    n->backward(*n);
  }
}

template <typename S>
Tensor<S> Tensor<S>::detach() const {
  return Tensor(shape(), value());
}

template <typename S>
Tensor<S> Tensor<S>::reshape(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("reshape: cannot view " + shape_str(this->shape()) + " as " + shape_str(shape));
  }
  return record("reshape", std::move(shape), value(), {*this}, [](Node& self) {
    self.inputs[0]->accumulate(self.grad);
  });
}

// ---------------------------------------------------------------- elementwise

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape("add", a, b);
  return Tensor<S>::record("add", a.shape(), a.value() + b.value(), {a, b}, [](auto& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->accumulate(self.grad);
    }
  });
}

template <typename S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape("sub", a, b);
  return Tensor<S>::record("sub", a.shape(), a.value() - b.value(), {a, b}, [](auto& self) {
    if (self.inputs[0]->requires_grad) self.inputs[0]->accumulate(self.grad);
    if (self.inputs[1]->requires_grad) self.inputs[1]->accumulate(-self.grad);
  });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  require_same_shape("mul", a, b);
  return Tensor<S>::record("mul", a.shape(), a.value() * b.value(), {a, b}, [](auto& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    if (x.requires_grad) x.accumulate(self.grad * y.value);
    if (y.requires_grad) y.accumulate(self.grad * x.value);
  });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S s) {
  return Tensor<S>::record("scale", a.shape(), a.value() * s, {a}, [s](auto& self) {
    self.inputs[0]->accumulate(self.grad * s);
  });
}

template <typename S>
Tensor<S> add_scalar(const Tensor<S>& a, S s) {
  return Tensor<S>::record("add_scalar", a.shape(), a.value() + s, {a}, [](auto& self) {
    self.inputs[0]->accumulate(self.grad);
  });
}

template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  using M = detail::RowMatrix<S>;
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const Index m = a.dim(0), k = a.dim(1), n = b.dim(1);
  typename Tensor<S>::Array out(m * n);
  Eigen::Map<M>(out.data(), m, n).noalias() =
      Eigen::Map<const M>(a.value().data(), m, k) * Eigen::Map<const M>(b.value().data(), k, n);
  return Tensor<S>::record("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](auto& self) {
    auto& x = *self.inputs[0];
    auto& y = *self.inputs[1];
    Eigen::Map<const M> g(self.grad.data(), m, n);
    if (x.requires_grad) {
      Eigen::Map<M>(x.grad_buffer().data(), m, k).noalias() +=
          g * Eigen::Map<const M>(y.value.data(), k, n).transpose();
    }
    if (y.requires_grad) {
      Eigen::Map<M>(y.grad_buffer().data(), k, n).noalias() +=
          Eigen::Map<const M>(x.value.data(), m, k).transpose() * g;
    }
  });
}

// ---------------------------------------------------------------- structural

template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Shape out_shape = parts[0].shape();
  if (axis < 0 || axis >= static_cast<int>(out_shape.size())) {
    throw ShapeError("concat: axis out of range for " + shape_str(out_shape));
  }
  out_shape[axis] = 0;
  std::vector<AxisSplit> splits;
  for (const auto& p : parts) {
    Shape check = p.shape();
    if (check.size() != out_shape.size()) {
      throw ShapeError("concat: rank mismatch " + shape_str(parts[0].shape()) + " vs " +
                       shape_str(p.shape()));
    }
    for (std::size_t k = 0; k < check.size(); ++k) {
      if (static_cast<int>(k) != axis && check[k] != parts[0].shape()[k]) {
        throw ShapeError("concat: shape mismatch " + shape_str(parts[0].shape()) + " vs " +
                         shape_str(p.shape()));
      }
    }
    out_shape[axis] += check[axis];
    splits.push_back(split_axis(check, axis));
  }
  const AxisSplit os = split_axis(out_shape, axis);
  typename Tensor<S>::Array out(shape_size(out_shape));
  Index offset = 0;
  std::vector<Index> offsets;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& s = splits[p];
    const auto& v = parts[p].value();
    const Index block = s.n * s.inner;
    for (Index o = 0; o < s.outer; ++o) {
      std::copy_n(v.data() + o * block, block, out.data() + o * os.n * os.inner + offset * os.inner);
    }
    offsets.push_back(offset);
    offset += s.n;
  }
  return Tensor<S>::record("concat", out_shape, std::move(out), parts,
                           [splits, offsets, os](auto& self) {
                             for (std::size_t p = 0; p < self.inputs.size(); ++p) {
                               auto& in = *self.inputs[p];
                               if (!in.requires_grad) continue;
                               const auto& s = splits[p];
                               const Index block = s.n * s.inner;
                               auto& g = in.grad_buffer();
                               for (Index o = 0; o < s.outer; ++o) {
                                 const S* src = self.grad.data() + o * os.n * os.inner +
                                                offsets[p] * os.inner;
                                 for (Index k = 0; k < block; ++k) g[o * block + k] += src[k];
                               }
                             }
                           });
}

template <typename S>
Tensor<S> slice(const Tensor<S>& x, int axis, Index begin, Index end) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (begin < 0 || end > s.n || begin >= end) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for axis of size " + std::to_string(s.n));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const Index len = end - begin;
  typename Tensor<S>::Array out(shape_size(out_shape));
  for (Index o = 0; o < s.outer; ++o) {
    std::copy_n(x.value().data() + (o * s.n + begin) * s.inner, len * s.inner,
                out.data() + o * len * s.inner);
  }
  return Tensor<S>::record("slice", out_shape, std::move(out), {x}, [s, begin, len](auto& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (Index o = 0; o < s.outer; ++o) {
      for (Index k = 0; k < len * s.inner; ++k) {
        g[(o * s.n + begin) * s.inner + k] += self.grad[o * len * s.inner + k];
      }
    }
  });
}

template <typename S>
Tensor<S> index_select(const Tensor<S>& x, int axis, const std::vector<Index>& indices) {
  const AxisSplit s = split_axis(x.shape(), axis);
  for (Index i : indices) {
    if (i < 0 || i >= s.n) throw ShapeError("index_select: index " + std::to_string(i) + " out of range");
  }
  Shape out_shape = x.shape();
  const Index m = static_cast<Index>(indices.size());
  out_shape[axis] = m;
  typename Tensor<S>::Array out(shape_size(out_shape));
  for (Index o = 0; o < s.outer; ++o) {
    for (Index k = 0; k < m; ++k) {
      std::copy_n(x.value().data() + (o * s.n + indices[k]) * s.inner, s.inner,
                  out.data() + (o * m + k) * s.inner);
    }
  }
  return Tensor<S>::record("index_select", out_shape, std::move(out), {x},
                           [s, indices, m](auto& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (Index o = 0; o < s.outer; ++o) {
                               for (Index k = 0; k < m; ++k) {
                                 for (Index c = 0; c < s.inner; ++c) {
                                   g[(o * s.n + indices[k]) * s.inner + c] +=
                                       self.grad[(o * m + k) * s.inner + c];
                                 }
                               }
                             }
                           });
}

template <typename S>
Tensor<S> tile(const Tensor<S>& x, int axis, Index reps) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (reps < 1) throw ShapeError("tile: reps must be positive");
  Shape out_shape = x.shape();
  out_shape[axis] *= reps;
  const Index block = s.n * s.inner;
  typename Tensor<S>::Array out(shape_size(out_shape));
  for (Index o = 0; o < s.outer; ++o) {
    for (Index r = 0; r < reps; ++r) {
      std::copy_n(x.value().data() + o * block, block, out.data() + (o * reps + r) * block);
    }
  }
  return Tensor<S>::record("tile", out_shape, std::move(out), {x}, [s, reps, block](auto& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (Index o = 0; o < s.outer; ++o) {
      for (Index r = 0; r < reps; ++r) {
        g.segment(o * block, block) += self.grad.segment((o * reps + r) * block, block);
      }
    }
  });
}

// ---------------------------------------------------------------- temporal

template <typename S>
Tensor<S> conv1d(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& bias, int kernel,
                 int stride) {
  using M = detail::RowMatrix<S>;
  if (x.rank() != 2) throw ShapeError("conv1d: input must be (T, C), got " + shape_str(x.shape()));
  const Index t_in = x.dim(0), c_in = x.dim(1);
  if (weight.rank() != 2 || weight.dim(0) != kernel * c_in) {
    throw ShapeError("conv1d: weight " + shape_str(weight.shape()) + " does not match input " +
                     shape_str(x.shape()) + " with kernel " + std::to_string(kernel));
  }
  const Index c_out = weight.dim(1);
  if (bias.size() != c_out) {
    throw ShapeError("conv1d: bias " + shape_str(bias.shape()) + " vs weight " +
                     shape_str(weight.shape()));
  }
  const Index t_out = detail::conv_output_length(t_in, kernel, stride);
  auto cols = std::make_shared<M>(t_out, kernel * c_in);
  for (Index o = 0; o < t_out; ++o) {
    for (int m = 0; m < kernel; ++m) {
      const Index src = detail::conv_source(o, m, kernel, stride, t_in);
      cols->row(o).segment(m * c_in, c_in) =
          Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(x.value().data() + src * c_in, c_in);
    }
  }
  typename Tensor<S>::Array out(t_out * c_out);
  Eigen::Map<M> y(out.data(), t_out, c_out);
  y.noalias() = *cols * Eigen::Map<const M>(weight.value().data(), kernel * c_in, c_out);
  y.rowwise() += bias.value().matrix().transpose();
  return Tensor<S>::record(
      "conv1d", {t_out, c_out}, std::move(out), {x, weight, bias},
      [cols, t_in, c_in, c_out, t_out, kernel, stride](auto& self) {
        Eigen::Map<const M> g(self.grad.data(), t_out, c_out);
        auto& xi = *self.inputs[0];
        auto& wi = *self.inputs[1];
        auto& bi = *self.inputs[2];
        if (wi.requires_grad) {
          Eigen::Map<M>(wi.grad_buffer().data(), kernel * c_in, c_out).noalias() +=
              cols->transpose() * g;
        }
        if (bi.requires_grad) bi.grad_buffer() += g.colwise().sum().transpose().array();
        if (xi.requires_grad) {
          M dcols = g * Eigen::Map<const M>(wi.value.data(), kernel * c_in, c_out).transpose();
          auto& gx = xi.grad_buffer();
          for (Index o = 0; o < t_out; ++o) {
            for (int m = 0; m < kernel; ++m) {
              const Index src = detail::conv_source(o, m, kernel, stride, t_in);
              for (Index c = 0; c < c_in; ++c) gx[src * c_in + c] += dcols(o, m * c_in + c);
            }
          }
        }
      });
}

template <typename S>
Tensor<S> linear_upsample(const Tensor<S>& x, int axis, int factor) {
  const AxisSplit s = split_axis(x.shape(), axis);
  if (factor < 1) throw ShapeError("linear_upsample: factor must be positive");
  const Index n_out = s.n * factor;
  std::vector<Index> lo(n_out), hi(n_out);
  std::vector<S> w(n_out);
  for (Index o = 0; o < n_out; ++o) {
    double src = (o + 0.5) / factor - 0.5;
    if (src < 0) src = 0;
    lo[o] = std::min<Index>(static_cast<Index>(std::floor(src)), s.n - 1);
    hi[o] = std::min<Index>(lo[o] + 1, s.n - 1);
    w[o] = static_cast<S>(src - static_cast<double>(lo[o]));
  }
  Shape out_shape = x.shape();
  out_shape[axis] = n_out;
  typename Tensor<S>::Array out(shape_size(out_shape));
  const auto& v = x.value();
  for (Index o = 0; o < s.outer; ++o) {
    for (Index t = 0; t < n_out; ++t) {
      const S* a = v.data() + (o * s.n + lo[t]) * s.inner;
      const S* b = v.data() + (o * s.n + hi[t]) * s.inner;
      S* dst = out.data() + (o * n_out + t) * s.inner;
      for (Index c = 0; c < s.inner; ++c) dst[c] = (S(1) - w[t]) * a[c] + w[t] * b[c];
    }
  }
  return Tensor<S>::record("linear_upsample", out_shape, std::move(out), {x},
                           [s, n_out, lo, hi, w](auto& self) {
                             auto& g = self.inputs[0]->grad_buffer();
                             for (Index o = 0; o < s.outer; ++o) {
                               for (Index t = 0; t < n_out; ++t) {
                                 const S* src = self.grad.data() + (o * n_out + t) * s.inner;
                                 S* a = g.data() + (o * s.n + lo[t]) * s.inner;
                                 S* b = g.data() + (o * s.n + hi[t]) * s.inner;
                                 for (Index c = 0; c < s.inner; ++c) {
                                   a[c] += (S(1) - w[t]) * src[c];
                                   b[c] += w[t] * src[c];
                                 }
                               }
                             }
                           });
}

// ---------------------------------------------------------------- reductions

template <typename S>
Tensor<S> sum(const Tensor<S>& x) {
  typename Tensor<S>::Array out(1);
  out[0] = x.value().sum();
  const Index n = x.size();
  return Tensor<S>::record("sum", {}, std::move(out), {x}, [n](auto& self) {
    self.inputs[0]->grad_buffer() += self.grad[0];
    (void)n;
  });
}

template <typename S>
Tensor<S> mean(const Tensor<S>& x) {
  typename Tensor<S>::Array out(1);
  const Index n = x.size();
  out[0] = x.value().sum() / static_cast<S>(n);
  return Tensor<S>::record("mean", {}, std::move(out), {x}, [n](auto& self) {
    self.inputs[0]->grad_buffer() += self.grad[0] / static_cast<S>(n);
  });
}

// ---------------------------------------------------------------- pointwise

template <typename S>
Tensor<S> leaky_relu(const Tensor<S>& x, S slope) {
  const auto& v = x.value();
  typename Tensor<S>::Array out = (v > S(0)).select(v, v * slope);
  return Tensor<S>::record("leaky_relu", x.shape(), std::move(out), {x}, [slope](auto& self) {
    auto& in = *self.inputs[0];
    in.grad_buffer() += (in.value > S(0)).select(self.grad, self.grad * slope);
  });
}

template <typename S>
Tensor<S> sigmoid(const Tensor<S>& x) {
  typename Tensor<S>::Array out = S(1) / (S(1) + (-x.value()).exp());
  auto y = std::make_shared<typename Tensor<S>::Array>(out);
  return Tensor<S>::record("sigmoid", x.shape(), std::move(out), {x}, [y](auto& self) {
    self.inputs[0]->grad_buffer() += self.grad * (*y) * (S(1) - *y);
  });
}

template <typename S>
Tensor<S> normalize(const Tensor<S>& x, Index width, S eps) {
  if (width < 1 || x.size() % width != 0) {
    throw ShapeError("normalize: width " + std::to_string(width) + " does not divide shape " +
                     shape_str(x.shape()));
  }
  const Index groups = x.size() / width;
  typename Tensor<S>::Array out(x.size());
  auto norms = std::make_shared<typename Tensor<S>::Array>(groups);
  for (Index g = 0; g < groups; ++g) {
    const auto seg = x.value().segment(g * width, width);
    const S n = std::sqrt(seg.square().sum() + eps);
    (*norms)[g] = n;
    out.segment(g * width, width) = seg / n;
  }
  auto y = std::make_shared<typename Tensor<S>::Array>(out);
  return Tensor<S>::record("normalize", x.shape(), std::move(out), {x},
                           [y, norms, width, groups](auto& self) {
                             auto& gx = self.inputs[0]->grad_buffer();
                             for (Index g = 0; g < groups; ++g) {
                               const auto yg = y->segment(g * width, width);
                               const auto gg = self.grad.segment(g * width, width);
                               const S dot = (yg * gg).sum();
                               gx.segment(g * width, width) += (gg - yg * dot) / (*norms)[g];
                             }
                           });
}

template <typename S>
Tensor<S> square(const Tensor<S>& x) {
  return Tensor<S>::record("square", x.shape(), x.value().square(), {x}, [](auto& self) {
    auto& in = *self.inputs[0];
    in.grad_buffer() += self.grad * S(2) * in.value;
  });
}

template <typename S>
Tensor<S> sqrt(const Tensor<S>& x, S eps) {
  typename Tensor<S>::Array out = (x.value() + eps).sqrt();
  auto y = std::make_shared<typename Tensor<S>::Array>(out);
  return Tensor<S>::record("sqrt", x.shape(), std::move(out), {x}, [y](auto& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (Index k = 0; k < y->size(); ++k) {
      if ((*y)[k] > S(0)) g[k] += self.grad[k] / (S(2) * (*y)[k]);
    }
  });
}

template <typename S>
Tensor<S> abs(const Tensor<S>& x) {
  return Tensor<S>::record("abs", x.shape(), x.value().abs(), {x}, [](auto& self) {
    auto& in = *self.inputs[0];
    in.grad_buffer() += self.grad * in.value.sign();
  });
}

#define SKM_INSTANTIATE(S)                                                                   \
  template class Tensor<S>;                                                                  \
  template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                                \
  template Tensor<S> scale(const Tensor<S>&, S);                                             \
  template Tensor<S> add_scalar(const Tensor<S>&, S);                                        \
  template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);                             \
  template Tensor<S> concat(const std::vector<Tensor<S>>&, int);                             \
  template Tensor<S> slice(const Tensor<S>&, int, Index, Index);                             \
  template Tensor<S> index_select(const Tensor<S>&, int, const std::vector<Index>&);         \
  template Tensor<S> tile(const Tensor<S>&, int, Index);                                     \
  template Tensor<S> conv1d(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&, int, int); \
  template Tensor<S> linear_upsample(const Tensor<S>&, int, int);                            \
  template Tensor<S> sum(const Tensor<S>&);                                                  \
  template Tensor<S> mean(const Tensor<S>&);                                                 \
  template Tensor<S> leaky_relu(const Tensor<S>&, S);                                        \
  template Tensor<S> sigmoid(const Tensor<S>&);                                              \
  template Tensor<S> normalize(const Tensor<S>&, Index, S);                                  \
  template Tensor<S> square(const Tensor<S>&);                                               \
  template Tensor<S> sqrt(const Tensor<S>&, S);                                              \
  template Tensor<S> abs(const Tensor<S>&);

SKM_INSTANTIATE(float)
SKM_INSTANTIATE(double)

#undef SKM_INSTANTIATE

}  // namespace skm
