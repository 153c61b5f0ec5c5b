#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace skm {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

std::string shape_str(const Shape& shape);
Index shape_size(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Turn on finite-value checks after every recorded op (off by default).
void set_nan_check(bool enabled);
bool nan_check_enabled();

// Dense row-major array taking part in reverse-mode differentiation.
// Copies share the underlying node; results of ops on tensors that require
// gradients record a backward closure on the tape.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  struct Node {
    Shape shape;
    Array value;
    Array grad;  // empty until first accumulation
    bool requires_grad = false;
    bool is_leaf = true;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    void accumulate(const Array& g) {
      if (grad.size() == 0) {
        grad = g;
      } else {
        grad += g;
      }
    }
    Array& grad_buffer() {
      if (grad.size() == 0) grad = Array::Zero(value.size());
      return grad;
    }
  };

  Tensor() = default;
  Tensor(Shape shape, Array values, bool requires_grad = false);

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, Scalar v, bool requires_grad = false);
  static Tensor scalar(Scalar v);

  // Attach a recorded op. `backward` reads self.grad and accumulates into
  // self.inputs[k]; it is dropped when no input requires gradients.
  static Tensor record(const char* op, Shape shape, Array value, std::vector<Tensor> inputs,
                       std::function<void(Node&)> backward);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  Index dim(int axis) const;
  Index size() const { return node_->value.size(); }

  const Array& value() const { return node_->value; }
  Array& mutable_value() { return node_->value; }
  Scalar item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Array& grad() const;
  bool has_grad() const { return node_ && node_->grad.size() > 0; }
  void zero_grad();

  // Seeds d(this)/d(this) = 1 and propagates to every reachable node.
  // Leaf gradients accumulate across calls; intermediate ones are rebuilt.
  void backward() const;

  Tensor detach() const;
  Tensor reshape(Shape shape) const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Elementwise, same shape.
template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <typename S> Tensor<S> scale(const Tensor<S>& a, S s);
template <typename S> Tensor<S> add_scalar(const Tensor<S>& a, S s);

template <typename S> Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return add(a, b); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return sub(a, b); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return mul(a, b); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, S s) { return scale(a, s); }
template <typename S> Tensor<S> operator*(S s, const Tensor<S>& a) { return scale(a, s); }

// (m, k) x (k, n)
template <typename S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);

template <typename S> Tensor<S> concat(const std::vector<Tensor<S>>& parts, int axis);
template <typename S> Tensor<S> slice(const Tensor<S>& x, int axis, Index begin, Index end);
template <typename S> Tensor<S> index_select(const Tensor<S>& x, int axis, const std::vector<Index>& indices);
// Repeat the whole axis `reps` times.
template <typename S> Tensor<S> tile(const Tensor<S>& x, int axis, Index reps);

// x: (T, C_in); weight: (k * C_in, C_out) with row index tap * C_in + c;
// bias: (C_out). Reflect padding of k / 2 on both sides.
template <typename S>
Tensor<S> conv1d(const Tensor<S>& x, const Tensor<S>& weight, const Tensor<S>& bias, int kernel,
                 int stride);

// Linear interpolation along `axis` (half-pixel centres, edge clamped).
template <typename S> Tensor<S> linear_upsample(const Tensor<S>& x, int axis, int factor);

template <typename S> Tensor<S> sum(const Tensor<S>& x);
template <typename S> Tensor<S> mean(const Tensor<S>& x);

template <typename S> Tensor<S> leaky_relu(const Tensor<S>& x, S slope = S(0.2));
template <typename S> Tensor<S> sigmoid(const Tensor<S>& x);
// Normalise consecutive groups of `width` values (the trailing vector axis).
template <typename S> Tensor<S> normalize(const Tensor<S>& x, Index width, S eps = S(1e-12));
template <typename S> Tensor<S> square(const Tensor<S>& x);
template <typename S> Tensor<S> sqrt(const Tensor<S>& x, S eps = S(0));
template <typename S> Tensor<S> abs(const Tensor<S>& x);

// Convert between scalar types; the result is a fresh constant.
template <typename To, typename From>
Tensor<To> cast_constant(const Tensor<From>& x) {
  return Tensor<To>(x.shape(), x.value().template cast<To>());
}

}  // namespace skm
