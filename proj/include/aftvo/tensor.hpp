#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aftvo::num {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// One recorded value of the computation graph. Op results hold their
/// parents plus a closure that pushes `grad` back into the parents' grads.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Dense row-major array of 64-bit reals (rank 0, 1 or 2) that records the
/// operations producing it. Rank-1 tensors behave as a single row.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value);
  static Tensor row(std::span<const double> values);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  /// Accumulated gradient; all zeros for leaves that backward never reached.
  std::span<const double> grad() const;

  // Leaf mutation, used by optimisers and checkpoint loading only.
  std::span<double> mutable_data() { return node_->value; }
  std::span<double> mutable_grad() { return node_->grad_buffer(); }
  void zero_grad();

  const std::shared_ptr<Node>& node() const { return node_; }

  /// Builds an op result. Verifies finiteness and drops the backward closure
  /// when no parent needs a gradient.
  static Tensor from_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                        std::function<void(Node&)> backward, const char* op_name);

 private:
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
  std::shared_ptr<Node> node_;
};

/// Reverse-mode sweep from a scalar loss. Leaf gradients accumulate across
/// calls; intermediate gradients are reset on every call.
void backward(const Tensor& loss);

}  // namespace aftvo::num
