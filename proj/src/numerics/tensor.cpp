#include "aftvo/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace aftvo::num {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.size() > 2) throw DimensionError("tensor rank above 2: " + to_string(shape));
  for (auto d : shape)
    if (d == 0) throw DimensionError("zero-length dimension in " + to_string(shape));
  if (element_count(shape) != data.size())
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  for (double v : data)
    if (!std::isfinite(v)) throw NumericalError("non-finite value in tensor data");
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
  if (requires_grad) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

Tensor Tensor::row(std::span<const double> values) {
  return Tensor({1, values.size()}, std::vector<double>(values.begin(), values.end()));
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape()[0] : 1; }

std::size_t Tensor::cols() const {
  if (rank() == 0) return 1;
  return shape().back();
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  node_->grad_buffer();
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::from_op(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                       std::function<void(Node&)> backward, const char* op_name) {
  for (double v : value)
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite output from ") + op_name);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const auto& p : parents)
    if (p.requires_grad()) node->requires_grad = true;
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw DimensionError("backward needs a scalar loss");
  Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order; each node once.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order)
    if (!node->parents.empty()) node->grad.assign(node->value.size(), 0.0);
  root->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace aftvo::num
