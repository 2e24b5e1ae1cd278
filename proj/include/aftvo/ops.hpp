#pragma once

#include <cstddef>
#include <vector>

#include "aftvo/tensor.hpp"

// Differentiable operations over Tensor. Binary elementwise ops broadcast
// along any dimension of extent 1 (row vectors over rows, columns over
// columns, scalars everywhere); nothing broader.
namespace aftvo::num {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

/// Concatenates rank-2 views along axis 0 (rows) or 1 (columns).
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t count);

/// Replaces entries where mask is set by `fill`; mask has one flag per element.
Tensor masked_fill(const Tensor& a, const std::vector<bool>& mask, double fill);

Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
/// Row-wise log-sum-exp, result shape [rows, 1].
Tensor logsumexp_rows(const Tensor& a);
/// Row-wise sum, result shape [rows, 1].
Tensor sum_rows(const Tensor& a);

/// Normalises each row to zero mean and unit variance (epsilon inside the
/// square root), then applies gain and bias. A constant row maps to bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

}  // namespace aftvo::num
