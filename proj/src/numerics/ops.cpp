#include "aftvo/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

namespace aftvo::num {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMut = Eigen::Map<RowMatrix>;

MapMut view(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MapMut(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

bool wants_grad(const Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

struct Broadcast {
  std::size_t rows, cols;
  std::size_t a_rows, a_cols, b_rows, b_cols;
  Shape shape;

  std::size_t a_index(std::size_t r, std::size_t c) const {
    return (a_rows == 1 ? 0 : r) * a_cols + (a_cols == 1 ? 0 : c);
  }
  std::size_t b_index(std::size_t r, std::size_t c) const {
    return (b_rows == 1 ? 0 : r) * b_cols + (b_cols == 1 ? 0 : c);
  }
};

Broadcast broadcast(const Tensor& a, const Tensor& b, const char* op) {
  Broadcast bc{};
  bc.a_rows = a.rows();
  bc.a_cols = a.cols();
  bc.b_rows = b.rows();
  bc.b_cols = b.cols();
  auto merge = [&](std::size_t x, std::size_t y) {
    if (x != y && x != 1 && y != 1)
      throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                           " and " + to_string(b.shape()));
    return std::max(x, y);
  };
  bc.rows = merge(bc.a_rows, bc.b_rows);
  bc.cols = merge(bc.a_cols, bc.b_cols);
  if (a.shape() == b.shape())
    bc.shape = a.shape();
  else if (b.size() == 1)
    bc.shape = a.shape();
  else if (a.size() == 1)
    bc.shape = b.shape();
  else
    bc.shape = {bc.rows, bc.cols};
  return bc;
}

template <typename Forward, typename GradA, typename GradB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Forward f, GradA ga, GradB gb) {
  const Broadcast bc = broadcast(a, b, name);
  std::vector<double> out(bc.rows * bc.cols);
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  for (std::size_t r = 0; r < bc.rows; ++r)
    for (std::size_t c = 0; c < bc.cols; ++c)
      out[r * bc.cols + c] = f(av[bc.a_index(r, c)], bv[bc.b_index(r, c)]);
  return Tensor::from_op(
      bc.shape, std::move(out), {a, b},
      [bc, ga, gb](Node& self) {
        const auto& av = self.parents[0]->value;
        const auto& bv = self.parents[1]->value;
        const bool need_a = self.parents[0]->requires_grad;
        const bool need_b = self.parents[1]->requires_grad;
        auto* gA = need_a ? &self.parents[0]->grad_buffer() : nullptr;
        auto* gB = need_b ? &self.parents[1]->grad_buffer() : nullptr;
        for (std::size_t r = 0; r < bc.rows; ++r)
          for (std::size_t c = 0; c < bc.cols; ++c) {
            const double g = self.grad[r * bc.cols + c];
            const double x = av[bc.a_index(r, c)];
            const double y = bv[bc.b_index(r, c)];
            if (gA) (*gA)[bc.a_index(r, c)] += g * ga(x, y);
            if (gB) (*gB)[bc.b_index(r, c)] += g * gb(x, y);
          }
      },
      name);
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, const char* name, Forward f, Derivative df) {
  std::vector<double> out(a.size());
  const auto& av = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return Tensor::from_op(
      a.shape(), std::move(out), {a},
      [df](Node& self) {
        const auto& x = self.parents[0]->value;
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(x[i], self.value[i]);
      },
      name);
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_nonempty_rows(const Tensor& a, const char* op) {
  if (a.rank() == 0 || a.cols() == 0) throw DimensionError(std::string(op) + ": empty last axis");
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (a.rank() == 0 || b.rank() == 0 || b.rows() != k)
    throw DimensionError("matmul: inner dimensions differ, " + to_string(a.shape()) + " x " +
                         to_string(b.shape()));
  std::vector<double> out(m * n);
  view(out, m, n).noalias() = view(a.node()->value, m, k) * view(b.node()->value, k, n);
  return Tensor::from_op(
      {m, n}, std::move(out), {a, b},
      [m, k, n](Node& self) {
        auto g = view(self.grad, m, n);
        if (wants_grad(self, 0))
          view(self.parents[0]->grad_buffer(), m, k).noalias() +=
              g * view(self.parents[1]->value, k, n).transpose();
        if (wants_grad(self, 1))
          view(self.parents[1]->grad_buffer(), k, n).noalias() +=
              view(self.parents[0]->value, m, k).transpose() * g;
      },
      "matmul");
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  view(out, n, m) = view(a.node()->value, m, n).transpose();
  return Tensor::from_op(
      {n, m}, std::move(out), {a},
      [m, n](Node& self) {
        view(self.parents[0]->grad_buffer(), m, n) += view(self.grad, n, m).transpose();
      },
      "transpose");
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (element_count(shape) != a.size())
    throw DimensionError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  return Tensor::from_op(
      std::move(shape), a.node()->value, {a},
      [](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      },
      "reshape");
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  return unary(a, "softplus", stable_softplus, [](double x, double) { return logistic(x); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, "sigmoid", logistic, [](double, double y) { return y * (1.0 - y); });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  if (axis != 0 && axis != 1) throw DimensionError("concat: axis must be 0 or 1");
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (cols == 0) cols = p.cols();
      if (p.cols() != cols) throw DimensionError("concat: column counts differ");
      rows += p.rows();
    } else {
      if (rows == 0) rows = p.rows();
      if (p.rows() != rows) throw DimensionError("concat: row counts differ");
      cols += p.cols();
    }
  }
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const auto& v = p.node()->value;
    if (axis == 0) {
      std::copy(v.begin(), v.end(), out.begin() + static_cast<std::ptrdiff_t>(offset * cols));
      offset += p.rows();
    } else {
      const std::size_t pc = p.cols();
      for (std::size_t r = 0; r < rows; ++r)
        std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * pc), pc,
                    out.begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
      offset += pc;
    }
  }
  return Tensor::from_op(
      {rows, cols}, std::move(out), parts,
      [axis, rows, cols, offsets](Node& self) {
        for (std::size_t i = 0; i < self.parents.size(); ++i) {
          if (!wants_grad(self, i)) continue;
          auto& g = self.parents[i]->grad_buffer();
          if (axis == 0) {
            for (std::size_t j = 0; j < g.size(); ++j) g[j] += self.grad[offsets[i] * cols + j];
          } else {
            const std::size_t pc = g.size() / rows;
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t c = 0; c < pc; ++c) g[r * pc + c] += self.grad[r * cols + offsets[i] + c];
          }
        }
      },
      "concat");
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t count) {
  const std::size_t rows = a.rows(), cols = a.cols();
  if (axis != 0 && axis != 1) throw DimensionError("slice: axis must be 0 or 1");
  const std::size_t extent = axis == 0 ? rows : cols;
  if (count == 0 || begin + count > extent)
    throw DimensionError("slice: range out of bounds for " + to_string(a.shape()));
  const std::size_t out_rows = axis == 0 ? count : rows;
  const std::size_t out_cols = axis == 0 ? cols : count;
  std::vector<double> out(out_rows * out_cols);
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c)
      out[r * out_cols + c] = axis == 0 ? v[(begin + r) * cols + c] : v[r * cols + begin + c];
  return Tensor::from_op(
      {out_rows, out_cols}, std::move(out), {a},
      [axis, begin, cols, out_rows, out_cols](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < out_rows; ++r)
          for (std::size_t c = 0; c < out_cols; ++c) {
            const std::size_t src = axis == 0 ? (begin + r) * cols + c : r * cols + begin + c;
            g[src] += self.grad[r * out_cols + c];
          }
      },
      "slice");
}

Tensor masked_fill(const Tensor& a, const std::vector<bool>& mask, double fill) {
  if (mask.size() != a.size()) throw DimensionError("masked_fill: mask size differs from tensor");
  std::vector<double> out(a.node()->value);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (mask[i]) out[i] = fill;
  return Tensor::from_op(
      a.shape(), std::move(out), {a},
      [mask](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i)
          if (!mask[i]) g[i] += self.grad[i];
      },
      "masked_fill");
}

Tensor softmax(const Tensor& a) {
  require_nonempty_rows(a, "softmax");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    double* y = out.data() + r * cols;
    const double hi = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += (y[c] = std::exp(x[c] - hi));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  return Tensor::from_op(
      a.shape(), std::move(out), {a},
      [rows, cols](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = self.value.data() + r * cols;
          const double* gy = self.grad.data() + r * cols;
          double dot = 0.0;
          for (std::size_t c = 0; c < cols; ++c) dot += gy[c] * y[c];
          for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += y[c] * (gy[c] - dot);
        }
      },
      "softmax");
}

Tensor log_softmax(const Tensor& a) {
  require_nonempty_rows(a, "log_softmax");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.size());
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    const double hi = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - hi);
    const double lse = hi + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[c] - lse;
  }
  return Tensor::from_op(
      a.shape(), std::move(out), {a},
      [rows, cols](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
          const double* y = self.value.data() + r * cols;
          const double* gy = self.grad.data() + r * cols;
          double total = 0.0;
          for (std::size_t c = 0; c < cols; ++c) total += gy[c];
          for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += gy[c] - std::exp(y[c]) * total;
        }
      },
      "log_softmax");
}

Tensor logsumexp_rows(const Tensor& a) {
  require_nonempty_rows(a, "logsumexp_rows");
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows);
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = v.data() + r * cols;
    const double hi = *std::max_element(x, x + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - hi);
    out[r] = hi + std::log(total);
  }
  return Tensor::from_op(
      {rows, 1}, std::move(out), {a},
      [rows, cols](Node& self) {
        const auto& x = self.parents[0]->value;
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c)
            g[r * cols + c] += self.grad[r] * std::exp(x[r * cols + c] - self.value[r]);
      },
      "logsumexp_rows");
}

Tensor sum_rows(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(rows, 0.0);
  const auto& v = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r] += v[r * cols + c];
  return Tensor::from_op(
      {rows, 1}, std::move(out), {a},
      [rows, cols](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r];
      },
      "sum_rows");
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gain.size() != cols || bias.size() != cols)
    throw DimensionError("layer_norm: gain/bias width " + std::to_string(gain.size()) + "/" +
                         std::to_string(bias.size()) + " vs feature width " + std::to_string(cols));
  const auto& v = x.node()->value;
  const auto& gv = gain.node()->value;
  const auto& bv = bias.node()->value;
  std::vector<double> out(x.size());
  std::vector<double> normalised(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = v.data() + r * cols;
    double mu = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      const double n = (row[c] - mu) * inv_std[r];
      normalised[r * cols + c] = n;
      out[r * cols + c] = n * gv[c] + bv[c];
    }
  }
  return Tensor::from_op(
      x.shape(), std::move(out), {x, gain, bias},
      [rows, cols, normalised = std::move(normalised), inv_std = std::move(inv_std)](Node& self) {
        const auto& gv = self.parents[1]->value;
        const bool need_x = wants_grad(self, 0);
        auto* gx = need_x ? &self.parents[0]->grad_buffer() : nullptr;
        auto* gg = wants_grad(self, 1) ? &self.parents[1]->grad_buffer() : nullptr;
        auto* gb = wants_grad(self, 2) ? &self.parents[2]->grad_buffer() : nullptr;
        const double n_inv = 1.0 / static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gy = self.grad.data() + r * cols;
          const double* nh = normalised.data() + r * cols;
          double sum_d = 0.0, sum_dn = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = gy[c] * gv[c];
            sum_d += d;
            sum_dn += d * nh[c];
            if (gg) (*gg)[c] += gy[c] * nh[c];
            if (gb) (*gb)[c] += gy[c];
          }
          if (!gx) continue;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = gy[c] * gv[c];
            (*gx)[r * cols + c] += inv_std[r] * (d - n_inv * sum_d - nh[c] * n_inv * sum_dn);
          }
        }
      },
      "layer_norm");
}

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return Tensor::from_op(
      {}, {total}, {a},
      [](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (auto& gi : g) gi += self.grad[0];
      },
      "sum");
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

}  // namespace aftvo::num
