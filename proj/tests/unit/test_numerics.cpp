#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aftvo/nn.hpp"
#include "aftvo/ops.hpp"
#include "support/gradcheck.hpp"

using namespace aftvo::num;
using aftvo::testing::gradient_check;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = true, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(element_count(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

// Weighted sum so every output element carries a distinct gradient.
Tensor weighted(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

}  // namespace

TEST(Tensor, RejectsShapeMismatchAndNonFinite) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor({1}, {std::nan("")}), NumericalError);
}

TEST(Matmul, IdentityAndHandArithmetic) {
  Rng rng(1);
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  Tensor b = random_tensor({3, 4}, rng, false);
  Tensor c = matmul(eye, b);
  for (std::size_t i = 0; i < b.size(); ++i) EXPECT_DOUBLE_EQ(c.data()[i], b.data()[i]);

  Tensor lhs({2, 2}, {1, 2, 3, 4});
  Tensor rhs({2, 1}, {1, 1});
  Tensor out = matmul(lhs, rhs);
  ASSERT_EQ(out.shape(), (Shape{2, 1}));
  EXPECT_DOUBLE_EQ(out.data()[0], 3.0);
  EXPECT_DOUBLE_EQ(out.data()[1], 7.0);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), DimensionError);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor a = random_tensor({5, 4}, rng);
    Tensor b = random_tensor({4, 3}, rng);
    Tensor w = random_tensor({5, 3}, rng, false);
    auto r = gradient_check([&] { return weighted(matmul(a, b), w); }, {{"a", a}, {"b", b}});
    EXPECT_LT(r.worst_relative_error, 1e-4) << r.worst_tensor;
  }
}

TEST(Softmax, SymmetryAndStability) {
  Tensor s = softmax(Tensor({1, 2}, {0, 0}));
  EXPECT_NEAR(s.data()[0], 0.5, 1e-15);
  Tensor big = softmax(Tensor({1, 2}, {1000, 1000}));
  EXPECT_NEAR(big.data()[0], 0.5, 1e-15);
  EXPECT_NEAR(big.data()[1], 0.5, 1e-15);
}

TEST(Softmax, SimplexForLargeMagnitudes) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor({3, 6}, rng, false, -1e3, 1e3);
    Tensor y = softmax(x);
    for (std::size_t r = 0; r < 3; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 6; ++c) {
        EXPECT_GE(y.at(r, c), 0.0);
        total += y.at(r, c);
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(100 + seed);
    Tensor x = random_tensor({3, 5}, rng, true, -2, 2);
    Tensor w = random_tensor({3, 5}, rng, false);
    auto r = gradient_check([&] { return weighted(softmax(x), w); }, {{"x", x}});
    EXPECT_LT(r.worst_relative_error, 1e-4);
    auto r2 = gradient_check([&] { return weighted(log_softmax(x), w); }, {{"x", x}});
    EXPECT_LT(r2.worst_relative_error, 1e-4);
    auto r3 = gradient_check([&] { return weighted(logsumexp_rows(x), slice(w, 1, 0, 1)); }, {{"x", x}});
    EXPECT_LT(r3.worst_relative_error, 1e-4);
  }
}

TEST(LayerNorm, ConventionsAndErrors) {
  Tensor gain({1, 3}, {1, 1, 1});
  Tensor bias({1, 3}, {0, 0, 0});
  Tensor constant = layer_norm(Tensor({1, 3}, {4, 4, 4}), gain, bias);
  for (double v : constant.data()) EXPECT_DOUBLE_EQ(v, 0.0);

  Tensor shifted_bias({1, 3}, {0.5, -1, 2});
  Tensor to_bias = layer_norm(Tensor({1, 3}, {-2, -2, -2}), gain, shifted_bias);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(to_bias.data()[i], shifted_bias.data()[i]);

  Tensor unit = layer_norm(Tensor({1, 2}, {1, -1}), Tensor({1, 2}, {1, 1}), Tensor({1, 2}, {0, 0}));
  // Exact up to the epsilon inside the square root: 1/sqrt(1 + 1e-5).
  EXPECT_NEAR(unit.data()[0], 1.0, 1e-5);
  EXPECT_NEAR(unit.data()[1], -1.0, 1e-5);

  EXPECT_THROW(layer_norm(Tensor::zeros({2, 3}), Tensor::zeros({1, 2}), bias), DimensionError);
}

TEST(LayerNorm, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    Tensor x = random_tensor({4, 6}, rng, true, -2, 2);
    Tensor g = random_tensor({1, 6}, rng);
    Tensor b = random_tensor({1, 6}, rng);
    Tensor w = random_tensor({4, 6}, rng, false);
    auto r = gradient_check([&] { return weighted(layer_norm(x, g, b), w); },
                            {{"x", x}, {"gain", g}, {"bias", b}});
    EXPECT_LT(r.worst_relative_error, 1e-4) << r.worst_tensor;
  }
}

TEST(Elementwise, ClosedFormsAndMaskSaturation) {
  EXPECT_NEAR(softplus(Tensor::scalar(0.0)).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(Tensor::scalar(-800.0)).item(), 0.0, 1e-300);
  EXPECT_NEAR(softplus(Tensor::scalar(800.0)).item(), 800.0, 1e-9);

  Tensor masked = masked_fill(Tensor({1, 2}, {0, 5}), {false, true}, -1e9);
  Tensor p = softmax(masked);
  EXPECT_NEAR(p.data()[0], 1.0, 1e-6);
  EXPECT_NEAR(p.data()[1], 0.0, 1e-6);
}

TEST(Elementwise, BroadcastRules) {
  Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r({1, 3}, {10, 20, 30});
  Tensor c({2, 1}, {100, 200});
  Tensor s = add(m, r);
  EXPECT_DOUBLE_EQ(s.at(1, 2), 36);
  Tensor t = mul(m, c);
  EXPECT_DOUBLE_EQ(t.at(1, 0), 800);
  EXPECT_THROW(add(m, Tensor::zeros({1, 2})), DimensionError);
  EXPECT_THROW(masked_fill(m, {true}, 0.0), DimensionError);
}

TEST(Elementwise, GradientsMatchFiniteDifferences) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(300 + seed);
    Tensor a = random_tensor({3, 4}, rng, true, -2, 2);
    Tensor b = random_tensor({3, 4}, rng, true, -2, 2);
    Tensor row = random_tensor({1, 4}, rng, true);
    Tensor col = random_tensor({3, 1}, rng, true);
    Tensor pos = random_tensor({3, 4}, rng, true, 0.5, 2.0);
    Tensor w = random_tensor({3, 4}, rng, false);
    std::vector<bool> mask(12);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (i * 7 + seed) % 3 == 0;

    const std::vector<std::pair<const char*, std::function<Tensor()>>> cases = {
        {"add", [&] { return weighted(add(a, b), w); }},
        {"add_row", [&] { return weighted(add(a, row), w); }},
        {"sub_col", [&] { return weighted(sub(a, col), w); }},
        {"mul", [&] { return weighted(mul(a, b), w); }},
        {"mul_row", [&] { return weighted(mul(a, row), w); }},
        {"relu", [&] { return weighted(relu(a), w); }},
        {"softplus", [&] { return weighted(softplus(a), w); }},
        {"exp", [&] { return weighted(exp(a), w); }},
        {"log", [&] { return weighted(log(pos), w); }},
        {"tanh", [&] { return weighted(tanh(a), w); }},
        {"sigmoid", [&] { return weighted(sigmoid(a), w); }},
        {"concat", [&] { return weighted(slice(concat({a, b}, 1), 1, 2, 4), w); }},
        {"concat_rows", [&] { return weighted(slice(concat({a, b}, 0), 0, 2, 3), w); }},
        {"masked_fill", [&] { return weighted(masked_fill(a, mask, -3.0), w); }},
        {"transpose", [&] { return weighted(transpose(transpose(a)), w); }},
        {"reshape", [&] { return weighted(reshape(reshape(a, {4, 3}), {3, 4}), w); }},
        {"sum_rows", [&] { return sum(mul(sum_rows(mul(a, b)), col)); }},
        {"mean", [&] { return mean(mul(a, b)); }},
    };
    for (const auto& [name, fn] : cases) {
      auto r = gradient_check(fn, {{"a", a}, {"b", b}, {"row", row}, {"col", col}, {"pos", pos}});
      EXPECT_LT(r.worst_relative_error, 1e-4) << name << " / " << r.worst_tensor;
    }
  }
}

TEST(Backward, ClosedForms) {
  Tensor p({3}, {1, 2, 3}, true);
  backward(sum(p));
  for (double g : p.grad()) EXPECT_DOUBLE_EQ(g, 1.0);

  Tensor q({1}, {3.0}, true);
  backward(mul(q, q));
  EXPECT_DOUBLE_EQ(q.grad()[0], 6.0);
}

TEST(Backward, UnreachedParametersReceiveZero) {
  Tensor used({2}, {1, 2}, true);
  Tensor unused({2}, {3, 4}, true);
  backward(sum(used));
  for (double g : unused.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Backward, NonScalarLossThrows) {
  Tensor p({2}, {1, 2}, true);
  EXPECT_THROW(backward(scale(p, 2.0)), DimensionError);
}

TEST(Backward, SharedSubexpressionVisitedOnce) {
  Tensor p({1}, {2.0}, true);
  Tensor sq = mul(p, p);
  Tensor loss = add(sq, sq);  // 2 p^2 -> 4p
  backward(loss);
  EXPECT_DOUBLE_EQ(p.grad()[0], 8.0);
}

TEST(Backward, DeterministicGradients) {
  auto run = [] {
    Rng rng(42);
    ParameterStore store;
    auto attn = MultiHeadAttention::create(store, "attn", 8, 2, rng);
    Tensor x = random_tensor({5, 8}, rng, false);
    backward(sum(attn(x, x, true)));
    std::vector<double> grads;
    for (const auto& e : store.entries()) grads.insert(grads.end(), e.tensor.grad().begin(), e.tensor.grad().end());
    return grads;
  };
  EXPECT_EQ(run(), run());
}

TEST(Attention, GradientMatchesFiniteDifferences) {
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(400 + seed);
    ParameterStore store;
    auto attn = MultiHeadAttention::create(store, "attn", 8, 2, rng);
    Tensor x = random_tensor({4, 8}, rng);
    Tensor mem = random_tensor({6, 8}, rng);
    std::vector<std::pair<std::string, Tensor>> leaves{{"x", x}, {"mem", mem}};
    for (const auto& e : store.entries()) leaves.emplace_back(e.name, e.tensor);
    auto r = gradient_check([&] { return sum(mul(attn(x, mem, false), attn(x, x, true))); }, leaves);
    EXPECT_LT(r.worst_relative_error, 1e-4) << r.worst_tensor;
  }
}

TEST(Adam, MinimisesQuadratic) {
  ParameterStore store;
  Tensor p = store.add("p", {2}, {3.0, -2.0});
  Adam adam({.learning_rate = 0.1});
  for (int i = 0; i < 500; ++i) {
    store.zero_grad();
    backward(sum(mul(p, p)));
    adam.step(store);
  }
  EXPECT_NEAR(p.data()[0], 0.0, 1e-2);
  EXPECT_NEAR(p.data()[1], 0.0, 1e-2);
}

TEST(ClipGradNorm, ScalesToMaximum) {
  ParameterStore store;
  Tensor p = store.add("p", {2}, {0.0, 0.0});
  auto g = p.mutable_grad();
  g[0] = 30.0;
  g[1] = 40.0;
  EXPECT_DOUBLE_EQ(clip_grad_norm(store, 5.0), 50.0);
  EXPECT_NEAR(p.grad()[0], 3.0, 1e-12);
  EXPECT_NEAR(p.grad()[1], 4.0, 1e-12);
}
