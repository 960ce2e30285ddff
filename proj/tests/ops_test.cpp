// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"
#include "test_util.hpp"

namespace flowclip {
namespace {

using testing::fd_rel_error;
using testing::random_leaf;

TEST(Matmul, IdentityAndHandArithmetic) {
  Tensor eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor x({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(testing::max_abs_diff(matmul(eye, x), x), 0.0);
  Tensor a({1, 2}, std::vector<double>{1, 2});
  Tensor b({2, 1}, std::vector<double>{3, 4});
  EXPECT_EQ(matmul(a, b).item(), 11.0);
}

TEST(Matmul, MismatchNamesBothShapes) {
  try {
    matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
  }
}

TEST(Matmul, GradientOfSumMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Tensor a = random_leaf({3, 4}, rng), b = random_leaf({4, 2}, rng);
    EXPECT_LT(fd_rel_error([&] { return sum(matmul(a, b)); }, {a, b}), 1e-6);
  }
}

TEST(Matmul, PropagatesNaN) {
  Tensor a({1, 2}, std::vector<double>{0.0, 1.0});
  Tensor b({2, 1}, std::vector<double>{std::numeric_limits<double>::quiet_NaN(), 1.0});
  EXPECT_TRUE(std::isnan(matmul(a, b).item()));
}

TEST(Softmax, UniformAndSingleton) {
  auto p = softmax(Tensor({3}, 0.0));
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(softmax(Tensor({1}, 42.0)).item(), 1.0);
}

TEST(Softmax, TwoWayExample) {
  const double a = 2.8571, b = 1.4286;
  const double expected = 1.0 / (1.0 + std::exp(b - a));
  auto p = softmax(Tensor({2}, std::vector<double>{a, b}));
  EXPECT_NEAR(p.at(0), expected, 1e-12);
  EXPECT_NEAR(p.at(0), 0.8067, 1e-3);
  EXPECT_NEAR(p.at(1), 0.1933, 1e-3);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = normal_tensor({4, 7}, 5.0, rng);
    const double c = rng.normal(0.0, 100.0);
    Tensor shifted({4, 7}, 0.0);
    for (std::size_t i = 0; i < x.numel(); ++i) shifted.mutable_values()[i] = x.values()[i] + c;
    for (int axis : {0, 1}) {
      auto p = softmax(x, axis), q = softmax(shifted, axis);
      EXPECT_LT(testing::max_abs_diff(p, q), 1e-6);
      const std::size_t outer = axis == 1 ? 4 : 7, inner = axis == 1 ? 7 : 4;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < inner; ++i) s += axis == 1 ? p.at(o, i) : p.at(i, o);
        EXPECT_NEAR(s, 1.0, 1e-6);
      }
      for (double v : p.values()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
      }
    }
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Tensor x = random_leaf({3, 5}, rng);
    Tensor w = normal_tensor({3, 5}, 1.0, rng);
    for (int axis : {0, 1}) EXPECT_LT(fd_rel_error([&] { return sum(softmax(x, axis) * w); }, {x}), 1e-6);
    Tensor v = random_leaf({5}, rng);
    Tensor u = normal_tensor({5}, 1.0, rng);
    EXPECT_LT(fd_rel_error([&] { return sum(log_softmax(v) * u); }, {v}), 1e-6);
  }
}

TEST(AvgPoolRows, Examples) {
  Tensor x({2, 2}, std::vector<double>{1, 3, 3, 1});
  auto m = avg_pool_rows(x);
  EXPECT_EQ(m.at(0), 2.0);
  EXPECT_EQ(m.at(1), 2.0);
  Tensor same({4, 3}, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) same.mutable_values()[i * 3 + j] = static_cast<double>(j) - 0.5;
  auto r = avg_pool_rows(same);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.at(j), static_cast<double>(j) - 0.5);
}

TEST(Gelu, ZeroAndKnownValue) {
  EXPECT_EQ(gelu(Tensor({1}, 0.0)).item(), 0.0);
  const double x = 1.3;
  const double expected = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
  EXPECT_NEAR(gelu(Tensor({1}, x)).item(), expected, 1e-15);
}

TEST(LayerNorm, NormalizesRows) {
  Rng rng(1);
  Tensor x = normal_tensor({5, 16}, 3.0, rng);
  auto y = layer_norm(x, Tensor({16}, 1.0), Tensor({16}, 0.0));
  for (std::size_t r = 0; r < 5; ++r) {
    double mu = 0.0, var = 0.0;
    for (std::size_t c = 0; c < 16; ++c) mu += y.at(r, c);
    mu /= 16.0;
    for (std::size_t c = 0; c < 16; ++c) var += (y.at(r, c) - mu) * (y.at(r, c) - mu);
    var /= 16.0;
    EXPECT_NEAR(mu, 0.0, 1e-5);
    EXPECT_NEAR(var, 1.0, 1e-5);
  }
}

TEST(ElementwiseOps, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Tensor a = random_leaf({3, 4}, rng), b = random_leaf({3, 4}, rng), v = random_leaf({4}, rng);
    Tensor g = random_leaf({4}, rng), be = random_leaf({4}, rng);
    Tensor w = normal_tensor({3, 4}, 1.0, rng);
    EXPECT_LT(fd_rel_error([&] { return sum((a + b) * w - a * b + add(a, v) * 0.5); }, {a, b, v}), 1e-6);
    EXPECT_LT(fd_rel_error([&] { return sum(gelu(a) * w); }, {a}), 1e-6);
    EXPECT_LT(fd_rel_error([&] { return sum(layer_norm(a, g, be) * w); }, {a, g, be}), 1e-6);
    EXPECT_LT(fd_rel_error([&] { return sum(normalize_rows(a) * w); }, {a}), 1e-6);
    EXPECT_LT(fd_rel_error([&] { return sum(transpose(a) * transpose(w)); }, {a}), 1e-6);
    EXPECT_LT(fd_rel_error([&] { return mean(avg_pool_rows(a) * v); }, {a, v}), 1e-6);
  }
}

TEST(RowOps, GatherSliceConcatGradients) {
  Rng rng(9);
  Tensor a = random_leaf({4, 3}, rng), b = random_leaf({2, 3}, rng), v = random_leaf({3}, rng);
  const std::vector<std::size_t> idx{3, 0, 3};
  Tensor w = normal_tensor({3, 3}, 1.0, rng);
  EXPECT_LT(fd_rel_error([&] { return sum(gather_rows(a, idx) * w); }, {a}), 1e-6);
  Tensor w2 = normal_tensor({2, 3}, 1.0, rng);
  EXPECT_LT(fd_rel_error([&] { return sum(slice_rows(a, 1, 2) * w2); }, {a}), 1e-6);
  Tensor w3 = normal_tensor({7, 3}, 1.0, rng);
  EXPECT_LT(fd_rel_error(
                [&] {
                  const Tensor parts[] = {a, v, b};
                  return sum(concat_rows(parts) * w3);
                },
                {a, b, v}),
            1e-6);
  EXPECT_LT(fd_rel_error([&] { return pick(row(a, 2), 1) * pick(v, 0); }, {a, v}), 1e-6);
}

TEST(NormalizeRows, ZeroRowIsNamed) {
  Tensor x({2, 2}, std::vector<double>{1, 0, 0, 0});
  try {
    normalize_rows(x);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Add, RowBroadcastAndMismatch) {
  Tensor x({2, 2}, std::vector<double>{1, 2, 3, 4});
  Tensor v({2}, std::vector<double>{10, 20});
  auto y = add(x, v);
  EXPECT_EQ(y.at(1, 1), 24.0);
  EXPECT_THROW(add(x, Tensor({3})), DimensionError);
}

TEST(AllFinite, DetectsInfinity) {
  Tensor x({2}, 1.0);
  EXPECT_TRUE(all_finite(x));
  x.mutable_values()[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(all_finite(x));
}

}  // namespace
}  // namespace flowclip
