// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"
#include "flowclip/tensor.hpp"

namespace flowclip {
namespace {

TEST(Tensor, ConstructsWithShapeAndFill) {
  Tensor t({2, 3}, 1.5);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.numel(), 6u);
  for (double v : t.values()) EXPECT_EQ(v, 1.5);
}

TEST(Tensor, RejectsValueCountMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}

TEST(Tensor, RejectsZeroExtent) { EXPECT_THROW(Tensor({0, 4}), DimensionError); }

TEST(Tensor, HandlesShareStorage) {
  Tensor a({2}, 0.0);
  Tensor b = a;
  b.mutable_values()[0] = 7.0;
  EXPECT_EQ(a.at(0), 7.0);
  Tensor c = a.detach();
  c.mutable_values()[1] = 3.0;
  EXPECT_EQ(a.at(1), 0.0);
}

TEST(Tensor, OnlyLeavesMayToggleRequiresGrad) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  Tensor y = x * 2.0;
  EXPECT_FALSE(y.is_leaf());
  EXPECT_THROW(y.set_requires_grad(false), Error);
}

TEST(Backward, SumGivesOnes) {
  Tensor x({3}, std::vector<double>{1, -2, 5});
  x.set_requires_grad(true);
  backward(sum(x));
  EXPECT_EQ(x.grad(), (std::vector<double>{1, 1, 1}));
}

TEST(Backward, SquareGivesTwoX) {
  Tensor x({3}, std::vector<double>{1, -2, 5});
  x.set_requires_grad(true);
  backward(sum(x * x));
  EXPECT_EQ(x.grad(), (std::vector<double>{2, -4, 10}));
}

TEST(Backward, NonScalarLossThrows) {
  Tensor x({3}, 1.0);
  x.set_requires_grad(true);
  EXPECT_THROW(backward(x * 2.0), DimensionError);
}

TEST(Backward, GradientsAccumulateAcrossCalls) {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  backward(x * 2.0);
  backward(x * 2.0);
  EXPECT_EQ(x.grad()[0], 4.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
}

TEST(Backward, SharedSubexpressionMatchesExpandedTree) {
  Tensor x({2, 2}, std::vector<double>{0.5, -1.0, 2.0, 0.25});
  x.set_requires_grad(true);
  Tensor shared = gelu(x);
  backward(sum(shared * shared + shared));
  const auto dag = x.grad();

  Tensor y = x.detach();
  y.set_requires_grad(true);
  backward(sum(gelu(y) * gelu(y) + gelu(y)));
  const auto tree = y.grad();
  for (std::size_t i = 0; i < dag.size(); ++i) EXPECT_NEAR(dag[i], tree[i], 1e-14);
}

TEST(Backward, TapeVisitsEachNodeOnce) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  Tensor a = x * 3.0;
  Tensor b = a + a;
  Tensor loss = sum(b + a);
  // x, a, b, b + a, sum
  EXPECT_EQ(Tape::record(loss).size(), 5u);
  backward(loss);
  EXPECT_EQ(x.grad(), (std::vector<double>{9, 9}));
}

TEST(Backward, NoGradGuardSkipsRecording) {
  Tensor x({2}, 1.0);
  x.set_requires_grad(true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    Tensor y = x * 2.0;
    EXPECT_TRUE(y.is_leaf());
    EXPECT_FALSE(y.requires_grad());
  }
  EXPECT_TRUE(grad_enabled());
}

TEST(Backward, DeepChainDoesNotOverflowStack) {
  Tensor x = Tensor::scalar(1.0);
  x.set_requires_grad(true);
  Tensor y = x;
  for (int i = 0; i < 100000; ++i) y = y * 1.0;
  backward(y);
  EXPECT_EQ(x.grad()[0], 1.0);
}

}  // namespace
}  // namespace flowclip
