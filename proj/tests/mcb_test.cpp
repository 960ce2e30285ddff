// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "flowclip/error.hpp"
#include "flowclip/mcb.hpp"
#include "flowclip/ops.hpp"
#include "test_util.hpp"

namespace flowclip {
namespace {

constexpr std::size_t kDim = 8;

void randomize(CrossAttentionParams& p, Rng& rng) {
  for (auto* ln : {&p.ln_query, &p.ln_context}) {
    for (auto& v : ln->gamma.mutable_values()) v += rng.normal(0.0, 0.1);
    for (auto& v : ln->beta.mutable_values()) v += rng.normal(0.0, 0.1);
  }
  for (auto* l : {&p.q_proj, &p.k_proj, &p.v_proj, &p.o_proj})
    for (auto& v : l->weight.mutable_values()) v = rng.normal(0.0, 0.5);
}

McbParams random_mcb(Rng& rng) {
  auto p = make_mcb_params(kDim, rng);
  randomize(p.sma, rng);
  randomize(p.saa, rng);
  return p;
}

Tensor repeat_row(const Tensor& r, std::size_t k) {
  const std::vector<std::size_t> idx(k, 0);
  return gather_rows(reshape(r, {1, r.numel()}), idx);
}

TEST(Mcb, ZeroInitIsIdentity) {
  Rng rng(0);
  const auto p = make_mcb_params(kDim, rng);
  TextBank t{normal_tensor({3, kDim}, 1.0, rng)};
  VideoRep v{normal_tensor({kDim}, 1.0, rng)};
  for (const Tensor s = sma(t, v, p.sma); double x : s.values()) EXPECT_EQ(x, 0.0);
  for (const Tensor s = saa(v, t, p.saa); double x : s.values()) EXPECT_EQ(x, 0.0);
  const auto c = communicate(t, v, p);
  EXPECT_EQ(c.text.reps.shape(), (Shape{3, kDim}));
  EXPECT_EQ(c.video.value.shape(), (Shape{kDim}));
  EXPECT_EQ(testing::max_abs_diff(c.text.reps, t.reps), 0.0);
  EXPECT_EQ(testing::max_abs_diff(c.video.value, v.value), 0.0);
}

TEST(Mcb, SmaIsRowWiseUnderSingleKey) {
  Rng rng(1);
  const auto p = random_mcb(rng);
  Tensor r = normal_tensor({kDim}, 1.0, rng);
  VideoRep v{normal_tensor({kDim}, 1.0, rng)};
  const auto one = sma(TextBank{repeat_row(r, 1)}, v, p.sma);
  const auto three = sma(TextBank{repeat_row(r, 3)}, v, p.sma);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(testing::max_abs_diff(row(three, k), row(one, 0)), 1e-14);
  // With a single key the attention output is the projected value for every query.
  TextBank t{normal_tensor({4, kDim}, 1.0, rng)};
  const auto out = sma(t, v, p.sma);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_LE(testing::max_abs_diff(row(out, k), row(out, 0)), 1e-14);
}

TEST(Mcb, SaaSingleKeyAndEqualRows) {
  Rng rng(2);
  const auto p = random_mcb(rng);
  Tensor r = normal_tensor({kDim}, 1.0, rng);
  VideoRep v{normal_tensor({kDim}, 1.0, rng)};
  const auto one = saa(v, TextBank{repeat_row(r, 1)}, p.saa);
  const auto five = saa(v, TextBank{repeat_row(r, 5)}, p.saa);
  EXPECT_LE(testing::max_abs_diff(one, five), 1e-14);
  // K=1: o_proj(v_proj(LN(text_row))).
  const auto expected = linear(linear(layer_norm(reshape(r, {1, kDim}), p.saa.ln_context), p.saa.v_proj), p.saa.o_proj);
  EXPECT_LE(testing::max_abs_diff(one, reshape(expected, {kDim})), 1e-14);
}

TEST(Mcb, SaaPermutationInvariantSmaEquivariant) {
  Rng rng(3);
  const auto p = random_mcb(rng);
  TextBank t{normal_tensor({5, kDim}, 1.0, rng)};
  VideoRep v{normal_tensor({kDim}, 1.0, rng)};
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  TextBank tp{gather_rows(t.reps, perm)};
  EXPECT_LE(testing::max_abs_diff(saa(v, t, p.saa), saa(v, tp, p.saa)), 1e-13);
  EXPECT_LE(testing::max_abs_diff(gather_rows(sma(t, v, p.sma), perm), sma(tp, v, p.sma)), 1e-13);
}

TEST(Mcb, RejectsMismatchedDims) {
  Rng rng(4);
  const auto p = make_mcb_params(kDim, rng);
  EXPECT_THROW(communicate(TextBank{Tensor({2, kDim})}, VideoRep{Tensor({kDim + 1})}, p), DimensionError);
}

TEST(Mcb, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    auto p = random_mcb(rng);
    TextBank t{testing::random_leaf({3, kDim}, rng)};
    VideoRep v{testing::random_leaf({kDim}, rng)};
    std::vector<Tensor> wrt{t.reps, v.value};
    for (auto& nt : mcb_tensors(p)) {
      nt.tensor.set_requires_grad(true);
      wrt.push_back(nt.tensor);
    }
    Tensor wt = normal_tensor({3, kDim}, 1.0, rng), wv = normal_tensor({kDim}, 1.0, rng);
    EXPECT_LT(testing::fd_rel_error(
                  [&] {
                    const auto c = communicate(t, v, p);
                    return sum(c.text.reps * wt) + sum(c.video.value * wv);
                  },
                  wrt),
              1e-4);
  }
}

TEST(Mcb, GradientsReachBothModalities) {
  Rng rng(5);
  auto p = random_mcb(rng);
  TextBank t{testing::random_leaf({3, kDim}, rng)};
  VideoRep v{testing::random_leaf({kDim}, rng)};
  // Cross terms only: text through saa, video through sma.
  backward(sum(sma(t, v, p.sma) * normal_tensor({3, kDim}, 1.0, rng)) +
           sum(saa(v, t, p.saa) * normal_tensor({kDim}, 1.0, rng)));
  double gt = 0.0, gv = 0.0;
  for (double g : t.reps.grad()) gt += std::abs(g);
  for (double g : v.value.grad()) gv += std::abs(g);
  EXPECT_GT(gt, 0.0);
  EXPECT_GT(gv, 0.0);
}

}  // namespace
}  // namespace flowclip
