// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "flowclip/error.hpp"
#include "flowclip/objective.hpp"
#include "flowclip/ops.hpp"
#include "test_util.hpp"

namespace flowclip {
namespace {

// Unit vector v and a bank whose rows have cosine c_i with v.
std::pair<TextBank, VideoRep> bank_with_cosines(const std::vector<double>& cosines) {
  const std::size_t k = cosines.size();
  Tensor reps({k, 3}, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    reps.mutable_values()[i * 3 + 0] = cosines[i];
    reps.mutable_values()[i * 3 + 1] = std::sqrt(1.0 - cosines[i] * cosines[i]);
  }
  return {TextBank{reps}, VideoRep{Tensor({3}, std::vector<double>{1.0, 0.0, 0.0})}};
}

TEST(Match, TwoClassExample) {
  const auto [bank, video] = bank_with_cosines({0.2, 0.1});
  const auto dist = match_probabilities(bank, video, 0.07);
  const double e0 = std::exp(0.2 / 0.07), e1 = std::exp(0.1 / 0.07);
  EXPECT_NEAR(dist.probs.at(0), e0 / (e0 + e1), 1e-12);
  EXPECT_NEAR(dist.probs.at(0), 0.8067, 1e-3);
  EXPECT_NEAR(dist.probs.at(1), 0.1933, 1e-3);
  EXPECT_NEAR(dist.logits.at(0), 0.2, 1e-15);
}

TEST(Match, SingleClassAndIdenticalClasses) {
  Rng rng(0);
  VideoRep v{normal_tensor({6}, 1.0, rng)};
  EXPECT_EQ(match_probabilities(TextBank{reshape(v.value, {1, 6})}, v).probs.item(), 1.0);
  const std::vector<std::size_t> idx(4, 0);
  TextBank same{gather_rows(reshape(v.value * 2.5, {1, 6}), idx)};
  for (double p : match_probabilities(same, v).probabilities()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(Match, NormalizedRankPreservingAndScaleInvariant) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    TextBank bank{normal_tensor({7, 10}, 1.0, rng)};
    VideoRep video{normal_tensor({10}, 1.0, rng)};
    const auto base = match_probabilities(bank, video, 0.07);
    double s = 0.0;
    for (double p : base.probabilities()) {
      EXPECT_GT(p, 0.0);
      s += p;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
    std::vector<std::size_t> order(7);
    std::iota(order.begin(), order.end(), 0);
    auto rank = [&order](const std::vector<double>& p) {
      auto o = order;
      std::stable_sort(o.begin(), o.end(), [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
      return o;
    };
    const auto base_rank = rank(base.probabilities());
    EXPECT_EQ(base_rank, rank(std::vector<double>(base.logits.values().begin(), base.logits.values().end())));
    for (double tau : {0.01, 1.0}) EXPECT_EQ(rank(match_probabilities(bank, video, tau).probabilities()), base_rank);
    TextBank scaled_bank{bank.reps.detach()};
    for (std::size_t d = 0; d < 10; ++d) scaled_bank.reps.mutable_values()[3 * 10 + d] *= 4.0;
    const auto scaled = match_probabilities(scaled_bank, VideoRep{video.value * 0.3}, 0.07);
    EXPECT_LE(testing::max_abs_diff(scaled.probs, base.probs), 1e-12);
  }
}

TEST(Match, PermutingClassesPermutesProbs) {
  Rng rng(1);
  TextBank bank{normal_tensor({4, 5}, 1.0, rng)};
  VideoRep video{normal_tensor({5}, 1.0, rng)};
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  const auto a = match_probabilities(bank, video);
  const auto b = match_probabilities(TextBank{gather_rows(bank.reps, perm)}, video);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(b.probs.at(i), a.probs.at(perm[i]), 1e-15);
    EXPECT_NEAR(nce_loss(b, i).item(), nce_loss(a, perm[i]).item(), 1e-12);
  }
}

TEST(Match, Errors) {
  Rng rng(2);
  TextBank bank{normal_tensor({2, 3}, 1.0, rng)};
  EXPECT_THROW(match_probabilities(bank, VideoRep{Tensor({3}, 0.0)}), NumericError);
  EXPECT_THROW(match_probabilities(bank, VideoRep{Tensor({3}, 1.0)}, 0.0), ConfigError);
  EXPECT_THROW(match_probabilities(bank, VideoRep{Tensor({3}, 1.0)}, -1.0), ConfigError);
  bank.reps.mutable_values()[3] = bank.reps.mutable_values()[4] = bank.reps.mutable_values()[5] = 0.0;
  try {
    match_probabilities(bank, VideoRep{Tensor({3}, 1.0)});
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
}

TEST(Nce, KnownValues) {
  const auto [bank, video] = bank_with_cosines({0.5, 0.5, 0.5, 0.5});
  const auto uniform = match_probabilities(bank, video);
  EXPECT_NEAR(nce_loss(uniform, 2).item(), std::log(4.0), 1e-12);
  EXPECT_NEAR(nce_loss(uniform, 2).item(), 1.3863, 1e-4);
  EXPECT_THROW(nce_loss(uniform, 4), ConfigError);
  // K=1: p = 1, loss 0.
  const auto [one, v1] = bank_with_cosines({0.3});
  EXPECT_EQ(nce_loss(match_probabilities(one, v1), 0).item(), 0.0);
}

TEST(Nce, NonNegative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto dist = match_probabilities(TextBank{normal_tensor({5, 4}, 1.0, rng)}, VideoRep{normal_tensor({4}, 1.0, rng)});
    for (std::size_t k = 0; k < 5; ++k) EXPECT_GE(nce_loss(dist, k).item(), 0.0);
  }
}

TEST(Nce, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    Tensor reps = testing::random_leaf({4, 6}, rng);
    Tensor v = testing::random_leaf({6}, rng);
    const std::size_t label = rng.below(4);
    EXPECT_LT(testing::fd_rel_error([&] { return nce_loss(match_probabilities(TextBank{reps}, VideoRep{v}), label); },
                                    {reps, v}),
              1e-4);
  }
}

TEST(Nce, LogitGradientIsProbsMinusOneHotOverTau) {
  Rng rng(3);
  Tensor reps = normal_tensor({3, 4}, 1.0, rng);
  Tensor v = normal_tensor({4}, 1.0, rng);
  const double tau = 0.07;
  const auto dist = match_probabilities(TextBank{reps}, VideoRep{v}, tau);
  // Chain through cosine: d cos_i / d v = (t_i/|t_i| - cos_i v/|v|) / |v|.
  double vn = 0.0;
  for (double x : v.values()) vn += x * x;
  vn = std::sqrt(vn);
  const std::size_t label = 1;
  std::vector<double> expected(4, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    double tn = 0.0;
    for (std::size_t d = 0; d < 4; ++d) tn += reps.at(i, d) * reps.at(i, d);
    tn = std::sqrt(tn);
    const double g = (dist.probs.at(i) - (i == label ? 1.0 : 0.0)) / tau;
    for (std::size_t d = 0; d < 4; ++d) {
      expected[d] += g * (reps.at(i, d) / tn - dist.logits.at(i) * v.at(d) / vn) / vn;
    }
  }
  Tensor leaf = v.detach();
  leaf.set_requires_grad(true);
  backward(nce_loss(match_probabilities(TextBank{reps}, VideoRep{leaf}, tau), label));
  const auto got = leaf.grad();
  for (std::size_t d = 0; d < 4; ++d) EXPECT_NEAR(got[d], expected[d], 1e-10);
}

}  // namespace
}  // namespace flowclip
