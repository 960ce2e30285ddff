// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "flowclip/text_encoder.hpp"
#include "flowclip/video_encoder.hpp"

namespace flowclip {

inline constexpr double kDefaultTemperature = 0.07;

/// K-way matching distribution of one video against a class bank.
struct MatchDistribution {
  Tensor logits;     // cosine similarities, before temperature
  Tensor log_probs;  // log softmax(logits / tau)
  Tensor probs;      // softmax(logits / tau)
  double tau = kDefaultTemperature;

  std::size_t classes() const { return logits.numel(); }
  std::vector<double> probabilities() const;
};

/// logits_i = cos(T'_i, V'); probs = softmax(logits / tau). Throws
/// ConfigError for tau <= 0 and NumericError naming a zero-norm row.
MatchDistribution match_probabilities(const TextBank& bank, const VideoRep& video, double tau = kDefaultTemperature);

/// -log p(label). Throws ConfigError when label >= K.
Tensor nce_loss(const MatchDistribution& dist, std::size_t label);

}  // namespace flowclip
