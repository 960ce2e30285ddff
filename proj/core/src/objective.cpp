// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/objective.hpp"

#include <cmath>
#include <string>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

std::vector<double> MatchDistribution::probabilities() const {
  auto v = probs.values();
  return {v.begin(), v.end()};
}

MatchDistribution match_probabilities(const TextBank& bank, const VideoRep& video, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperature must be positive and finite");
  const Tensor& t = bank.reps;
  const Tensor& v = video.value;
  if (t.rank() != 2 || v.rank() != 1 || t.cols() != v.numel()) {
    throw DimensionError("match_probabilities: bank " + shape_to_string(t.shape()) + " and video " +
                         shape_to_string(v.shape()) + " disagree");
  }
  Tensor tn;
  try {
    tn = normalize_rows(t);
  } catch (const NumericError& e) {
    throw NumericError(std::string("text bank: ") + e.what());
  }
  Tensor vn;
  try {
    vn = normalize_rows(v);
  } catch (const NumericError&) {
    throw NumericError("video representation has zero norm");
  }
  MatchDistribution dist;
  dist.tau = tau;
  dist.logits = reshape(matmul(tn, reshape(vn, {v.numel(), 1})), {t.rows()});
  const Tensor scaled = scale(dist.logits, 1.0 / tau);
  dist.log_probs = log_softmax(scaled);
  dist.probs = softmax(scaled);
  return dist;
}

Tensor nce_loss(const MatchDistribution& dist, std::size_t label) {
  if (label >= dist.classes()) {
    throw ConfigError("label " + std::to_string(label) + " out of range for " + std::to_string(dist.classes()) +
                      " classes");
  }
  return scale(pick(dist.log_probs, label), -1.0);
}

}  // namespace flowclip
