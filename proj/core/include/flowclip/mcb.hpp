// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "flowclip/nn.hpp"
#include "flowclip/text_encoder.hpp"
#include "flowclip/video_encoder.hpp"

namespace flowclip {

/// Single-head pre-norm cross attention. The output projection starts at
/// zero, so a fresh block contributes nothing.
struct CrossAttentionParams {
  LayerNormParams ln_query;
  LayerNormParams ln_context;
  Linear q_proj, k_proj, v_proj, o_proj;
};

struct McbParams {
  CrossAttentionParams sma;  // text queries video
  CrossAttentionParams saa;  // video queries text
};

CrossAttentionParams make_cross_attention(std::size_t dim, Rng& rng);
McbParams make_mcb_params(std::size_t dim, Rng& rng);
std::vector<NamedTensor> mcb_tensors(const McbParams& params);

/// O(softmax(Q K^T / sqrt(D)) V) for query n x D and context m x D; no
/// residual.
Tensor cross_attention(const Tensor& query, const Tensor& context, const CrossAttentionParams& params);

/// Semantic matching: every class row queries the single video key. K x D.
Tensor sma(const TextBank& text, const VideoRep& video, const CrossAttentionParams& params);
/// Semantic allocating: the video queries the K class rows. D.
Tensor saa(const VideoRep& video, const TextBank& text, const CrossAttentionParams& params);

struct Communicated {
  TextBank text;
  VideoRep video;
};

/// T' = T + sma(T, V); V' = V + saa(V, T).
Communicated communicate(const TextBank& text, const VideoRep& video, const McbParams& params);

}  // namespace flowclip
