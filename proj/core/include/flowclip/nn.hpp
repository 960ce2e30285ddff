// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flowclip/random.hpp"
#include "flowclip/tensor.hpp"

namespace flowclip {

/// y = x W + b with W stored as in x out.
struct Linear {
  Tensor weight;
  Tensor bias;
};

struct LayerNormParams {
  Tensor gamma;
  Tensor beta;
};

/// Pre-norm transformer block: multi-head attention followed by a two-layer
/// GELU feed-forward network, each wrapped in a residual connection.
struct AttentionBlockParams {
  Linear q_proj, k_proj, v_proj, o_proj;
  LayerNormParams ln1, ln2;
  Linear ffn1, ffn2;  // D x (expansion*D), (expansion*D) x D
  std::size_t heads = 1;
  std::size_t expansion = 1;

  std::size_t dim() const { return q_proj.weight.rows(); }
};

struct BlockInit {
  double stddev = 0.02;
  /// Zero o_proj and ffn2 so the block starts as the identity map.
  bool zero_residual_outputs = true;
};

Linear make_linear(std::size_t in, std::size_t out, double stddev, Rng& rng);
Linear make_zero_linear(std::size_t in, std::size_t out);
LayerNormParams make_layer_norm(std::size_t dim);

/// Throws ConfigError unless dim is divisible by heads.
AttentionBlockParams make_attention_block(std::size_t dim, std::size_t heads, std::size_t expansion, Rng& rng,
                                          BlockInit init = {});

Tensor linear(const Tensor& x, const Linear& layer);
Tensor layer_norm(const Tensor& x, const LayerNormParams& ln);

/// Scaled dot-product attention over `heads` column groups of q (n x D),
/// k and v (m x D), with scale 1/sqrt(D/heads). With `causal`, query i only
/// attends to keys j <= i. Fused op with its own backward rule.
Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                            bool causal = false);

/// Attention probabilities (heads x n x m, flattened) for inspection.
std::vector<double> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads, bool causal = false);

/// h = x + O(MHA(Q(LN1 x), K(LN1 ctx), V(LN1 ctx))); out = h + FFN(LN2 h).
Tensor attention_block(const Tensor& x, const Tensor& ctx, const AttentionBlockParams& p, bool causal = false);
Tensor self_attention_block(const Tensor& x, const AttentionBlockParams& p, bool causal = false);

void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const Linear& layer);
void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const LayerNormParams& ln);
void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const AttentionBlockParams& p);

}  // namespace flowclip
