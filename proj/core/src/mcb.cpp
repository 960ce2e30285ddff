// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/mcb.hpp"

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

CrossAttentionParams make_cross_attention(std::size_t dim, Rng& rng) {
  CrossAttentionParams p;
  p.ln_query = make_layer_norm(dim);
  p.ln_context = make_layer_norm(dim);
  p.q_proj = make_linear(dim, dim, 0.02, rng);
  p.k_proj = make_linear(dim, dim, 0.02, rng);
  p.v_proj = make_linear(dim, dim, 0.02, rng);
  p.o_proj = make_zero_linear(dim, dim);
  return p;
}

McbParams make_mcb_params(std::size_t dim, Rng& rng) {
  McbParams p;
  p.sma = make_cross_attention(dim, rng);
  p.saa = make_cross_attention(dim, rng);
  return p;
}

namespace {

void append_cross(std::vector<NamedTensor>& out, const std::string& prefix, const CrossAttentionParams& p) {
  append_named(out, prefix + ".ln_query", p.ln_query);
  append_named(out, prefix + ".ln_context", p.ln_context);
  append_named(out, prefix + ".q_proj", p.q_proj);
  append_named(out, prefix + ".k_proj", p.k_proj);
  append_named(out, prefix + ".v_proj", p.v_proj);
  append_named(out, prefix + ".o_proj", p.o_proj);
}

Tensor as_row(const Tensor& v) { return v.rank() == 1 ? reshape(v, {1, v.numel()}) : v; }

}  // namespace

std::vector<NamedTensor> mcb_tensors(const McbParams& params) {
  std::vector<NamedTensor> out;
  append_cross(out, "mcb.sma", params.sma);
  append_cross(out, "mcb.saa", params.saa);
  return out;
}

Tensor cross_attention(const Tensor& query, const Tensor& context, const CrossAttentionParams& p) {
  const Tensor qn = layer_norm(query, p.ln_query);
  const Tensor cn = layer_norm(context, p.ln_context);
  const Tensor attn =
      multi_head_attention(linear(qn, p.q_proj), linear(cn, p.k_proj), linear(cn, p.v_proj), /*heads=*/1);
  return linear(attn, p.o_proj);
}

Tensor sma(const TextBank& text, const VideoRep& video, const CrossAttentionParams& params) {
  return cross_attention(text.reps, as_row(video.value), params);
}

Tensor saa(const VideoRep& video, const TextBank& text, const CrossAttentionParams& params) {
  const Tensor out = cross_attention(as_row(video.value), text.reps, params);
  return reshape(out, {out.numel()});
}

Communicated communicate(const TextBank& text, const VideoRep& video, const McbParams& params) {
  if (text.reps.rank() != 2 || video.value.rank() != 1 || text.reps.cols() != video.value.numel()) {
    throw DimensionError("communicate: text bank " + shape_to_string(text.reps.shape()) + " and video " +
                         shape_to_string(video.value.shape()) + " disagree");
  }
  return {{add(text.reps, sma(text, video, params.sma))}, {add(video.value, saa(video, text, params.saa))}};
}

}  // namespace flowclip
