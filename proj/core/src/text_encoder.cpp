// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/text_encoder.hpp"

#include <cmath>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

PromptState init_prompts(std::string_view init_text, const TokenTable& table, std::size_t prompt_len) {
  if (prompt_len == 0) throw ConfigError("prompt length must be positive");
  if (prompt_len > kMaxPromptSlots) {
    throw ConfigError("prompt length " + std::to_string(prompt_len) + " exceeds " + std::to_string(kMaxPromptSlots) +
                      " slots");
  }
  auto ids = tokenize(init_text, table);
  std::vector<std::uint32_t> rows;
  if (ids.size() >= prompt_len) {
    rows.assign(ids.end() - static_cast<std::ptrdiff_t>(prompt_len), ids.end());
  } else {
    rows = ids;
    rows.resize(prompt_len, table.pad);
  }
  PromptState state{embed(table, rows).detach(), std::string(init_text)};
  state.context.set_requires_grad(true);
  return state;
}

MotionAdapterParams make_motion_adapter(std::size_t dim, std::size_t mid, Rng& rng) {
  if (mid == 0 || mid >= dim) {
    throw ConfigError("adapter bottleneck " + std::to_string(mid) + " must lie in [1, " + std::to_string(dim) + ")");
  }
  return {make_linear(dim, mid, 0.02, rng), make_zero_linear(mid, dim)};
}

Tensor adapt_motion(const MotionCues& motion, const MotionAdapterParams& params) {
  if (!motion.values.defined()) throw ConfigError("adapt_motion needs motion cues");
  return linear(gelu(linear(avg_pool_rows(motion.values), params.down)), params.up);
}

PromptSequence assemble_prompt(const PromptState& state, const Tensor& offset,
                               std::span<const std::uint32_t> class_tokens, const TokenTable& table,
                               std::string_view class_name) {
  const std::size_t h = state.length();
  const std::size_t used = 1 + h + class_tokens.size() + 1 + 1;
  if (class_tokens.empty()) throw ConfigError("class '" + std::string(class_name) + "' has no tokens");
  if (used > kPromptLength) {
    throw ConfigError("prompt for class '" + std::string(class_name) + "' needs " + std::to_string(used) +
                      " slots, only " + std::to_string(kPromptLength) + " available");
  }
  const std::uint32_t sos = table.sos;
  const auto period = tokenize(".", table);
  std::vector<std::uint32_t> tail(period.begin(), period.end());
  tail.push_back(table.eos);
  std::vector<std::uint32_t> pads(kPromptLength - used, table.pad);

  std::vector<Tensor> parts;
  parts.push_back(embed(table, std::span(&sos, 1)));
  parts.push_back(offset.defined() ? add(state.context, offset) : state.context);
  parts.push_back(embed(table, class_tokens));
  parts.push_back(embed(table, tail));
  if (!pads.empty()) parts.push_back(embed(table, pads));

  PromptSequence seq;
  seq.rows = concat_rows(parts);
  seq.class_span = {1 + h, 1 + h + class_tokens.size()};
  seq.eos_position = used - 1;
  return seq;
}

PromptSequence assemble_prompt(const PromptState& state, const Tensor& offset, std::string_view class_name,
                               const TokenTable& table) {
  const auto ids = tokenize(class_name, table);
  return assemble_prompt(state, offset, ids, table, class_name);
}

FrozenTextTower make_text_tower(std::size_t dim, std::size_t heads, std::size_t expansion, std::uint64_t seed,
                                std::size_t depth) {
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dim));
  FrozenTextTower tower;
  tower.positional = normal_tensor({kPromptLength, dim}, stddev, rng);
  for (std::size_t i = 0; i < depth; ++i) {
    tower.blocks.push_back(make_attention_block(dim, heads, expansion, rng, {stddev, false}));
  }
  tower.ln_final = make_layer_norm(dim);
  tower.projection = normal_tensor({dim, dim}, stddev, rng);
  for (auto& nt : tower_tensors(tower)) nt.tensor.set_requires_grad(false);
  return tower;
}

std::vector<NamedTensor> tower_tensors(const FrozenTextTower& tower) {
  std::vector<NamedTensor> out;
  out.push_back({"text.positional", tower.positional});
  for (std::size_t i = 0; i < tower.blocks.size(); ++i) append_named(out, "text.block." + std::to_string(i), tower.blocks[i]);
  append_named(out, "text.ln_final", tower.ln_final);
  out.push_back({"text.projection", tower.projection});
  return out;
}

Tensor encode_text(const PromptSequence& seq, const FrozenTextTower& tower, TowerSpan span) {
  if (seq.rows.rank() != 2 || seq.rows.rows() != kPromptLength || seq.eos_position >= kPromptLength) {
    throw DimensionError("encode_text: malformed prompt sequence " + shape_to_string(seq.rows.shape()));
  }
  const std::size_t n = span == TowerSpan::kFull ? kPromptLength : seq.eos_position + 1;
  Tensor h = add(slice_rows(seq.rows, 0, n), slice_rows(tower.positional, 0, n));
  for (const auto& block : tower.blocks) h = self_attention_block(h, block, /*causal=*/true);
  h = layer_norm(h, tower.ln_final);
  return reshape(matmul(slice_rows(h, seq.eos_position, 1), tower.projection), {tower.projection.cols()});
}

TextBank encode_all_classes(const PromptState& state, const Tensor& offset,
                            std::span<const std::vector<std::uint32_t>> class_tokens, const TokenTable& table,
                            const FrozenTextTower& tower) {
  if (class_tokens.empty()) throw ConfigError("no classes to encode");
  std::vector<Tensor> reps;
  reps.reserve(class_tokens.size());
  for (const auto& ids : class_tokens) reps.push_back(encode_text(assemble_prompt(state, offset, ids, table), tower));
  return {concat_rows(reps)};
}

TextBank encode_all_classes(const PromptState& state, const Tensor& offset, std::span<const std::string> classes,
                            const TokenTable& table, const FrozenTextTower& tower) {
  if (classes.empty()) throw ConfigError("no classes to encode");
  std::vector<Tensor> reps;
  reps.reserve(classes.size());
  for (const auto& c : classes) reps.push_back(encode_text(assemble_prompt(state, offset, c, table), tower));
  return {concat_rows(reps)};
}

}  // namespace flowclip
