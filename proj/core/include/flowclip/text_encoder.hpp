// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowclip/nn.hpp"
#include "flowclip/tokenizer.hpp"
#include "flowclip/video_encoder.hpp"

namespace flowclip {

inline constexpr std::size_t kPromptLength = 77;

/// H learnable context vectors shared by every class prompt.
struct PromptState {
  Tensor context;  // H x D
  std::string init_text;

  std::size_t length() const { return context.rows(); }
};

/// Row h is the embedding of the h-th of the last H tokens of `init_text`
/// (the words nearest the class name); missing rows are filled with the PAD
/// embedding. Throws ConfigError on empty text, H == 0 or H > kMaxPromptSlots.
PromptState init_prompts(std::string_view init_text, const TokenTable& table, std::size_t prompt_len);

/// Bottleneck adapter turning motion cues into a prompt offset.
struct MotionAdapterParams {
  Linear down;  // D x d_mid
  Linear up;    // d_mid x D, zero-initialized
};

MotionAdapterParams make_motion_adapter(std::size_t dim, std::size_t mid, Rng& rng);

/// offset = W_up^T gelu(W_down^T mean_rows(M) + b_down) + b_up.
Tensor adapt_motion(const MotionCues& motion, const MotionAdapterParams& params);

/// [SOS][P_1 + o]...[P_H + o][class tokens][.][EOS][PAD...], 77 rows.
struct PromptSequence {
  Tensor rows;  // kPromptLength x D
  std::size_t eos_position = 0;
  std::pair<std::size_t, std::size_t> class_span;  // [start, end)
};

/// `offset` may be undefined (no motion conditioning). Throws ConfigError
/// naming the class when the prompt does not fit in 77 slots.
PromptSequence assemble_prompt(const PromptState& state, const Tensor& offset, std::string_view class_name,
                               const TokenTable& table);
PromptSequence assemble_prompt(const PromptState& state, const Tensor& offset,
                               std::span<const std::uint32_t> class_tokens, const TokenTable& table,
                               std::string_view class_name = {});

/// Frozen stand-in for a pretrained text tower: positional table, causal
/// pre-norm blocks, final layer norm and projection read at the EOS slot.
struct FrozenTextTower {
  Tensor positional;  // kPromptLength x D
  std::vector<AttentionBlockParams> blocks;
  LayerNormParams ln_final;
  Tensor projection;  // D x D
};

/// Seeded random weights with stddev 1/sqrt(D); no tensor requires grad.
FrozenTextTower make_text_tower(std::size_t dim, std::size_t heads, std::size_t expansion, std::uint64_t seed,
                                std::size_t depth = 2);

std::vector<NamedTensor> tower_tensors(const FrozenTextTower& tower);

enum class TowerSpan {
  /// Runs only rows [0, eos]. Exact, since the causal mask keeps later rows
  /// from reaching the EOS slot.
  kThroughEos,
  /// Runs all 77 rows.
  kFull,
};

/// D-dim class representation read at seq.eos_position.
Tensor encode_text(const PromptSequence& seq, const FrozenTextTower& tower, TowerSpan span = TowerSpan::kThroughEos);

struct TextBank {
  Tensor reps;  // K x D
};

/// Row i encodes the prompt for class i. Context and offset are shared by
/// every class.
TextBank encode_all_classes(const PromptState& state, const Tensor& offset,
                            std::span<const std::vector<std::uint32_t>> class_tokens, const TokenTable& table,
                            const FrozenTextTower& tower);
TextBank encode_all_classes(const PromptState& state, const Tensor& offset, std::span<const std::string> classes,
                            const TokenTable& table, const FrozenTextTower& tower);

}  // namespace flowclip
