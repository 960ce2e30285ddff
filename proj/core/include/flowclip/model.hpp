// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowclip/manifest.hpp"
#include "flowclip/mcb.hpp"
#include "flowclip/metrics.hpp"
#include "flowclip/objective.hpp"
#include "flowclip/text_encoder.hpp"
#include "flowclip/tokenizer.hpp"
#include "flowclip/video_encoder.hpp"

namespace flowclip {

struct TrainConfig {
  std::uint64_t seed = 0;
  double lr0 = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 10;
  /// Total optimizer steps; 0 derives it from epochs and batch size.
  std::size_t steps = 0;
  std::size_t batch_size = 10;
  /// Few-shot: keep this many training videos per class (0 keeps all).
  std::size_t shots = 0;

  std::size_t frames_per_clip = 8;  // T
  std::size_t max_step = 4;         // s
  std::size_t depth = 1;
  std::size_t heads = 8;
  std::size_t ffn_expansion = 2;

  std::size_t prompt_len = 5;  // H
  std::string prompt_init = "a common human action of";
  /// Adapter bottleneck; 0 means D / 8.
  std::size_t adapter_mid = 0;

  std::size_t text_depth = 2;

  bool mmb_motion_stream = true;
  bool map_enabled = true;
  bool mcb_enabled = true;
  /// Keep MCB in evaluate(); false bypasses it at inference only.
  bool mcb_at_inference = true;

  double tau = kDefaultTemperature;
  EvalMode eval_mode = EvalMode::kViewAverage;

  VideoEncoderConfig video_config() const;
  std::size_t adapter_width(std::size_t dim) const;
  /// Motion-conditioned prompts need the motion stream.
  bool motion_prompts() const { return map_enabled && mmb_motion_stream; }
};

/// Throws ConfigError for non-positive sizes, s outside [1, T-1], momentum
/// outside [0, 1), tau <= 0 or lr0 < 0.
void validate_config(const TrainConfig& config);
/// Non-fatal configuration notes (e.g. MAP requested without the motion
/// stream).
std::vector<std::string> config_warnings(const TrainConfig& config);

nlohmann::json config_to_json(const TrainConfig& config);
/// Starts from `base` and overrides the keys present in `j`; unknown keys are
/// rejected.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Trainable parameter groups plus the frozen text tower and token table.
struct ModelState {
  TrainConfig config;
  std::size_t dim = 0;
  std::vector<std::string> classes;
  std::vector<std::vector<std::uint32_t>> class_tokens;

  TokenTable tokens;
  FrozenTextTower tower;

  MmbParams mmb;
  PromptState prompts;
  MotionAdapterParams adapter;
  McbParams mcb;

  std::uint64_t step = 0;
  std::string rng_state;
};

/// Deterministic in (config.seed, dim, classes). Every component is built
/// regardless of the toggles so that one seed yields the same weights for
/// every ablation row.
ModelState init_model(const TrainConfig& config, std::size_t dim, std::vector<std::string> classes);

struct ParamGroup {
  std::string name;
  std::vector<NamedTensor> tensors;

  std::size_t count() const;
};

/// Groups updated by the optimizer under `config`'s toggles.
std::vector<ParamGroup> trainable_groups(const ModelState& state, const TrainConfig& config);
/// Text tower and token table.
std::vector<ParamGroup> frozen_groups(const ModelState& state);
/// Every tensor in the state, trainable or not, in a fixed order.
std::vector<NamedTensor> all_tensors(const ModelState& state);

/// Marks exactly the tensors of trainable_groups(state, config) as requiring
/// gradients.
void apply_trainable_flags(ModelState& state, const TrainConfig& config);

/// FNV-1a over names, shapes and value bits.
std::uint64_t tensor_checksum(std::span<const NamedTensor> tensors);
std::uint64_t frozen_checksum(const ModelState& state);

/// Prompt bank without motion conditioning (shared by every video).
TextBank static_text_bank(const ModelState& state);

struct ForwardOutput {
  MatchDistribution dist;
  EncodedVideo video;
  TextBank bank;   // before MCB
  Tensor offset;   // undefined without motion prompts
};

/// encode_video -> (motion prompts) -> encode_all_classes -> (MCB) -> match.
/// Without the motion stream, V = mean(S) and the offset is zero. With
/// `static_bank`, an unconditioned bank is reused instead of re-encoded.
ForwardOutput forward(const Tensor& frames, const ModelState& state, const TrainConfig& config,
                      const TextBank* static_bank = nullptr);
MatchDistribution forward(const FrameFeatureSequence& view, const ModelState& state, const TrainConfig& config);

EvalReport evaluate(std::span<const Video> videos, const ModelState& state, const TrainConfig& config);

// Checkpoint: "MCKP" 0x01 | u32 json_len | config/meta JSON | u64 step |
// u32 rng_len | rng state | u32 tensor_count | per tensor: u32 name_len, name,
// u32 rank, u32 dims..., binary64 LE values.
void save_checkpoint(const std::filesystem::path& path, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const ModelState& state);
ModelState decode_checkpoint(std::span<const std::uint8_t> bytes);

}  // namespace flowclip
