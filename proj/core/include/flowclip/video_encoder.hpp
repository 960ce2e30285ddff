// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "flowclip/nn.hpp"
#include "flowclip/tensor.hpp"

namespace flowclip {

/// Frame pairs (i, j), 1-based, with 1 <= j - i <= max_step, sorted by (i, j).
struct PairSelection {
  std::size_t frames = 0;
  std::size_t max_step = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t size() const { return pairs.size(); }
};

/// L(T, s) = sum_{d=1..s} (T - d).
std::size_t pair_count(std::size_t frames, std::size_t max_step);

/// Throws ConfigError unless T >= 2 and 1 <= s <= T - 1.
PairSelection select_pairs(std::size_t frames, std::size_t max_step);

/// Row k = frames[j_k] - frames[i_k] (pairs are 1-based).
Tensor compute_differences(const Tensor& frames, const PairSelection& selection);

struct MotionCues {
  Tensor values;  // L x D
};

struct SpatialFeatures {
  Tensor values;  // T x D
};

struct VideoRep {
  Tensor value;  // D
};

struct VideoEncoderConfig {
  std::size_t frames_per_clip = 8;
  std::size_t max_step = 4;
  std::size_t depth = 1;
  std::size_t heads = 8;
  std::size_t ffn_expansion = 2;
  bool motion_stream = true;
};

/// Motion and spatial transformer streams with learned positional tables.
struct MmbParams {
  std::vector<AttentionBlockParams> motion_blocks;
  std::vector<AttentionBlockParams> spatial_blocks;
  Tensor pos_motion;   // L_max x D
  Tensor pos_spatial;  // T_max x D
};

/// Blocks use normal(0, 0.02) projections with zero o_proj/ffn2; positional
/// tables start at zero.
MmbParams make_mmb_params(std::size_t dim, const VideoEncoderConfig& config, Rng& rng);

std::vector<NamedTensor> motion_stream_tensors(const MmbParams& params);
std::vector<NamedTensor> spatial_stream_tensors(const MmbParams& params);

/// Adds pos_motion[0..L) to the differences and runs the motion blocks.
MotionCues motion_stream(const Tensor& diffs, const MmbParams& params);
/// Adds pos_spatial[0..T) to the frames and runs the spatial blocks.
SpatialFeatures spatial_stream(const Tensor& frames, const MmbParams& params);

/// V = mean_rows(M) + mean_rows(S).
VideoRep fuse(const MotionCues& motion, const SpatialFeatures& spatial);

struct EncodedVideo {
  VideoRep video;
  /// Undefined when the motion stream is disabled.
  MotionCues motion;
  SpatialFeatures spatial;
};

/// select_pairs -> compute_differences -> motion/spatial streams -> fuse.
/// With the motion stream disabled, V = mean_rows(S).
EncodedVideo encode_video(const Tensor& frames, const MmbParams& params, const VideoEncoderConfig& config);

}  // namespace flowclip
