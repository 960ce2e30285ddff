// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/video_encoder.hpp"

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

std::size_t pair_count(std::size_t frames, std::size_t max_step) {
  std::size_t total = 0;
  for (std::size_t d = 1; d <= max_step && d < frames; ++d) total += frames - d;
  return total;
}

PairSelection select_pairs(std::size_t frames, std::size_t max_step) {
  if (frames < 2) throw ConfigError("pair selection needs at least 2 frames, got " + std::to_string(frames));
  if (max_step < 1 || max_step > frames - 1) {
    throw ConfigError("max temporal step " + std::to_string(max_step) + " outside [1, " +
                      std::to_string(frames - 1) + "]");
  }
  PairSelection sel{frames, max_step, {}};
  sel.pairs.reserve(pair_count(frames, max_step));
  for (std::size_t i = 1; i <= frames; ++i)
    for (std::size_t j = i + 1; j <= std::min(frames, i + max_step); ++j) sel.pairs.emplace_back(i, j);
  return sel;
}

Tensor compute_differences(const Tensor& frames, const PairSelection& selection) {
  if (frames.rank() != 2 || frames.rows() != selection.frames) {
    throw DimensionError("compute_differences: frames " + shape_to_string(frames.shape()) + " do not match a " +
                         std::to_string(selection.frames) + "-frame selection");
  }
  std::vector<std::size_t> later, earlier;
  later.reserve(selection.size());
  earlier.reserve(selection.size());
  for (const auto& [i, j] : selection.pairs) {
    if (i < 1 || j > selection.frames || i >= j) {
      throw Error("compute_differences: invalid pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    earlier.push_back(i - 1);
    later.push_back(j - 1);
  }
  return sub(gather_rows(frames, later), gather_rows(frames, earlier));
}

MmbParams make_mmb_params(std::size_t dim, const VideoEncoderConfig& config, Rng& rng) {
  if (config.depth == 0) throw ConfigError("transformer depth must be positive");
  // Validates T and s.
  const auto sel = select_pairs(config.frames_per_clip, config.max_step);
  MmbParams p;
  for (std::size_t d = 0; d < config.depth; ++d) {
    p.motion_blocks.push_back(make_attention_block(dim, config.heads, config.ffn_expansion, rng));
  }
  for (std::size_t d = 0; d < config.depth; ++d) {
    p.spatial_blocks.push_back(make_attention_block(dim, config.heads, config.ffn_expansion, rng));
  }
  p.pos_motion = Tensor({sel.size(), dim}, 0.0);
  p.pos_spatial = Tensor({config.frames_per_clip, dim}, 0.0);
  p.pos_motion.set_requires_grad(true);
  p.pos_spatial.set_requires_grad(true);
  return p;
}

std::vector<NamedTensor> motion_stream_tensors(const MmbParams& params) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params.motion_blocks.size(); ++i) {
    append_named(out, "mmb.motion." + std::to_string(i), params.motion_blocks[i]);
  }
  out.push_back({"mmb.motion.pos", params.pos_motion});
  return out;
}

std::vector<NamedTensor> spatial_stream_tensors(const MmbParams& params) {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < params.spatial_blocks.size(); ++i) {
    append_named(out, "mmb.spatial." + std::to_string(i), params.spatial_blocks[i]);
  }
  out.push_back({"mmb.spatial.pos", params.pos_spatial});
  return out;
}

namespace {

Tensor run_stream(const Tensor& x, const Tensor& pos, const std::vector<AttentionBlockParams>& blocks,
                  const char* name) {
  if (x.rank() != 2 || x.cols() != pos.cols()) {
    throw DimensionError(std::string(name) + " stream: input " + shape_to_string(x.shape()) +
                         " does not match positional table " + shape_to_string(pos.shape()));
  }
  if (x.rows() > pos.rows()) {
    throw ConfigError(std::string(name) + " positional table has " + std::to_string(pos.rows()) + " rows, input has " +
                      std::to_string(x.rows()));
  }
  Tensor h = add(x, slice_rows(pos, 0, x.rows()));
  for (const auto& block : blocks) h = self_attention_block(h, block);
  return h;
}

}  // namespace

MotionCues motion_stream(const Tensor& diffs, const MmbParams& params) {
  return {run_stream(diffs, params.pos_motion, params.motion_blocks, "motion")};
}

SpatialFeatures spatial_stream(const Tensor& frames, const MmbParams& params) {
  return {run_stream(frames, params.pos_spatial, params.spatial_blocks, "spatial")};
}

VideoRep fuse(const MotionCues& motion, const SpatialFeatures& spatial) {
  return {add(avg_pool_rows(motion.values), avg_pool_rows(spatial.values))};
}

EncodedVideo encode_video(const Tensor& frames, const MmbParams& params, const VideoEncoderConfig& config) {
  if (frames.rank() != 2 || frames.rows() != config.frames_per_clip) {
    throw DimensionError("encode_video: expected " + std::to_string(config.frames_per_clip) + " frames, got " +
                         shape_to_string(frames.shape()));
  }
  EncodedVideo out;
  out.spatial = spatial_stream(frames, params);
  if (!config.motion_stream) {
    out.video = {avg_pool_rows(out.spatial.values)};
    return out;
  }
  const auto sel = select_pairs(config.frames_per_clip, config.max_step);
  out.motion = motion_stream(compute_differences(frames, sel), params);
  out.video = fuse(out.motion, out.spatial);
  return out;
}

}  // namespace flowclip
