// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowclip/container.hpp"
#include "flowclip/manifest.hpp"

namespace flowclip {

enum class SynthRegime {
  /// Frames are class mean + isotropic noise; a mean-pooled frame already
  /// identifies the class.
  kStaticSeparable,
  /// Every video draws T frames whose in-plane coordinates are random; the
  /// class only decides the order the frames are played in (ascending along
  /// one of K directions in a fixed 2-D plane). The unordered frame set is
  /// independent of the class.
  kMotionOnly,
};

struct SynthConfig {
  SynthRegime regime = SynthRegime::kStaticSeparable;
  std::size_t classes = 5;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 10;
  std::size_t frames = 8;
  std::size_t dim = 64;
  std::size_t views = 1;
  std::uint64_t seed = 0;
  /// Per-frame isotropic noise.
  double noise = 1.0;
  /// Static regime: stddev of the class means. Motion regime: in-plane
  /// amplitude of the frame trajectory.
  double signal = 1.0;
};

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<FrameFeatureSequence> records;
};

SynthRegime parse_regime(const std::string& name);
std::string regime_name(SynthRegime regime);

/// Distinct action-like class names ("walk", "run", "brush hair", ...).
std::vector<std::string> synthetic_class_names(std::size_t count);

/// Throws ConfigError for K < 2, T < 2, zero dims or counts.
void validate_synth_config(const SynthConfig& config);

/// In-memory dataset; records are ordered train then test, views adjacent.
/// Every record lives in the file named "features.mcfv".
SynthDataset synthesize_dataset(const SynthConfig& config);

/// Writes features.mcfv and manifest.json into `dir` and returns the
/// manifest (with base_dir set).
DatasetManifest write_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& dir);

/// T x D frames of one motion-only video. The content (which frames occur)
/// depends only on `content_seed`; `label` only permutes the rows.
std::vector<float> motion_only_frames(std::uint64_t content_seed, std::size_t label, const SynthConfig& config);

}  // namespace flowclip
