// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flowclip/manifest.hpp"
#include "flowclip/model.hpp"

namespace flowclip {

struct TrainResult {
  ModelState state;
  std::vector<double> loss_trace;  // batch-mean loss per step
  std::vector<double> lr_trace;
  std::vector<std::string> warnings;
};

/// Number of optimizer steps `config` implies for `samples` training views.
std::size_t total_steps(const TrainConfig& config, std::size_t samples);

/// SGD with momentum over every (video, view) sample, reshuffled each epoch by
/// a generator seeded from config.seed. Throws ConfigError on an empty split.
TrainResult train(std::span<const Video> videos, std::vector<std::string> classes, std::size_t dim,
                  const TrainConfig& config);
/// Trains on the "train" split, subsampled to config.shots per class when set.
TrainResult train(const DatasetManifest& manifest, const TrainConfig& config);

void write_loss_trace_csv(std::ostream& out, const TrainResult& result);

struct AblationRow {
  std::string name;
  bool mmb = false;
  bool map = false;
  bool mcb = false;
  double final_loss = 0.0;
  EvalReport report;
};

/// Baseline, MCB, MMB, MMB+MAP, MMB+MAP+MCB.
std::vector<AblationRow> ablation_rows();
TrainConfig apply_toggles(TrainConfig config, const AblationRow& row);

/// Trains every row with the same seed and budget on `train_videos` and
/// evaluates on `test_videos`.
std::vector<AblationRow> ablate(std::span<const Video> train_videos, std::span<const Video> test_videos,
                                std::vector<std::string> classes, std::size_t dim, const TrainConfig& base);
std::vector<AblationRow> ablate(const DatasetManifest& manifest, const TrainConfig& base,
                                const std::string& eval_split = "test");

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);

struct GroupCount {
  std::string name;
  std::size_t count = 0;
};

struct ParamReport {
  std::vector<GroupCount> trainable;
  std::vector<GroupCount> frozen;
  std::size_t trainable_total = 0;
  std::size_t frozen_total = 0;
};

/// Walks the tensors of every group.
ParamReport count_params(const ModelState& state, const TrainConfig& config);
nlohmann::json param_report_to_json(const ParamReport& report);

namespace closed_form {

std::size_t linear(std::size_t in, std::size_t out);
std::size_t layer_norm(std::size_t dim);
std::size_t attention_block(std::size_t dim, std::size_t expansion);
std::size_t motion_stream(std::size_t dim, const VideoEncoderConfig& config);
std::size_t spatial_stream(std::size_t dim, const VideoEncoderConfig& config);
std::size_t adapter(std::size_t dim, std::size_t mid);
std::size_t prompts(std::size_t prompt_len, std::size_t dim);
std::size_t cross_attention(std::size_t dim);
/// Same grouping and order as count_params.
ParamReport count(const TrainConfig& config, std::size_t dim);

}  // namespace closed_form

}  // namespace flowclip
