// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace flowclip {

enum class EvalMode {
  /// Accuracy of every view, averaged over all views.
  kViewAverage,
  /// Probabilities averaged over a video's views, then one prediction.
  kProbAverage,
};

EvalMode parse_eval_mode(const std::string& name);
std::string eval_mode_name(EvalMode mode);

struct ViewPrediction {
  std::string video_id;
  std::uint32_t view_id = 0;
  std::uint32_t label = 0;
  std::vector<double> probs;
};

struct EvalReport {
  double top1 = 0.0;
  double top5 = 0.0;
  std::vector<double> per_class;  // top-1 per true class; NaN when a class has no samples
  std::size_t views_per_video = 0;
  std::size_t n_videos = 0;
  std::size_t n_views = 0;
  EvalMode mode = EvalMode::kViewAverage;
  std::vector<ViewPrediction> predictions;
  std::vector<std::string> warnings;
};

/// Argmax with ties going to the lower class index.
std::size_t predicted_class(std::span<const double> probs);

/// True when `label` is among the k most probable classes (k clamped to K);
/// ties are ranked by lower class index.
bool in_top_k(std::span<const double> probs, std::size_t label, std::size_t k);

/// Aggregates per-view predictions. Views are grouped by video id; a video
/// with fewer views than the most-viewed video produces a warning.
EvalReport summarize(std::span<const ViewPrediction> predictions, std::size_t classes, EvalMode mode);

nlohmann::json report_to_json(const EvalReport& report);
/// Header plus one row per view: video_id,view_id,predicted,label,prob.
void write_report_csv(std::ostream& out, const EvalReport& report);

}  // namespace flowclip
