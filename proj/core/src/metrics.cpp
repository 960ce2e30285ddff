// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>

#include "flowclip/error.hpp"

namespace flowclip {

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "view-average" || name == "view-average-accuracy") return EvalMode::kViewAverage;
  if (name == "prob-average") return EvalMode::kProbAverage;
  throw ConfigError("unknown eval mode '" + name + "' (expected view-average or prob-average)");
}

std::string eval_mode_name(EvalMode mode) {
  return mode == EvalMode::kViewAverage ? "view-average" : "prob-average";
}

std::size_t predicted_class(std::span<const double> probs) {
  if (probs.empty()) throw DimensionError("predicted_class: empty distribution");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

bool in_top_k(std::span<const double> probs, std::size_t label, std::size_t k) {
  if (label >= probs.size()) return false;
  k = std::min(k, probs.size());
  // Classes ranked ahead of `label`: higher prob, or equal prob and lower index.
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > probs[label] || (probs[i] == probs[label] && i < label)) ++ahead;
  }
  return ahead < k;
}

EvalReport summarize(std::span<const ViewPrediction> predictions, std::size_t classes, EvalMode mode) {
  if (predictions.empty()) throw ConfigError("nothing to evaluate: no predictions");
  EvalReport report;
  report.mode = mode;
  report.predictions.assign(predictions.begin(), predictions.end());
  report.n_views = predictions.size();

  std::map<std::string, std::vector<const ViewPrediction*>> by_video;
  std::vector<std::string> order;
  for (const auto& p : predictions) {
    if (p.probs.size() != classes) throw DimensionError("prediction for '" + p.video_id + "' has wrong class count");
    auto [it, fresh] = by_video.try_emplace(p.video_id);
    if (fresh) order.push_back(p.video_id);
    it->second.push_back(&p);
  }
  report.n_videos = by_video.size();
  for (const auto& [id, views] : by_video) report.views_per_video = std::max(report.views_per_video, views.size());
  for (const auto& id : order) {
    const auto n = by_video[id].size();
    if (n < report.views_per_video) {
      report.warnings.push_back("video '" + id + "' has " + std::to_string(n) + " of " +
                                std::to_string(report.views_per_video) + " views; evaluating available views");
    }
  }

  std::vector<double> hits(classes, 0.0), counts(classes, 0.0);
  double top1 = 0.0, top5 = 0.0, total = 0.0;
  auto score = [&](std::span<const double> probs, std::uint32_t label) {
    const bool h1 = in_top_k(probs, label, 1);
    top1 += h1;
    top5 += in_top_k(probs, label, 5);
    total += 1.0;
    if (label < classes) {
      hits[label] += h1;
      counts[label] += 1.0;
    }
  };
  if (mode == EvalMode::kViewAverage) {
    for (const auto& p : predictions) score(p.probs, p.label);
  } else {
    for (const auto& id : order) {
      const auto& views = by_video[id];
      std::vector<double> avg(classes, 0.0);
      for (const auto* v : views)
        for (std::size_t k = 0; k < classes; ++k) avg[k] += v->probs[k];
      for (auto& a : avg) a /= static_cast<double>(views.size());
      score(avg, views.front()->label);
    }
  }
  report.top1 = top1 / total;
  report.top5 = top5 / total;
  report.per_class.resize(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    report.per_class[k] = counts[k] > 0 ? hits[k] / counts[k] : std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : report.per_class) {
    if (std::isnan(v)) {
      per_class.push_back(nullptr);
    } else {
      per_class.push_back(v);
    }
  }
  return {{"top1", report.top1},
          {"top5", report.top5},
          {"per_class", per_class},
          {"views_per_video", report.views_per_video},
          {"n_videos", report.n_videos},
          {"n_views", report.n_views},
          {"mode", eval_mode_name(report.mode)},
          {"warnings", report.warnings}};
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "video_id,view_id,predicted,label,prob\n";
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (const auto& p : report.predictions) {
    const auto pred = predicted_class(p.probs);
    out << p.video_id << ',' << p.view_id << ',' << pred << ',' << p.label << ',' << p.probs[pred] << '\n';
  }
  out.precision(precision);
}

}  // namespace flowclip
