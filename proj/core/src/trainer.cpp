// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/trainer.hpp"

#include <algorithm>
#include <optional>
#include <ostream>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"
#include "flowclip/optim.hpp"
#include "flowclip/random.hpp"

namespace flowclip {

namespace {

struct Sample {
  const Video* video;
  std::size_t view;
};

std::vector<Tensor> trainable_tensors(const ModelState& state, const TrainConfig& config) {
  std::vector<Tensor> out;
  for (const auto& g : trainable_groups(state, config))
    for (const auto& nt : g.tensors) out.push_back(nt.tensor);
  return out;
}

}  // namespace

std::size_t total_steps(const TrainConfig& config, std::size_t samples) {
  if (config.steps) return config.steps;
  const std::size_t per_epoch = (samples + config.batch_size - 1) / config.batch_size;
  return config.epochs * per_epoch;
}

TrainResult train(std::span<const Video> videos, std::vector<std::string> classes, std::size_t dim,
                  const TrainConfig& config) {
  std::vector<Sample> samples;
  for (const auto& v : videos) {
    if (v.label >= classes.size()) {
      throw ConfigError("video '" + v.video_id + "' has label " + std::to_string(v.label) + " but only " +
                        std::to_string(classes.size()) + " classes");
    }
    for (std::size_t i = 0; i < v.views.size(); ++i) samples.push_back({&v, i});
  }
  if (samples.empty()) throw ConfigError("training split is empty");

  TrainResult result{init_model(config, dim, std::move(classes)), {}, {}, config_warnings(config)};
  ModelState& state = result.state;
  Rng rng;
  rng.set_state(state.rng_state);

  std::optional<TextBank> bank;
  if (!config.motion_prompts()) {
    NoGradGuard no_grad;
    bank = static_text_bank(state);
  }

  Sgd opt(trainable_tensors(state, config), config.momentum);
  const std::size_t total = total_steps(config, samples.size());
  result.loss_trace.reserve(total);
  result.lr_trace.reserve(total);

  std::size_t cursor = samples.size();
  for (std::size_t step = 0; step < total; ++step) {
    std::vector<Tensor> losses;
    for (std::size_t b = 0; b < config.batch_size && b < samples.size(); ++b) {
      if (cursor == samples.size()) {
        rng.shuffle(samples);
        cursor = 0;
      }
      const Sample& s = samples[cursor++];
      auto out = forward(s.video->views[s.view].to_tensor(), state, config, bank ? &*bank : nullptr);
      losses.push_back(nce_loss(out.dist, s.video->label));
    }
    Tensor loss = losses.front();
    for (std::size_t i = 1; i < losses.size(); ++i) loss = loss + losses[i];
    loss = scale(loss, 1.0 / static_cast<double>(losses.size()));

    opt.zero_grad();
    backward(loss);
    const double lr = cosine_lr(step, total, config.lr0);
    opt.step(lr);
    result.loss_trace.push_back(loss.item());
    result.lr_trace.push_back(lr);
    ++state.step;
  }
  opt.zero_grad();
  state.rng_state = rng.state();
  return result;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config) {
  auto videos = load_split(manifest, "train");
  if (config.shots) videos = take_shots(videos, config.shots);
  return train(videos, manifest.classes, manifest.dim, config);
}

void write_loss_trace_csv(std::ostream& out, const TrainResult& result) {
  out << "step,lr,loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    out << i << ',' << result.lr_trace[i] << ',' << result.loss_trace[i] << '\n';
  }
}

std::vector<AblationRow> ablation_rows() {
  return {{"Baseline", false, false, false, 0.0, {}},
          {"MCB", false, false, true, 0.0, {}},
          {"MMB", true, false, false, 0.0, {}},
          {"MMB+MAP", true, true, false, 0.0, {}},
          {"MMB+MAP+MCB", true, true, true, 0.0, {}}};
}

TrainConfig apply_toggles(TrainConfig config, const AblationRow& row) {
  config.mmb_motion_stream = row.mmb;
  config.map_enabled = row.map;
  config.mcb_enabled = row.mcb;
  return config;
}

std::vector<AblationRow> ablate(std::span<const Video> train_videos, std::span<const Video> test_videos,
                                std::vector<std::string> classes, std::size_t dim, const TrainConfig& base) {
  auto rows = ablation_rows();
  for (auto& row : rows) {
    const auto config = apply_toggles(base, row);
    auto result = train(train_videos, classes, dim, config);
    row.final_loss = result.loss_trace.empty() ? 0.0 : result.loss_trace.back();
    row.report = evaluate(test_videos, result.state, config);
  }
  return rows;
}

std::vector<AblationRow> ablate(const DatasetManifest& manifest, const TrainConfig& base,
                                const std::string& eval_split) {
  auto train_videos = load_split(manifest, "train");
  if (base.shots) train_videos = take_shots(train_videos, base.shots);
  const auto test_videos = load_split(manifest, eval_split);
  return ablate(train_videos, test_videos, manifest.classes, manifest.dim, base);
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "row,mmb,map,mcb,final_loss,top1,top5\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.name << ',' << r.mmb << ',' << r.map << ',' << r.mcb << ',' << r.final_loss << ',' << r.report.top1
        << ',' << r.report.top5 << '\n';
  }
}

ParamReport count_params(const ModelState& state, const TrainConfig& config) {
  ParamReport report;
  for (const auto& g : trainable_groups(state, config)) {
    report.trainable.push_back({g.name, g.count()});
    report.trainable_total += g.count();
  }
  for (const auto& g : frozen_groups(state)) {
    report.frozen.push_back({g.name, g.count()});
    report.frozen_total += g.count();
  }
  return report;
}

nlohmann::json param_report_to_json(const ParamReport& report) {
  nlohmann::json trainable = nlohmann::json::object();
  for (const auto& g : report.trainable) trainable[g.name] = g.count;
  nlohmann::json frozen = nlohmann::json::object();
  for (const auto& g : report.frozen) frozen[g.name] = g.count;
  return {{"trainable", trainable},
          {"trainable_total", report.trainable_total},
          {"frozen", frozen},
          {"frozen_total", report.frozen_total}};
}

namespace closed_form {

std::size_t linear(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t layer_norm(std::size_t dim) { return 2 * dim; }

std::size_t attention_block(std::size_t dim, std::size_t expansion) {
  const std::size_t hidden = dim * expansion;
  return 4 * linear(dim, dim) + 2 * layer_norm(dim) + linear(dim, hidden) + linear(hidden, dim);
}

std::size_t motion_stream(std::size_t dim, const VideoEncoderConfig& c) {
  return c.depth * attention_block(dim, c.ffn_expansion) + pair_count(c.frames_per_clip, c.max_step) * dim;
}

std::size_t spatial_stream(std::size_t dim, const VideoEncoderConfig& c) {
  return c.depth * attention_block(dim, c.ffn_expansion) + c.frames_per_clip * dim;
}

std::size_t adapter(std::size_t dim, std::size_t mid) { return linear(dim, mid) + linear(mid, dim); }

std::size_t prompts(std::size_t prompt_len, std::size_t dim) { return prompt_len * dim; }

std::size_t cross_attention(std::size_t dim) { return 2 * layer_norm(dim) + 4 * linear(dim, dim); }

ParamReport count(const TrainConfig& config, std::size_t dim) {
  ParamReport r;
  const auto vc = config.video_config();
  if (config.mmb_motion_stream) r.trainable.push_back({"mmb.motion", motion_stream(dim, vc)});
  r.trainable.push_back({"mmb.spatial", spatial_stream(dim, vc)});
  if (config.motion_prompts()) {
    r.trainable.push_back({"map.prompts", prompts(config.prompt_len, dim)});
    r.trainable.push_back({"map.adapter", adapter(dim, config.adapter_width(dim))});
  }
  if (config.mcb_enabled) {
    r.trainable.push_back({"mcb.sma", cross_attention(dim)});
    r.trainable.push_back({"mcb.saa", cross_attention(dim)});
  }
  for (const auto& g : r.trainable) r.trainable_total += g.count;

  const std::size_t tower = kPromptLength * dim + config.text_depth * attention_block(dim, config.ffn_expansion) +
                            layer_norm(dim) + dim * dim;
  const std::size_t table = static_cast<std::size_t>(kFirstWordId + kWordBuckets) * dim;
  r.frozen = {{"text_tower", tower}, {"token_table", table}};
  r.frozen_total = tower + table;
  return r;
}

}  // namespace closed_form

}  // namespace flowclip
