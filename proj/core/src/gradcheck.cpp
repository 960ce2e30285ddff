// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"
#include "flowclip/random.hpp"

namespace flowclip {

namespace {

std::vector<std::string> class_names(std::size_t k) {
  static const char* const kWords[] = {"jump", "wave", "run", "clap", "sit", "kick", "push", "pull"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::string name = kWords[i % std::size(kWords)];
    if (i >= std::size(kWords)) name += " " + std::to_string(i);
    out.push_back(std::move(name));
  }
  return out;
}

Tensor batch_loss(const std::vector<Tensor>& clips, const std::vector<std::size_t>& labels, const ModelState& state,
                  const TrainConfig& config) {
  Tensor total;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    Tensor l = nce_loss(forward(clips[i], state, config).dist, labels[i]);
    total = total.defined() ? total + l : l;
  }
  return scale(total, 1.0 / static_cast<double>(clips.size()));
}

}  // namespace

TrainConfig gradcheck_config(const GradCheckOptions& o) {
  TrainConfig c;
  c.seed = o.seed;
  c.frames_per_clip = o.frames;
  c.max_step = o.max_step;
  c.heads = o.heads;
  c.prompt_len = o.prompt_len;
  c.prompt_init = "a video of";
  c.depth = 1;
  c.ffn_expansion = 2;
  return c;
}

GradCheckReport grad_check(const GradCheckOptions& o) {
  if (!(o.step > 0.0)) throw ConfigError("gradcheck step must be positive");
  if (o.videos == 0) throw ConfigError("gradcheck needs at least one video");
  const TrainConfig config = gradcheck_config(o);
  ModelState state = init_model(config, o.dim, class_names(o.classes));

  Rng rng(o.seed ^ 0x5eedULL);
  const auto groups = trainable_groups(state, config);
  for (const auto& g : groups)
    for (const auto& nt : g.tensors)
      for (auto& v : Tensor(nt.tensor).mutable_values()) v += rng.normal(0.0, o.perturb);

  std::vector<Tensor> clips;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < o.videos; ++i) {
    clips.push_back(normal_tensor({o.frames, o.dim}, 1.0, rng));
    labels.push_back(rng.below(o.classes));
  }

  Tensor loss = batch_loss(clips, labels, state, config);
  backward(loss);

  GradCheckReport report;
  report.seed = o.seed;
  report.passed = true;
  NoGradGuard no_grad;
  for (const auto& g : groups) {
    GroupCheck check;
    check.group = g.name;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0, worst = -1.0;
    for (const auto& nt : g.tensors) {
      const auto analytic = nt.tensor.grad();
      auto values = Tensor(nt.tensor).mutable_values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + o.step;
        const double up = batch_loss(clips, labels, state, config).item();
        values[i] = saved - o.step;
        const double down = batch_loss(clips, labels, state, config).item();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * o.step);
        const double d = analytic[i] - numeric;
        diff2 += d * d;
        a2 += analytic[i] * analytic[i];
        n2 += numeric * numeric;
        if (std::abs(d) > worst) {
          worst = std::abs(d);
          check.worst_tensor = nt.name;
          check.worst_index = i;
          check.worst_analytic = analytic[i];
          check.worst_numeric = numeric;
        }
        ++check.params;
      }
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    check.rel_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
    check.passed = check.rel_error < o.tolerance;
    report.passed = report.passed && check.passed;
    report.groups.push_back(std::move(check));
  }
  return report;
}

nlohmann::json gradcheck_to_json(const GradCheckReport& report) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : report.groups) {
    groups.push_back({{"group", g.group},
                      {"params", g.params},
                      {"rel_error", g.rel_error},
                      {"passed", g.passed},
                      {"worst", {{"tensor", g.worst_tensor},
                                 {"index", g.worst_index},
                                 {"analytic", g.worst_analytic},
                                 {"numeric", g.worst_numeric}}}});
  }
  return {{"seed", report.seed}, {"passed", report.passed}, {"groups", groups}};
}

}  // namespace flowclip
