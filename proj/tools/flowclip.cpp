// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

// flowclip: synthetic data, training, evaluation, ablation, parameter
// accounting and gradient checks from the command line.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowclip/error.hpp"
#include "flowclip/gradcheck.hpp"
#include "flowclip/manifest.hpp"
#include "flowclip/model.hpp"
#include "flowclip/synth.hpp"
#include "flowclip/trainer.hpp"

namespace fs = std::filesystem;
using namespace flowclip;

namespace {

// Flags that mirror TrainConfig keys; only flags given on the command line
// override the config file.
struct ConfigFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr0, momentum, tau;
  std::optional<std::size_t> epochs, steps, batch_size, shots, frames_per_clip, max_step, depth, heads, ffn_expansion,
      prompt_len, adapter_mid, text_depth;
  std::optional<std::string> prompt_init, eval_mode;
  std::optional<bool> mmb_motion_stream, map_enabled, mcb_enabled, mcb_at_inference;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed);
    app->add_option("--lr0", lr0);
    app->add_option("--momentum", momentum);
    app->add_option("--tau", tau);
    app->add_option("--epochs", epochs);
    app->add_option("--steps", steps, "optimizer steps (overrides epochs)");
    app->add_option("--batch-size", batch_size);
    app->add_option("--shots", shots, "training videos kept per class");
    app->add_option("--frames-per-clip,-T", frames_per_clip);
    app->add_option("--max-step,-s", max_step);
    app->add_option("--depth", depth);
    app->add_option("--heads", heads);
    app->add_option("--ffn-expansion", ffn_expansion);
    app->add_option("--prompt-len,-H", prompt_len);
    app->add_option("--prompt-init", prompt_init);
    app->add_option("--adapter-mid", adapter_mid);
    app->add_option("--text-depth", text_depth);
    app->add_option("--eval-mode", eval_mode, "view-average or prob-average");
    app->add_option("--mmb-motion-stream", mmb_motion_stream);
    app->add_option("--map-enabled", map_enabled);
    app->add_option("--mcb-enabled", mcb_enabled);
    app->add_option("--mcb-at-inference", mcb_at_inference, "apply MCB during evaluation");
  }

  TrainConfig resolve() const {
    TrainConfig base;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(config_file + ": " + e.what());
      }
      base = config_from_json(j, base);
    }
    nlohmann::json o = nlohmann::json::object();
    auto put = [&o](const char* key, const auto& v) {
      if (v) o[key] = *v;
    };
    put("seed", seed);
    put("lr0", lr0);
    put("momentum", momentum);
    put("tau", tau);
    put("epochs", epochs);
    put("steps", steps);
    put("batch_size", batch_size);
    put("shots", shots);
    put("frames_per_clip", frames_per_clip);
    put("max_step", max_step);
    put("depth", depth);
    put("heads", heads);
    put("ffn_expansion", ffn_expansion);
    put("prompt_len", prompt_len);
    put("prompt_init", prompt_init);
    put("adapter_mid", adapter_mid);
    put("text_depth", text_depth);
    put("eval_mode", eval_mode);
    put("mmb_motion_stream", mmb_motion_stream);
    put("map_enabled", map_enabled);
    put("mcb_enabled", mcb_enabled);
    put("mcb_at_inference", mcb_at_inference);
    auto config = config_from_json(o, base);
    validate_config(config);
    return config;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { open_out(path) << j.dump(2) << '\n'; }

void print_report(const std::string& title, const EvalReport& r) {
  std::cout << title << ": top1=" << r.top1 << " top5=" << r.top5 << " videos=" << r.n_videos
            << " views=" << r.n_views << '\n';
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowclip: motion-aware video-text matching on frame features"};
  app.require_subcommand(1);

  SynthConfig synth;
  std::string regime = "static";
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic feature dataset");
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--regime", regime, "static or motion");
  synth_cmd->add_option("--classes", synth.classes);
  synth_cmd->add_option("--train-per-class", synth.train_per_class);
  synth_cmd->add_option("--test-per-class", synth.test_per_class);
  synth_cmd->add_option("--frames", synth.frames);
  synth_cmd->add_option("--dim", synth.dim);
  synth_cmd->add_option("--views", synth.views);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--noise", synth.noise);
  synth_cmd->add_option("--signal", synth.signal);

  ConfigFlags train_flags;
  fs::path train_manifest, loss_csv, checkpoint_out, train_report;
  auto* train_cmd = app.add_subcommand("train", "Train on a manifest's train split");
  train_cmd->add_option("--manifest", train_manifest)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--loss-csv", loss_csv, "per-step loss trace");
  train_cmd->add_option("--checkpoint", checkpoint_out, "write the trained state");
  train_cmd->add_option("--report-json", train_report, "train-split EvalReport");
  train_flags.attach(train_cmd);

  fs::path eval_manifest, eval_checkpoint, eval_json, eval_csv;
  std::string eval_split = "test";
  std::optional<std::string> eval_mode_override;
  std::optional<bool> eval_mcb_override;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval_cmd->add_option("--manifest", eval_manifest)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--split", eval_split);
  eval_cmd->add_option("--eval-mode", eval_mode_override, "view-average or prob-average");
  eval_cmd->add_option("--mcb-at-inference", eval_mcb_override, "apply MCB during evaluation");
  eval_cmd->add_option("--json", eval_json, "EvalReport JSON");
  eval_cmd->add_option("--csv", eval_csv, "per-view predictions CSV");

  ConfigFlags ablate_flags;
  fs::path ablate_manifest, ablate_csv;
  std::string ablate_split = "test";
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and evaluate the five toggle rows");
  ablate_cmd->add_option("--manifest", ablate_manifest)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--split", ablate_split, "evaluation split");
  ablate_cmd->add_option("--csv", ablate_csv, "ablation table");
  ablate_flags.attach(ablate_cmd);

  ConfigFlags params_flags;
  std::size_t params_dim = 512;
  std::size_t params_classes = 5;
  auto* params_cmd = app.add_subcommand("params", "Count trainable and frozen parameters");
  params_cmd->add_option("--dim", params_dim);
  params_cmd->add_option("--classes", params_classes);
  params_flags.attach(params_cmd);

  GradCheckOptions gc;
  std::size_t gc_seeds = 5;
  fs::path gc_json;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gc_cmd->add_option("--seed", gc.seed, "first seed");
  gc_cmd->add_option("--seeds", gc_seeds, "number of consecutive seeds");
  gc_cmd->add_option("--tolerance", gc.tolerance);
  gc_cmd->add_option("--step", gc.step);
  gc_cmd->add_option("--dim", gc.dim);
  gc_cmd->add_option("--frames", gc.frames);
  gc_cmd->add_option("--classes", gc.classes);
  gc_cmd->add_option("--json", gc_json);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      synth.regime = parse_regime(regime);
      const auto manifest = write_synthetic_dataset(synth, synth_out);
      std::cout << "wrote " << (synth_out / "manifest.json").string() << " (" << manifest.classes.size()
                << " classes, D=" << manifest.dim << ")\n";
    } else if (*train_cmd) {
      const auto config = train_flags.resolve();
      const auto manifest = load_manifest(train_manifest);
      const auto result = train(manifest, config);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      if (!loss_csv.empty()) {
        auto out = open_out(loss_csv);
        write_loss_trace_csv(out, result);
      }
      if (!checkpoint_out.empty()) save_checkpoint(checkpoint_out, result.state);
      std::cout << "steps=" << result.loss_trace.size() << " final_loss=" << result.loss_trace.back() << '\n';
      auto videos = load_split(manifest, "train");
      if (config.shots) videos = take_shots(videos, config.shots);
      const auto report = evaluate(videos, result.state, config);
      print_report("train", report);
      if (!train_report.empty()) write_json(train_report, report_to_json(report));
    } else if (*eval_cmd) {
      const auto state = load_checkpoint(eval_checkpoint);
      auto config = state.config;
      if (eval_mode_override) config.eval_mode = parse_eval_mode(*eval_mode_override);
      if (eval_mcb_override) config.mcb_at_inference = *eval_mcb_override;
      const auto manifest = load_manifest(eval_manifest);
      if (manifest.dim != state.dim) {
        throw ConfigError("manifest D=" + std::to_string(manifest.dim) + " but checkpoint D=" +
                          std::to_string(state.dim));
      }
      if (manifest.classes != state.classes) throw ConfigError("manifest classes differ from the checkpoint's");
      const auto report = evaluate(load_split(manifest, eval_split), state, config);
      print_report(eval_split, report);
      if (!eval_json.empty()) write_json(eval_json, report_to_json(report));
      if (!eval_csv.empty()) {
        auto out = open_out(eval_csv);
        write_report_csv(out, report);
      }
    } else if (*ablate_cmd) {
      const auto config = ablate_flags.resolve();
      const auto rows = ablate(load_manifest(ablate_manifest), config, ablate_split);
      write_ablation_csv(std::cout, rows);
      if (!ablate_csv.empty()) {
        auto out = open_out(ablate_csv);
        write_ablation_csv(out, rows);
      }
    } else if (*params_cmd) {
      const auto config = params_flags.resolve();
      const auto state = init_model(config, params_dim, synthetic_class_names(params_classes));
      const auto walked = count_params(state, config);
      const auto closed = closed_form::count(config, params_dim);
      auto j = param_report_to_json(walked);
      j["dim"] = params_dim;
      j["closed_form_trainable_total"] = closed.trainable_total;
      std::cout << j.dump(2) << '\n';
      if (walked.trainable_total != closed.trainable_total || walked.frozen_total != closed.frozen_total) {
        std::cerr << "error: tensor walk disagrees with closed form\n";
        return 1;
      }
    } else if (*gc_cmd) {
      nlohmann::json all = nlohmann::json::array();
      bool ok = true;
      for (std::size_t i = 0; i < gc_seeds; ++i) {
        GradCheckOptions o = gc;
        o.seed = gc.seed + i;
        const auto report = grad_check(o);
        ok = ok && report.passed;
        for (const auto& g : report.groups) {
          std::cout << "seed " << o.seed << ' ' << g.group << " rel_error=" << g.rel_error
                    << (g.passed ? " ok" : " FAIL") << '\n';
          if (!g.passed) {
            std::cout << "  worst " << g.worst_tensor << '[' << g.worst_index << "] analytic=" << g.worst_analytic
                      << " numeric=" << g.worst_numeric << '\n';
          }
        }
        all.push_back(gradcheck_to_json(report));
      }
      if (!gc_json.empty()) write_json(gc_json, all);
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
