// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "flowclip/error.hpp"
#include "flowclip/random.hpp"

namespace flowclip {

namespace {

constexpr const char* kFeatureFile = "features.mcfv";

const std::vector<std::string>& base_names() {
  static const std::vector<std::string> names = {
      "walk",  "run",        "jump",      "brush hair", "clap",   "wave",     "sit",     "stand",
      "climb", "push up",    "pull up",   "kick ball",  "throw",  "catch",    "dive",    "swing baseball",
      "ride bike", "ride horse", "shoot bow", "golf",   "fencing", "dribble", "eat",     "drink",
      "smile", "laugh",      "talk",      "chew",       "pour",   "hug",      "kiss",    "shake hands",
      "somersault", "cartwheel", "handstand", "flic flac", "turn", "fall floor", "draw sword", "sword exercise"};
  return names;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined key
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Two orthonormal directions shared by every motion-only video of a dataset.
std::pair<std::vector<double>, std::vector<double>> motion_plane(const SynthConfig& c) {
  Rng rng(mix(c.seed, 0x706c616e65ULL));
  std::vector<double> u(c.dim), v(c.dim);
  for (auto& x : u) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  auto norm = [](std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x * x;
    s = std::sqrt(s);
    for (auto& x : w) x /= s;
  };
  norm(u);
  double dot = 0.0;
  for (std::size_t i = 0; i < c.dim; ++i) dot += u[i] * v[i];
  for (std::size_t i = 0; i < c.dim; ++i) v[i] -= dot * u[i];
  norm(v);
  return {u, v};
}

std::vector<float> static_frames(Rng& rng, const std::vector<double>& class_mean, const SynthConfig& c) {
  std::vector<float> frames(c.frames * c.dim);
  for (std::size_t t = 0; t < c.frames; ++t)
    for (std::size_t d = 0; d < c.dim; ++d)
      frames[t * c.dim + d] = static_cast<float>(class_mean[d] + rng.normal(0.0, c.noise));
  return frames;
}

}  // namespace

SynthRegime parse_regime(const std::string& name) {
  if (name == "static" || name == "static-separable") return SynthRegime::kStaticSeparable;
  if (name == "motion" || name == "motion-only") return SynthRegime::kMotionOnly;
  throw ConfigError("unknown synthetic regime '" + name + "' (expected static-separable or motion-only)");
}

std::string regime_name(SynthRegime regime) {
  return regime == SynthRegime::kStaticSeparable ? "static-separable" : "motion-only";
}

std::vector<std::string> synthetic_class_names(std::size_t count) {
  const auto& base = base_names();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) {
    names.push_back(i < base.size() ? base[i] : "action " + std::to_string(i));
  }
  return names;
}

void validate_synth_config(const SynthConfig& c) {
  if (c.classes < 2) throw ConfigError("synthetic dataset needs at least 2 classes");
  if (c.frames < 2) throw ConfigError("synthetic dataset needs at least 2 frames per view");
  if (c.dim == 0) throw ConfigError("synthetic dataset dim must be positive");
  if (c.views == 0) throw ConfigError("synthetic dataset needs at least one view per video");
  if (c.train_per_class == 0) throw ConfigError("synthetic dataset needs training videos");
  if (c.regime == SynthRegime::kMotionOnly && c.dim < 2) throw ConfigError("motion-only regime needs dim >= 2");
  if (!(c.noise >= 0.0) || !(c.signal > 0.0)) throw ConfigError("synthetic noise must be >= 0 and signal > 0");
}

std::vector<float> motion_only_frames(std::uint64_t content_seed, std::size_t label, const SynthConfig& c) {
  const auto [u, v] = motion_plane(c);
  Rng rng(content_seed);
  std::vector<double> base(c.dim);
  for (auto& x : base) x = rng.normal();
  std::vector<std::pair<double, double>> coords(c.frames);
  std::vector<std::vector<double>> frames(c.frames, std::vector<double>(c.dim));
  for (std::size_t t = 0; t < c.frames; ++t) {
    coords[t] = {rng.normal(0.0, c.signal), rng.normal(0.0, c.signal)};
    for (std::size_t d = 0; d < c.dim; ++d) {
      frames[t][d] = base[d] + coords[t].first * u[d] + coords[t].second * v[d] + rng.normal(0.0, c.noise);
    }
  }
  // Play the frames in ascending order of their projection on the class
  // direction.
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(label) / static_cast<double>(c.classes);
  const double ex = std::cos(angle), ey = std::sin(angle);
  std::vector<std::size_t> order(c.frames);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return coords[a].first * ex + coords[a].second * ey < coords[b].first * ex + coords[b].second * ey;
  });
  std::vector<float> out(c.frames * c.dim);
  for (std::size_t t = 0; t < c.frames; ++t)
    for (std::size_t d = 0; d < c.dim; ++d) out[t * c.dim + d] = static_cast<float>(frames[order[t]][d]);
  return out;
}

SynthDataset synthesize_dataset(const SynthConfig& c) {
  validate_synth_config(c);
  SynthDataset ds;
  auto& m = ds.manifest;
  m.classes = synthetic_class_names(c.classes);
  m.dim = c.dim;
  m.provenance = {{"generator", "flowclip synth"},
                  {"regime", regime_name(c.regime)},
                  {"seed", c.seed},
                  {"frames", c.frames},
                  {"views", c.views},
                  {"noise", c.noise},
                  {"signal", c.signal},
                  {"backbone", "synthetic"},
                  {"crop", "n/a"}};

  Rng class_rng(mix(c.seed, 0x6d65616e73ULL));
  std::vector<std::vector<double>> means(c.classes, std::vector<double>(c.dim));
  for (auto& mu : means)
    for (auto& x : mu) x = class_rng.normal(0.0, c.signal);

  const std::pair<const char*, std::size_t> splits[] = {{"train", c.train_per_class}, {"test", c.test_per_class}};
  std::uint64_t split_key = 0;
  for (const auto& [split, per_class] : splits) {
    ++split_key;
    auto& refs = m.splits[split];
    const std::size_t total = per_class * c.classes;
    for (std::size_t i = 0; i < total; ++i) {
      const std::size_t label = i % c.classes;
      std::string id = std::string(split) + "_" + std::to_string(10000 + i).substr(1);
      refs.push_back({kFeatureFile, id});
      for (std::size_t view = 0; view < c.views; ++view) {
        const std::uint64_t content_seed = mix(mix(c.seed, split_key), i * 1315423911ULL + view);
        FrameFeatureSequence rec;
        rec.video_id = id;
        rec.view_id = static_cast<std::uint32_t>(view);
        rec.label_index = static_cast<std::uint32_t>(label);
        rec.num_frames = static_cast<std::uint32_t>(c.frames);
        rec.dim = static_cast<std::uint32_t>(c.dim);
        if (c.regime == SynthRegime::kStaticSeparable) {
          Rng rng(content_seed);
          rec.frames = static_frames(rng, means[label], c);
        } else {
          rec.frames = motion_only_frames(content_seed, label, c);
        }
        ds.records.push_back(std::move(rec));
      }
    }
  }
  return ds;
}

DatasetManifest write_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& dir) {
  auto ds = synthesize_dataset(config);
  std::filesystem::create_directories(dir);
  write_feature_file(dir / kFeatureFile, ds.records);
  save_manifest(dir / "manifest.json", ds.manifest);
  ds.manifest.base_dir = dir;
  return ds.manifest;
}

}  // namespace flowclip
