// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "flowclip/container.hpp"
#include "flowclip/error.hpp"
#include "flowclip/synth.hpp"

namespace flowclip {
namespace {

namespace fs = std::filesystem;

std::vector<std::vector<float>> sorted_rows(const std::vector<float>& frames, std::size_t t, std::size_t d) {
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < t; ++i) rows.emplace_back(frames.begin() + i * d, frames.begin() + (i + 1) * d);
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Nearest class centroid of mean-pooled frames, fitted on train, scored on test.
double centroid_accuracy(const SynthDataset& ds, std::size_t classes, std::size_t dim) {
  std::vector<std::vector<double>> centroid(classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(classes, 0);
  auto pooled = [dim](const FrameFeatureSequence& r) {
    std::vector<double> m(dim, 0.0);
    for (std::size_t t = 0; t < r.num_frames; ++t)
      for (std::size_t d = 0; d < dim; ++d) m[d] += r.frames[t * dim + d] / r.num_frames;
    return m;
  };
  for (const auto& r : ds.records) {
    if (r.video_id.rfind("train", 0) != 0) continue;
    const auto m = pooled(r);
    for (std::size_t d = 0; d < dim; ++d) centroid[r.label_index][d] += m[d];
    ++counts[r.label_index];
  }
  for (std::size_t k = 0; k < classes; ++k)
    for (auto& x : centroid[k]) x /= static_cast<double>(counts[k]);
  std::size_t correct = 0, total = 0;
  for (const auto& r : ds.records) {
    if (r.video_id.rfind("test", 0) != 0) continue;
    const auto m = pooled(r);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < classes; ++k) {
      double dist = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dist += (m[d] - centroid[k][d]) * (m[d] - centroid[k][d]);
      if (dist < best_d) best_d = dist, best = k;
    }
    correct += best == r.label_index;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

TEST(Synth, StaticCounts) {
  SynthConfig c;
  c.classes = 5;
  c.train_per_class = 20;
  c.test_per_class = 10;
  const auto ds = synthesize_dataset(c);
  EXPECT_EQ(ds.manifest.splits.at("train").size(), 100u);
  EXPECT_EQ(ds.manifest.splits.at("test").size(), 50u);
  EXPECT_EQ(ds.records.size(), 150u);
  EXPECT_EQ(ds.manifest.classes.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(std::count_if(ds.records.begin(), ds.records.begin() + 100,
                            [k](const auto& r) { return r.label_index == k; }),
              20);
  }
}

TEST(Synth, ViewsShareVideoIdAndLabel) {
  SynthConfig c;
  c.views = 3;
  c.train_per_class = 2;
  c.test_per_class = 1;
  const auto ds = synthesize_dataset(c);
  EXPECT_EQ(ds.records.size(), (10u + 5u) * 3u);
  for (std::size_t i = 0; i < ds.records.size(); i += 3) {
    for (std::size_t v = 0; v < 3; ++v) {
      EXPECT_EQ(ds.records[i + v].video_id, ds.records[i].video_id);
      EXPECT_EQ(ds.records[i + v].view_id, v);
      EXPECT_EQ(ds.records[i + v].label_index, ds.records[i].label_index);
    }
    EXPECT_NE(ds.records[i].frames, ds.records[i + 1].frames);
  }
}

TEST(Synth, MotionOnlyFrameMultisetIndependentOfLabel) {
  SynthConfig c;
  c.regime = SynthRegime::kMotionOnly;
  c.classes = 4;
  c.dim = 16;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto base = motion_only_frames(seed, 0, c);
    const auto rows0 = sorted_rows(base, c.frames, c.dim);
    for (std::size_t label = 1; label < c.classes; ++label) {
      const auto other = motion_only_frames(seed, label, c);
      EXPECT_EQ(sorted_rows(other, c.frames, c.dim), rows0);
      std::vector<double> m0(c.dim, 0.0), m1(c.dim, 0.0);
      for (std::size_t t = 0; t < c.frames; ++t)
        for (std::size_t d = 0; d < c.dim; ++d) {
          m0[d] += base[t * c.dim + d];
          m1[d] += other[t * c.dim + d];
        }
      for (std::size_t d = 0; d < c.dim; ++d) EXPECT_NEAR(m0[d], m1[d], 1e-9);
    }
  }
}

TEST(Synth, MotionOnlyOrderDiffersAcrossLabels) {
  SynthConfig c;
  c.regime = SynthRegime::kMotionOnly;
  c.classes = 4;
  EXPECT_NE(motion_only_frames(1, 0, c), motion_only_frames(1, 2, c));
}

TEST(Synth, MotionOnlyCentroidAtChance) {
  SynthConfig c;
  c.regime = SynthRegime::kMotionOnly;
  c.classes = 4;
  c.train_per_class = 20;
  c.test_per_class = 20;
  c.noise = 0.3;
  c.signal = 3.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    c.seed = seed;
    const double acc = centroid_accuracy(synthesize_dataset(c), c.classes, c.dim);
    EXPECT_NEAR(acc, 1.0 / c.classes, 0.10) << "seed " << seed;
  }
}

TEST(Synth, StaticCentroidSeparates) {
  SynthConfig c;
  const double acc = centroid_accuracy(synthesize_dataset(c), c.classes, c.dim);
  EXPECT_GT(acc, 0.9);
}

TEST(Synth, SameSeedGivesIdenticalFiles) {
  SynthConfig c;
  c.regime = SynthRegime::kMotionOnly;
  const auto a = fs::temp_directory_path() / "flowclip_synth_a";
  const auto b = fs::temp_directory_path() / "flowclip_synth_b";
  write_synthetic_dataset(c, a);
  write_synthetic_dataset(c, b);
  for (const char* f : {"features.mcfv", "manifest.json"}) {
    EXPECT_EQ(wire::read_file(a / f), wire::read_file(b / f)) << f;
  }
  c.seed = 1;
  write_synthetic_dataset(c, b);
  EXPECT_NE(wire::read_file(a / "features.mcfv"), wire::read_file(b / "features.mcfv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Synth, RejectsInvalidConfig) {
  SynthConfig c;
  c.classes = 1;
  EXPECT_THROW(synthesize_dataset(c), ConfigError);
  c = {};
  c.frames = 1;
  EXPECT_THROW(synthesize_dataset(c), ConfigError);
  c = {};
  c.views = 0;
  EXPECT_THROW(synthesize_dataset(c), ConfigError);
  EXPECT_THROW(parse_regime("noisy"), ConfigError);
}

TEST(Synth, ClassNamesAreDistinct) {
  const auto names = synthetic_class_names(60);
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

}  // namespace
}  // namespace flowclip
