// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowclip/container.hpp"

namespace flowclip {

/// A video in a split: a container file (relative to the manifest) and the
/// video id whose views it holds.
struct RecordRef {
  std::string file;
  std::string video_id;

  bool operator==(const RecordRef&) const = default;
};

/// JSON manifest: {"classes": [...], "dim": D, "splits": {"train": [...],
/// "test": [...]}, "provenance": {...}}. Split entries are
/// {"file": ..., "video_id": ...} objects.
struct DatasetManifest {
  std::vector<std::string> classes;
  std::size_t dim = 0;
  std::map<std::string, std::vector<RecordRef>> splits;
  nlohmann::json provenance = nlohmann::json::object();
  /// Directory that record files are resolved against.
  std::filesystem::path base_dir;
};

/// All views of one video, grouped by video id.
struct Video {
  std::string video_id;
  std::uint32_t label = 0;
  std::vector<FrameFeatureSequence> views;
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
/// Parses and checks structure (unique non-empty class names, positive dim).
DatasetManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {});

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Throws ConfigError on empty/duplicate class names or dim == 0.
void validate_classes(const DatasetManifest& manifest);

/// Reads every record a split references. Throws if a reference is missing,
/// a record's dimension differs from the manifest's, labels are out of range,
/// or views of one video disagree on the label.
std::vector<Video> load_split(const DatasetManifest& manifest, std::string_view split);

/// Keeps at most `shots` videos per class, in manifest order.
std::vector<Video> take_shots(const std::vector<Video>& videos, std::size_t shots);

}  // namespace flowclip
