// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/manifest.hpp"

#include <fstream>
#include <set>
#include <unordered_map>

#include "flowclip/error.hpp"

namespace flowclip {

void validate_classes(const DatasetManifest& manifest) {
  if (manifest.classes.empty()) throw ConfigError("manifest lists no classes");
  std::set<std::string> seen;
  for (const auto& c : manifest.classes) {
    if (c.empty()) throw ConfigError("manifest contains an empty class name");
    if (!seen.insert(c).second) throw ConfigError("duplicate class name '" + c + "'");
  }
  if (manifest.dim == 0) throw ConfigError("manifest dim must be positive");
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json j;
  j["classes"] = manifest.classes;
  j["dim"] = manifest.dim;
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [name, refs] : manifest.splits) {
    auto arr = nlohmann::json::array();
    for (const auto& r : refs) arr.push_back({{"file", r.file}, {"video_id", r.video_id}});
    splits[name] = std::move(arr);
  }
  j["splits"] = std::move(splits);
  j["provenance"] = manifest.provenance;
  return j;
}

DatasetManifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir) {
  DatasetManifest m;
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.dim = j.at("dim").get<std::size_t>();
    for (const auto& [name, arr] : j.at("splits").items()) {
      auto& refs = m.splits[name];
      for (const auto& e : arr) refs.push_back({e.at("file").get<std::string>(), e.at("video_id").get<std::string>()});
    }
    if (j.contains("provenance")) m.provenance = j.at("provenance");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
  m.base_dir = std::move(base_dir);
  validate_classes(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseError::Kind::kInvalid, e.byte, std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

std::vector<Video> load_split(const DatasetManifest& manifest, std::string_view split) {
  validate_classes(manifest);
  auto it = manifest.splits.find(std::string(split));
  if (it == manifest.splits.end()) throw ConfigError("manifest has no split '" + std::string(split) + "'");

  std::unordered_map<std::string, std::vector<FrameFeatureSequence>> files;
  std::vector<Video> videos;
  for (const auto& ref : it->second) {
    auto cached = files.find(ref.file);
    if (cached == files.end()) {
      cached = files.emplace(ref.file, read_feature_file(manifest.base_dir / ref.file)).first;
    }
    Video video;
    video.video_id = ref.video_id;
    for (const auto& rec : cached->second) {
      if (rec.video_id != ref.video_id) continue;
      if (rec.dim != manifest.dim) {
        throw DimensionError("record '" + rec.video_id + "' view " + std::to_string(rec.view_id) + " has dim " +
                             std::to_string(rec.dim) + ", manifest says " + std::to_string(manifest.dim));
      }
      if (rec.label_index >= manifest.classes.size()) {
        throw ConfigError("record '" + rec.video_id + "' has label " + std::to_string(rec.label_index) + " but only " +
                          std::to_string(manifest.classes.size()) + " classes exist");
      }
      if (!video.views.empty() && rec.label_index != video.label) {
        throw ConfigError("views of '" + rec.video_id + "' disagree on the label");
      }
      video.label = rec.label_index;
      video.views.push_back(rec);
    }
    if (video.views.empty()) {
      throw ConfigError("split '" + std::string(split) + "' references missing record '" + ref.video_id + "' in " +
                        ref.file);
    }
    videos.push_back(std::move(video));
  }
  return videos;
}

std::vector<Video> take_shots(const std::vector<Video>& videos, std::size_t shots) {
  std::unordered_map<std::uint32_t, std::size_t> taken;
  std::vector<Video> out;
  for (const auto& v : videos) {
    if (taken[v.label]++ < shots) out.push_back(v);
  }
  return out;
}

}  // namespace flowclip
