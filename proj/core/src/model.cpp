// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <optional>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'C', 'K', 'P'};
constexpr std::uint8_t kCheckpointVersion = 0x01;

// Stream keys for independent component initialization.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (key + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

VideoEncoderConfig TrainConfig::video_config() const {
  return {frames_per_clip, max_step, depth, heads, ffn_expansion, mmb_motion_stream};
}

std::size_t TrainConfig::adapter_width(std::size_t dim) const {
  return adapter_mid ? adapter_mid : std::max<std::size_t>(1, dim / 8);
}

void validate_config(const TrainConfig& c) {
  if (c.epochs == 0 && c.steps == 0) throw ConfigError("epochs or steps must be positive");
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (c.frames_per_clip < 2) throw ConfigError("frames_per_clip must be at least 2");
  if (c.max_step < 1 || c.max_step > c.frames_per_clip - 1) {
    throw ConfigError("max_step must lie in [1, frames_per_clip - 1]");
  }
  if (c.depth == 0 || c.heads == 0 || c.ffn_expansion == 0 || c.text_depth == 0) {
    throw ConfigError("depth, heads, ffn_expansion and text_depth must be positive");
  }
  if (c.prompt_len == 0 || c.prompt_len > kMaxPromptSlots) {
    throw ConfigError("prompt_len must lie in [1, " + std::to_string(kMaxPromptSlots) + "]");
  }
  if (c.prompt_init.empty()) throw ConfigError("prompt_init must not be empty");
  if (!(c.lr0 >= 0.0) || !std::isfinite(c.lr0)) throw ConfigError("lr0 must be finite and >= 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(c.tau > 0.0) || !std::isfinite(c.tau)) throw ConfigError("tau must be positive");
}

std::vector<std::string> config_warnings(const TrainConfig& c) {
  std::vector<std::string> out;
  if (c.map_enabled && !c.mmb_motion_stream) {
    out.push_back("map_enabled without the motion stream: prompt offset forced to zero and prompts stay static");
  }
  return out;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  return {{"seed", c.seed},
          {"lr0", c.lr0},
          {"momentum", c.momentum},
          {"epochs", c.epochs},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"shots", c.shots},
          {"frames_per_clip", c.frames_per_clip},
          {"max_step", c.max_step},
          {"depth", c.depth},
          {"heads", c.heads},
          {"ffn_expansion", c.ffn_expansion},
          {"prompt_len", c.prompt_len},
          {"prompt_init", c.prompt_init},
          {"adapter_mid", c.adapter_mid},
          {"text_depth", c.text_depth},
          {"mmb_motion_stream", c.mmb_motion_stream},
          {"map_enabled", c.map_enabled},
          {"mcb_enabled", c.mcb_enabled},
          {"mcb_at_inference", c.mcb_at_inference},
          {"tau", c.tau},
          {"eval_mode", eval_mode_name(c.eval_mode)}};
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "lr0") c.lr0 = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "steps") c.steps = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "shots") c.shots = value.get<std::size_t>();
      else if (key == "frames_per_clip") c.frames_per_clip = value.get<std::size_t>();
      else if (key == "max_step") c.max_step = value.get<std::size_t>();
      else if (key == "depth") c.depth = value.get<std::size_t>();
      else if (key == "heads") c.heads = value.get<std::size_t>();
      else if (key == "ffn_expansion") c.ffn_expansion = value.get<std::size_t>();
      else if (key == "prompt_len") c.prompt_len = value.get<std::size_t>();
      else if (key == "prompt_init") c.prompt_init = value.get<std::string>();
      else if (key == "adapter_mid") c.adapter_mid = value.get<std::size_t>();
      else if (key == "text_depth") c.text_depth = value.get<std::size_t>();
      else if (key == "mmb_motion_stream") c.mmb_motion_stream = value.get<bool>();
      else if (key == "map_enabled") c.map_enabled = value.get<bool>();
      else if (key == "mcb_enabled") c.mcb_enabled = value.get<bool>();
      else if (key == "mcb_at_inference") c.mcb_at_inference = value.get<bool>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "eval_mode") c.eval_mode = parse_eval_mode(value.get<std::string>());
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

ModelState init_model(const TrainConfig& config, std::size_t dim, std::vector<std::string> classes) {
  validate_config(config);
  if (dim == 0) throw ConfigError("model dim must be positive");
  if (classes.empty()) throw ConfigError("model needs at least one class");
  ModelState s;
  s.config = config;
  s.dim = dim;
  s.classes = std::move(classes);
  s.tokens = make_token_table(dim, derive_seed(config.seed, 1));
  s.tower = make_text_tower(dim, config.heads, config.ffn_expansion, derive_seed(config.seed, 2), config.text_depth);

  Rng mmb_rng(derive_seed(config.seed, 3));
  s.mmb = make_mmb_params(dim, config.video_config(), mmb_rng);
  s.prompts = init_prompts(config.prompt_init, s.tokens, config.prompt_len);
  Rng adapter_rng(derive_seed(config.seed, 4));
  s.adapter = make_motion_adapter(dim, config.adapter_width(dim), adapter_rng);
  Rng mcb_rng(derive_seed(config.seed, 5));
  s.mcb = make_mcb_params(dim, mcb_rng);

  s.class_tokens.reserve(s.classes.size());
  for (const auto& c : s.classes) {
    s.class_tokens.push_back(tokenize(c, s.tokens));
    // Fails early if a class does not fit the prompt budget.
    assemble_prompt(s.prompts, Tensor(), s.class_tokens.back(), s.tokens, c);
  }
  s.rng_state = Rng(derive_seed(config.seed, 6)).state();
  apply_trainable_flags(s, config);
  return s;
}

std::size_t ParamGroup::count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.tensor.numel();
  return n;
}

std::vector<ParamGroup> trainable_groups(const ModelState& s, const TrainConfig& c) {
  std::vector<ParamGroup> groups;
  if (c.mmb_motion_stream) groups.push_back({"mmb.motion", motion_stream_tensors(s.mmb)});
  groups.push_back({"mmb.spatial", spatial_stream_tensors(s.mmb)});
  if (c.motion_prompts()) {
    groups.push_back({"map.prompts", {{"map.context", s.prompts.context}}});
    ParamGroup adapter{"map.adapter", {}};
    append_named(adapter.tensors, "map.adapter.down", s.adapter.down);
    append_named(adapter.tensors, "map.adapter.up", s.adapter.up);
    groups.push_back(std::move(adapter));
  }
  if (c.mcb_enabled) {
    auto tensors = mcb_tensors(s.mcb);
    const auto half = tensors.size() / 2;
    groups.push_back({"mcb.sma", {tensors.begin(), tensors.begin() + static_cast<std::ptrdiff_t>(half)}});
    groups.push_back({"mcb.saa", {tensors.begin() + static_cast<std::ptrdiff_t>(half), tensors.end()}});
  }
  return groups;
}

std::vector<ParamGroup> frozen_groups(const ModelState& s) {
  return {{"text_tower", tower_tensors(s.tower)}, {"token_table", {{"tokens.embedding", s.tokens.embedding}}}};
}

std::vector<NamedTensor> all_tensors(const ModelState& s) {
  std::vector<NamedTensor> out;
  auto append = [&out](std::vector<NamedTensor> more) { out.insert(out.end(), more.begin(), more.end()); };
  append(motion_stream_tensors(s.mmb));
  append(spatial_stream_tensors(s.mmb));
  out.push_back({"map.context", s.prompts.context});
  append_named(out, "map.adapter.down", s.adapter.down);
  append_named(out, "map.adapter.up", s.adapter.up);
  append(mcb_tensors(s.mcb));
  append(tower_tensors(s.tower));
  out.push_back({"tokens.embedding", s.tokens.embedding});
  return out;
}

void apply_trainable_flags(ModelState& s, const TrainConfig& c) {
  for (auto& nt : all_tensors(s)) nt.tensor.set_requires_grad(false);
  for (auto& g : trainable_groups(s, c))
    for (auto& nt : g.tensors) nt.tensor.set_requires_grad(true);
}

std::uint64_t tensor_checksum(std::span<const NamedTensor> tensors) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& nt : tensors) {
    feed(nt.name.data(), nt.name.size());
    for (auto d : nt.tensor.shape()) {
      const auto v = static_cast<std::uint64_t>(d);
      feed(&v, sizeof v);
    }
    for (double v : nt.tensor.values()) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      feed(&bits, sizeof bits);
    }
  }
  return h;
}

std::uint64_t frozen_checksum(const ModelState& s) {
  std::vector<NamedTensor> all;
  for (auto& g : frozen_groups(s)) all.insert(all.end(), g.tensors.begin(), g.tensors.end());
  return tensor_checksum(all);
}

TextBank static_text_bank(const ModelState& s) {
  return encode_all_classes(s.prompts, Tensor(), s.class_tokens, s.tokens, s.tower);
}

ForwardOutput forward(const Tensor& frames, const ModelState& s, const TrainConfig& c, const TextBank* static_bank) {
  ForwardOutput out;
  out.video = encode_video(frames, s.mmb, c.video_config());
  if (c.motion_prompts()) {
    out.offset = adapt_motion(out.video.motion, s.adapter);
    out.bank = encode_all_classes(s.prompts, out.offset, s.class_tokens, s.tokens, s.tower);
  } else {
    out.bank = static_bank ? *static_bank : static_text_bank(s);
  }
  if (c.mcb_enabled) {
    auto mixed = communicate(out.bank, out.video.video, s.mcb);
    out.dist = match_probabilities(mixed.text, mixed.video, c.tau);
  } else {
    out.dist = match_probabilities(out.bank, out.video.video, c.tau);
  }
  return out;
}

MatchDistribution forward(const FrameFeatureSequence& view, const ModelState& s, const TrainConfig& c) {
  return forward(view.to_tensor(), s, c).dist;
}

EvalReport evaluate(std::span<const Video> videos, const ModelState& s, const TrainConfig& config) {
  if (videos.empty()) throw ConfigError("cannot evaluate an empty split");
  TrainConfig c = config;
  c.mcb_enabled = c.mcb_enabled && c.mcb_at_inference;
  NoGradGuard no_grad;
  std::optional<TextBank> bank;
  if (!c.motion_prompts()) bank = static_text_bank(s);
  std::vector<ViewPrediction> preds;
  for (const auto& v : videos) {
    for (const auto& view : v.views) {
      auto out = forward(view.to_tensor(), s, c, bank ? &*bank : nullptr);
      preds.push_back({v.video_id, view.view_id, v.label, out.dist.probabilities()});
    }
  }
  return summarize(preds, s.classes.size(), c.eval_mode);
}

std::vector<std::uint8_t> encode_checkpoint(const ModelState& s) {
  std::vector<std::uint8_t> out;
  wire::put_bytes(out, std::string_view(kCheckpointMagic, 4));
  out.push_back(kCheckpointVersion);
  nlohmann::json meta = {{"config", config_to_json(s.config)}, {"dim", s.dim}, {"classes", s.classes}};
  const auto text = meta.dump();
  wire::put_u32(out, static_cast<std::uint32_t>(text.size()));
  wire::put_bytes(out, text);
  wire::put_u64(out, s.step);
  wire::put_u32(out, static_cast<std::uint32_t>(s.rng_state.size()));
  wire::put_bytes(out, s.rng_state);
  const auto tensors = all_tensors(s);
  wire::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    wire::put_u32(out, static_cast<std::uint32_t>(nt.name.size()));
    wire::put_bytes(out, nt.name);
    wire::put_u32(out, static_cast<std::uint32_t>(nt.tensor.rank()));
    for (auto d : nt.tensor.shape()) wire::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : nt.tensor.values()) wire::put_f64(out, v);
  }
  return out;
}

ModelState decode_checkpoint(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  in.require(4, "magic");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw ParseError(ParseError::Kind::kBadMagic, 0, "bad magic: not a checkpoint");
  }
  in.bytes(4, "magic");
  const auto version_offset = in.offset();
  if (in.u8("version") != kCheckpointVersion) {
    throw ParseError(ParseError::Kind::kBadVersion, version_offset, "unsupported checkpoint version");
  }
  const auto meta_offset = in.offset();
  const auto text = in.bytes(in.u32("metadata length"), "metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::kInvalid, meta_offset, std::string("checkpoint metadata: ") + e.what());
  }
  const TrainConfig config = config_from_json(meta.at("config"));
  ModelState s = init_model(config, meta.at("dim").get<std::size_t>(), meta.at("classes").get<std::vector<std::string>>());
  s.step = in.u64("step");
  s.rng_state = in.bytes(in.u32("rng state length"), "rng state");

  std::map<std::string, Tensor> by_name;
  for (auto& nt : all_tensors(s)) by_name.emplace(nt.name, nt.tensor);
  const std::uint32_t count = in.u32("tensor count");
  if (count != by_name.size()) {
    throw ParseError(ParseError::Kind::kInvalid, in.offset(),
                     "checkpoint holds " + std::to_string(count) + " tensors, model has " + std::to_string(by_name.size()));
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto at = in.offset();
    const auto name = in.bytes(in.u32("tensor name length"), "tensor name");
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ParseError(ParseError::Kind::kInvalid, at, "unknown tensor '" + name + "'");
    Shape shape(in.u32("tensor rank"));
    for (auto& d : shape) d = in.u32("tensor extent");
    if (shape != it->second.shape()) {
      throw ParseError(ParseError::Kind::kInvalid, at,
                       "tensor '" + name + "' has shape " + shape_to_string(shape) + ", model expects " +
                           shape_to_string(it->second.shape()));
    }
    auto values = it->second.mutable_values();
    in.require(values.size() * 8, "tensor values");
    for (auto& v : values) v = in.f64("tensor value");
  }
  if (!in.done()) throw ParseError(ParseError::Kind::kInvalid, in.offset(), "trailing bytes after checkpoint");
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const ModelState& s) {
  wire::write_file(path, encode_checkpoint(s));
}

ModelState load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(wire::read_file(path)); }

}  // namespace flowclip
