// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/container.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "flowclip/error.hpp"

namespace flowclip {

Tensor FrameFeatureSequence::to_tensor() const {
  if (frames.size() != static_cast<std::size_t>(num_frames) * dim) {
    throw DimensionError("feature sequence '" + video_id + "' holds " + std::to_string(frames.size()) +
                         " values for " + std::to_string(num_frames) + "x" + std::to_string(dim));
  }
  return Tensor({num_frames, dim}, std::vector<double>(frames.begin(), frames.end()));
}

namespace wire {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void put_bytes(std::vector<std::uint8_t>& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

void Reader::require(std::size_t n, const char* what) const {
  if (remaining() < n) {
    throw ParseError(ParseError::Kind::kTruncated, pos_,
                     std::string("truncated ") + what + ": expected " + std::to_string(n) + " bytes, " +
                         std::to_string(remaining()) + " available");
  }
}

std::uint8_t Reader::u8(const char* what) {
  require(1, what);
  return bytes_[pos_++];
}

std::uint32_t Reader::u32(const char* what) {
  require(4, what);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64(const char* what) {
  require(8, what);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

float Reader::f32(const char* what) { return std::bit_cast<float>(u32(what)); }

double Reader::f64(const char* what) { return std::bit_cast<double>(u64(what)); }

std::string Reader::bytes(std::size_t n, const char* what) {
  require(n, what);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace wire

std::vector<std::uint8_t> encode_feature_records(std::span<const FrameFeatureSequence> records) {
  std::vector<std::uint8_t> out;
  wire::put_bytes(out, std::string_view(kFeatureMagic, 4));
  out.push_back(kFeatureVersion);
  wire::put_u32(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (r.frames.size() != static_cast<std::size_t>(r.num_frames) * r.dim) {
      throw DimensionError("record '" + r.video_id + "' holds " + std::to_string(r.frames.size()) + " values for " +
                           std::to_string(r.num_frames) + "x" + std::to_string(r.dim));
    }
    wire::put_u32(out, static_cast<std::uint32_t>(r.video_id.size()));
    wire::put_bytes(out, r.video_id);
    wire::put_u32(out, r.view_id);
    wire::put_u32(out, r.label_index);
    wire::put_u32(out, r.num_frames);
    wire::put_u32(out, r.dim);
    for (float v : r.frames) wire::put_f32(out, v);
  }
  return out;
}

std::vector<FrameFeatureSequence> decode_feature_records(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  in.require(4, "magic");
  if (std::memcmp(bytes.data(), kFeatureMagic, 4) != 0) {
    throw ParseError(ParseError::Kind::kBadMagic, 0, "bad magic: not a feature container");
  }
  in.bytes(4, "magic");
  const auto version_offset = in.offset();
  if (const auto version = in.u8("version"); version != kFeatureVersion) {
    throw ParseError(ParseError::Kind::kBadVersion, version_offset,
                     "unsupported container version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32("record count");
  std::vector<FrameFeatureSequence> records;
  records.reserve(std::min<std::size_t>(count, in.remaining() / 24 + 1));
  for (std::uint32_t k = 0; k < count; ++k) {
    FrameFeatureSequence r;
    const std::uint32_t id_len = in.u32("video id length");
    r.video_id = in.bytes(id_len, "video id");
    r.view_id = in.u32("view id");
    r.label_index = in.u32("label index");
    const auto frames_offset = in.offset();
    r.num_frames = in.u32("frame count");
    r.dim = in.u32("dimension");
    if (r.num_frames < 2) {
      throw ParseError(ParseError::Kind::kTooFewFrames, frames_offset,
                       "record '" + r.video_id + "' has " + std::to_string(r.num_frames) +
                           " frames; at least 2 are required");
    }
    if (r.dim == 0) throw ParseError(ParseError::Kind::kInvalid, frames_offset + 4, "record dimension is zero");
    const std::size_t n = static_cast<std::size_t>(r.num_frames) * r.dim;
    in.require(n * 4, "feature matrix");
    r.frames.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto at = in.offset();
      r.frames[i] = in.f32("feature value");
      if (!std::isfinite(r.frames[i])) {
        throw ParseError(ParseError::Kind::kNonFinite, at,
                         "non-finite feature value in record '" + r.video_id + "'");
      }
    }
    records.push_back(std::move(r));
  }
  if (!in.done()) {
    throw ParseError(ParseError::Kind::kInvalid, in.offset(),
                     std::to_string(in.remaining()) + " trailing bytes after the last record");
  }
  return records;
}

void write_feature_file(const std::filesystem::path& path, std::span<const FrameFeatureSequence> records) {
  wire::write_file(path, encode_feature_records(records));
}

std::vector<FrameFeatureSequence> read_feature_file(const std::filesystem::path& path) {
  return decode_feature_records(wire::read_file(path));
}

}  // namespace flowclip
