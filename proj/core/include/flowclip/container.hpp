// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowclip/tensor.hpp"

namespace flowclip {

/// Frame-level features of one view of one video, as produced by a frozen
/// image tower: `num_frames` rows of `dim` binary32 values, row-major.
struct FrameFeatureSequence {
  std::string video_id;
  std::uint32_t view_id = 0;
  std::uint32_t label_index = 0;
  std::uint32_t num_frames = 0;
  std::uint32_t dim = 0;
  std::vector<float> frames;

  /// num_frames x dim matrix in double precision.
  Tensor to_tensor() const;

  bool operator==(const FrameFeatureSequence&) const = default;
};

// Feature container layout (all integers u32 little-endian):
//   "MCFV" 0x01 | record_count | per record:
//   id_len, id bytes (UTF-8), view_id, label_index, T, D, T*D binary32 LE.
inline constexpr char kFeatureMagic[4] = {'M', 'C', 'F', 'V'};
inline constexpr std::uint8_t kFeatureVersion = 0x01;

std::vector<std::uint8_t> encode_feature_records(std::span<const FrameFeatureSequence> records);

/// Throws ParseError (bad magic, bad version, truncation, T < 2, non-finite
/// value, D mismatch with T*D) with the byte offset of the failure.
std::vector<FrameFeatureSequence> decode_feature_records(std::span<const std::uint8_t> bytes);

void write_feature_file(const std::filesystem::path& path, std::span<const FrameFeatureSequence> records);
std::vector<FrameFeatureSequence> read_feature_file(const std::filesystem::path& path);

/// Little-endian helpers shared by the binary formats.
namespace wire {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_f64(std::vector<std::uint8_t>& out, double v);
void put_bytes(std::vector<std::uint8_t>& out, std::string_view s);

/// Bounds-checked sequential reader. Reads past the end throw ParseError
/// (kTruncated) naming the expected and available byte counts.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  bool done() const noexcept { return pos_ == bytes_.size(); }

  void require(std::size_t n, const char* what) const;
  std::uint8_t u8(const char* what);
  std::uint32_t u32(const char* what);
  std::uint64_t u64(const char* what);
  float f32(const char* what);
  double f64(const char* what);
  std::string bytes(std::size_t n, const char* what);

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace wire

}  // namespace flowclip
