// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "flowclip/container.hpp"
#include "flowclip/error.hpp"
#include "flowclip/random.hpp"

namespace flowclip {
namespace {

FrameFeatureSequence random_record(Rng& rng, std::uint32_t t, std::uint32_t d) {
  FrameFeatureSequence r;
  r.video_id = "vid_" + std::to_string(rng.below(100000));
  r.view_id = static_cast<std::uint32_t>(rng.below(12));
  r.label_index = static_cast<std::uint32_t>(rng.below(51));
  r.num_frames = t;
  r.dim = d;
  for (std::uint32_t i = 0; i < t * d; ++i) r.frames.push_back(static_cast<float>(rng.normal(0.0, 10.0)));
  return r;
}

ParseError::Kind decode_error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_feature_records(bytes);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ParseError::Kind::kInvalid;
}

// Independent little-endian writer for the documented layout.
std::vector<std::uint8_t> hand_encode(const FrameFeatureSequence& r) {
  std::vector<std::uint8_t> out{'M', 'C', 'F', 'V', 0x01};
  auto u32 = [&out](std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  u32(1);
  u32(static_cast<std::uint32_t>(r.video_id.size()));
  out.insert(out.end(), r.video_id.begin(), r.video_id.end());
  u32(r.view_id);
  u32(r.label_index);
  u32(r.num_frames);
  u32(r.dim);
  for (float f : r.frames) u32(std::bit_cast<std::uint32_t>(f));
  return out;
}

TEST(Container, MatchesDocumentedByteLayout) {
  Rng rng(0);
  auto r = random_record(rng, 3, 4);
  const FrameFeatureSequence one[] = {r};
  EXPECT_EQ(encode_feature_records(one), hand_encode(r));
}

TEST(Container, RoundTripIsBitExact) {
  Rng rng(1);
  std::vector<FrameFeatureSequence> recs;
  for (int i = 0; i < 100; ++i) {
    recs.push_back(random_record(rng, 2 + static_cast<std::uint32_t>(rng.below(10)),
                                 1 + static_cast<std::uint32_t>(rng.below(32))));
  }
  recs[3].frames[0] = -0.0f;
  recs[4].frames[0] = std::numeric_limits<float>::denorm_min();
  recs[5].frames[0] = std::numeric_limits<float>::max();
  recs[6].video_id = "caf\xc3\xa9 \xe2\x9c\x93";
  const auto path = std::filesystem::temp_directory_path() / "flowclip_container_test.mcfv";
  write_feature_file(path, recs);
  const auto back = read_feature_file(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].video_id, recs[i].video_id);
    ASSERT_EQ(back[i].frames.size(), recs[i].frames.size());
    EXPECT_EQ(std::memcmp(back[i].frames.data(), recs[i].frames.data(), recs[i].frames.size() * 4), 0);
    EXPECT_EQ(back[i], recs[i]);
  }
}

TEST(Container, EmptyFileListRoundTrips) {
  EXPECT_TRUE(decode_feature_records(encode_feature_records({})).empty());
}

TEST(Container, RejectsBadMagic) {
  Rng rng(2);
  const FrameFeatureSequence one[] = {random_record(rng, 2, 2)};
  auto bytes = encode_feature_records(one);
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_EQ(decode_error_kind(bytes), ParseError::Kind::kBadMagic);
  EXPECT_EQ(decode_error_kind({'M', 'C'}), ParseError::Kind::kTruncated);
}

TEST(Container, RejectsBadVersion) {
  Rng rng(2);
  const FrameFeatureSequence one[] = {random_record(rng, 2, 2)};
  auto bytes = encode_feature_records(one);
  bytes[4] = 0x02;
  EXPECT_EQ(decode_error_kind(bytes), ParseError::Kind::kBadVersion);
}

TEST(Container, EveryTruncationIsRejected) {
  Rng rng(3);
  const FrameFeatureSequence recs[] = {random_record(rng, 3, 5), random_record(rng, 2, 5)};
  const auto bytes = encode_feature_records(recs);
  for (std::size_t n = 5; n < bytes.size(); ++n) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(decode_error_kind(cut), ParseError::Kind::kTruncated) << "length " << n;
  }
}

TEST(Container, TruncationMidMatrixNamesLengths) {
  Rng rng(4);
  const FrameFeatureSequence one[] = {random_record(rng, 4, 8)};
  auto bytes = encode_feature_records(one);
  bytes.resize(bytes.size() - 10);
  try {
    decode_feature_records(bytes);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 128 bytes"), std::string::npos) << msg;
    EXPECT_NE(msg.find("118 available"), std::string::npos) << msg;
  }
}

TEST(Container, RejectsSingleFrame) {
  Rng rng(5);
  const FrameFeatureSequence one[] = {random_record(rng, 1, 4)};
  EXPECT_EQ(decode_error_kind(encode_feature_records(one)), ParseError::Kind::kTooFewFrames);
}

TEST(Container, RejectsNonFiniteWithOffset) {
  Rng rng(6);
  auto r = random_record(rng, 2, 3);
  r.frames[4] = std::numeric_limits<float>::quiet_NaN();
  const FrameFeatureSequence one[] = {r};
  const auto bytes = encode_feature_records(one);
  try {
    decode_feature_records(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kNonFinite);
    EXPECT_EQ(e.offset(), bytes.size() - 2 * 4);
  }
}

TEST(Container, RejectsTrailingBytes) {
  Rng rng(7);
  const FrameFeatureSequence one[] = {random_record(rng, 2, 2)};
  auto bytes = encode_feature_records(one);
  bytes.push_back(0);
  EXPECT_EQ(decode_error_kind(bytes), ParseError::Kind::kInvalid);
}

TEST(Container, ToTensorWidensExactly) {
  Rng rng(8);
  auto r = random_record(rng, 3, 2);
  auto t = r.to_tensor();
  ASSERT_EQ(t.shape(), (Shape{3, 2}));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(t.values()[i], static_cast<double>(r.frames[i]));
}

}  // namespace
}  // namespace flowclip
