// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "flowclip/random.hpp"
#include "flowclip/tensor.hpp"

namespace flowclip {

// Reserved ids: PAD, SOS, EOS, then one placeholder per learnable prompt slot.
// Word ids follow in a block of kWordBuckets hash buckets.
inline constexpr std::uint32_t kPadId = 0;
inline constexpr std::uint32_t kSosId = 1;
inline constexpr std::uint32_t kEosId = 2;
inline constexpr std::uint32_t kMaxPromptSlots = 16;
inline constexpr std::uint32_t kFirstWordId = 3 + kMaxPromptSlots;
inline constexpr std::uint32_t kWordBuckets = 4096;
inline constexpr std::uint32_t kDefaultVocabSize = kFirstWordId + kWordBuckets;

/// Frozen token-embedding table of the stand-in text tower.
struct TokenTable {
  std::uint32_t vocab_size = 0;
  std::uint32_t sos = kSosId;
  std::uint32_t eos = kEosId;
  std::uint32_t pad = kPadId;
  std::vector<std::uint32_t> slot_ids;
  /// vocab_size x D. Values are binary32-representable so the file
  /// round-trip is exact.
  Tensor embedding;

  std::size_t dim() const { return embedding.cols(); }
  /// First id available to hashed words.
  std::uint32_t first_word_id() const;
  std::uint32_t word_buckets() const { return vocab_size - first_word_id(); }
};

/// Seeded normal(0, stddev) table with the default reserved layout.
TokenTable make_token_table(std::size_t dim, std::uint64_t seed, double stddev = 1.0);

/// Throws ConfigError if reserved ids collide or exceed the vocabulary, or
/// if the table has no room for words.
void validate_token_table(const TokenTable& table);

/// 32-bit FNV-1a.
std::uint32_t fnv1a32(std::string_view bytes);

/// Lowercases ASCII, splits on whitespace and ASCII punctuation (punctuation
/// characters become their own tokens) and maps each token to
/// first_word_id + fnv1a32(token) % word_buckets.
std::vector<std::uint32_t> tokenize(std::string_view text, const TokenTable& table);

/// The token strings tokenize() hashes, in order.
std::vector<std::string> split_words(std::string_view text);

/// Embedding rows for `ids` as an n x D constant matrix.
Tensor embed(const TokenTable& table, std::span<const std::uint32_t> ids);

// Token table file: "MCTT" 0x01 | vocab_size | D | sos | eos | pad |
// slot_count | slot ids... | vocab_size*D binary32 LE.
void write_token_table(const std::filesystem::path& path, const TokenTable& table);
TokenTable read_token_table(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_token_table(const TokenTable& table);
TokenTable decode_token_table(std::span<const std::uint8_t> bytes);

}  // namespace flowclip
