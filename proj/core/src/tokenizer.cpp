// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <set>
#include <string>

#include "flowclip/container.hpp"
#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

namespace {

constexpr char kTableMagic[4] = {'M', 'C', 'T', 'T'};
constexpr std::uint8_t kTableVersion = 0x01;

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

}  // namespace

std::uint32_t TokenTable::first_word_id() const {
  std::uint32_t first = std::max({sos, eos, pad}) + 1;
  for (auto id : slot_ids) first = std::max(first, id + 1);
  return first;
}

TokenTable make_token_table(std::size_t dim, std::uint64_t seed, double stddev) {
  TokenTable table;
  table.vocab_size = kDefaultVocabSize;
  for (std::uint32_t i = 0; i < kMaxPromptSlots; ++i) table.slot_ids.push_back(3 + i);
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(table.vocab_size) * dim);
  for (auto& v : values) v = static_cast<double>(static_cast<float>(rng.normal(0.0, stddev)));
  table.embedding = Tensor({table.vocab_size, dim}, std::move(values));
  return table;
}

void validate_token_table(const TokenTable& table) {
  std::set<std::uint32_t> ids{table.sos, table.eos, table.pad};
  if (ids.size() != 3) throw ConfigError("token table: SOS, EOS and PAD ids must be distinct");
  for (auto id : table.slot_ids) {
    if (!ids.insert(id).second) throw ConfigError("token table: duplicate reserved id " + std::to_string(id));
  }
  for (auto id : ids) {
    if (id >= table.vocab_size) throw ConfigError("token table: reserved id " + std::to_string(id) + " >= vocab size");
  }
  if (table.first_word_id() >= table.vocab_size) throw ConfigError("token table: no ids left for words");
  if (!table.embedding.defined() || table.embedding.rank() != 2 || table.embedding.rows() != table.vocab_size) {
    throw DimensionError("token table: embedding must have vocab_size rows");
  }
  if (!all_finite(table.embedding)) throw NumericError("token table: non-finite embedding value");
}

std::uint32_t fnv1a32(std::string_view bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      words.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  flush();
  return words;
}

std::vector<std::uint32_t> tokenize(std::string_view text, const TokenTable& table) {
  auto words = split_words(text);
  if (words.empty()) throw ConfigError("cannot tokenize an empty string");
  const std::uint32_t first = table.first_word_id();
  const std::uint32_t buckets = table.vocab_size - first;
  std::vector<std::uint32_t> ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(first + fnv1a32(w) % buckets);
  return ids;
}

Tensor embed(const TokenTable& table, std::span<const std::uint32_t> ids) {
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return gather_rows(table.embedding, rows);
}

std::vector<std::uint8_t> encode_token_table(const TokenTable& table) {
  validate_token_table(table);
  std::vector<std::uint8_t> out;
  wire::put_bytes(out, std::string_view(kTableMagic, 4));
  out.push_back(kTableVersion);
  wire::put_u32(out, table.vocab_size);
  wire::put_u32(out, static_cast<std::uint32_t>(table.dim()));
  wire::put_u32(out, table.sos);
  wire::put_u32(out, table.eos);
  wire::put_u32(out, table.pad);
  wire::put_u32(out, static_cast<std::uint32_t>(table.slot_ids.size()));
  for (auto id : table.slot_ids) wire::put_u32(out, id);
  for (double v : table.embedding.values()) wire::put_f32(out, static_cast<float>(v));
  return out;
}

TokenTable decode_token_table(std::span<const std::uint8_t> bytes) {
  wire::Reader in(bytes);
  in.require(4, "magic");
  if (std::memcmp(bytes.data(), kTableMagic, 4) != 0) {
    throw ParseError(ParseError::Kind::kBadMagic, 0, "bad magic: not a token table");
  }
  in.bytes(4, "magic");
  const auto version_offset = in.offset();
  if (in.u8("version") != kTableVersion) {
    throw ParseError(ParseError::Kind::kBadVersion, version_offset, "unsupported token table version");
  }
  TokenTable table;
  table.vocab_size = in.u32("vocab size");
  const std::uint32_t dim = in.u32("dimension");
  table.sos = in.u32("sos id");
  table.eos = in.u32("eos id");
  table.pad = in.u32("pad id");
  const std::uint32_t slots = in.u32("slot count");
  in.require(static_cast<std::size_t>(slots) * 4, "slot ids");
  for (std::uint32_t i = 0; i < slots; ++i) table.slot_ids.push_back(in.u32("slot id"));
  if (table.vocab_size == 0 || dim == 0) {
    throw ParseError(ParseError::Kind::kInvalid, 5, "token table has zero vocabulary or dimension");
  }
  const std::size_t n = static_cast<std::size_t>(table.vocab_size) * dim;
  in.require(n * 4, "embedding matrix");
  std::vector<double> values(n);
  for (auto& v : values) {
    const auto at = in.offset();
    v = in.f32("embedding value");
    if (!std::isfinite(v)) throw ParseError(ParseError::Kind::kNonFinite, at, "non-finite token embedding");
  }
  if (!in.done()) throw ParseError(ParseError::Kind::kInvalid, in.offset(), "trailing bytes after token table");
  table.embedding = Tensor({table.vocab_size, dim}, std::move(values));
  validate_token_table(table);
  return table;
}

void write_token_table(const std::filesystem::path& path, const TokenTable& table) {
  wire::write_file(path, encode_token_table(table));
}

TokenTable read_token_table(const std::filesystem::path& path) { return decode_token_table(wire::read_file(path)); }

}  // namespace flowclip
