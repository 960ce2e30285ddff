// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowclip {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes. The message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (head count, temporal step, prompt budget, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value or undefined quantity (e.g. cosine of a zero vector).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or JSON input. Carries the byte offset where parsing
/// stopped so callers can report it.
class ParseError : public Error {
 public:
  enum class Kind {
    kBadMagic,
    kBadVersion,
    kTruncated,
    kTooFewFrames,
    kNonFinite,
    kInvalid,
  };

  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

}  // namespace flowclip
