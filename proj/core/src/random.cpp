// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/random.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "flowclip/error.hpp"

namespace flowclip {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return mean + stddev * r * std::cos(theta);
}

std::size_t Rng::below(std::size_t n) {
  if (n == 0) throw Error("Rng::below(0)");
  // Rejection sampling for an unbiased result.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

Rng Rng::fork() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_ << ' ' << has_spare_ << ' ' << std::hexfloat << spare_;
  return out.str();
}

void Rng::set_state(const std::string& state) {
  std::istringstream in(state);
  std::string spare;
  in >> engine_ >> has_spare_ >> spare;
  if (!in) throw Error("invalid RNG state");
  spare_ = std::strtod(spare.c_str(), nullptr);
}

Tensor normal_tensor(Shape shape, double stddev, Rng& rng) {
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = rng.normal(0.0, stddev);
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace flowclip
