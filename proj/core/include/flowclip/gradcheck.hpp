// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowclip/model.hpp"

namespace flowclip {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t frames = 4;  // T
  std::size_t dim = 16;
  std::size_t classes = 3;
  std::size_t prompt_len = 3;
  std::size_t max_step = 2;
  std::size_t heads = 2;
  std::size_t videos = 2;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Stddev of the noise added to every trainable value so zero-initialized
  /// residual paths carry gradient.
  double perturb = 0.2;
};

struct GroupCheck {
  std::string group;
  std::size_t params = 0;
  double rel_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::uint64_t seed = 0;
  std::vector<GroupCheck> groups;
  bool passed = false;
};

/// Full-toggle config used by grad_check.
TrainConfig gradcheck_config(const GradCheckOptions& options);

/// Central differences against the analytic gradient for every trainable
/// group. A group passes when ||a - n|| / max(||a||, ||n||) < tolerance.
GradCheckReport grad_check(const GradCheckOptions& options);

nlohmann::json gradcheck_to_json(const GradCheckReport& report);

}  // namespace flowclip
