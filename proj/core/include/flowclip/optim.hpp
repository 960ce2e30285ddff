// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowclip/tensor.hpp"

namespace flowclip {

/// One momentum-SGD update in place: v = momentum*v + g; p = p - lr*v.
void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity, double lr,
                double momentum);

/// Cosine decay from lr0 at step 0 to 0 at step `total`:
/// lr0 * (1 + cos(pi * step / total)) / 2. Steps past `total` return 0.
double cosine_lr(std::size_t step, std::size_t total, double lr0);

class Sgd {
 public:
  Sgd(std::vector<Tensor> params, double momentum);

  /// Applies the update using each parameter's accumulated gradient.
  void step(double lr);
  void zero_grad();

  const std::vector<Tensor>& params() const { return params_; }
  const std::vector<std::vector<double>>& velocities() const { return velocity_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> velocity_;
  double momentum_;
};

}  // namespace flowclip
