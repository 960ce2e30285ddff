// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "flowclip/error.hpp"

namespace flowclip {

namespace {

void check_hyper(double lr, double momentum) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
}

}  // namespace

void sgd_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity, double lr,
                double momentum) {
  check_hyper(lr, momentum);
  if (grad.size() != param.size() || velocity.size() != param.size()) {
    throw DimensionError("sgd_update: parameter has " + std::to_string(param.size()) + " values, gradient " +
                         std::to_string(grad.size()) + ", velocity " + std::to_string(velocity.size()));
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= lr * velocity[i];
  }
}

double cosine_lr(std::size_t step, std::size_t total, double lr0) {
  if (total == 0) return lr0;
  if (step >= total) return 0.0;
  const double t = static_cast<double>(step) / static_cast<double>(total);
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

Sgd::Sgd(std::vector<Tensor> params, double momentum) : params_(std::move(params)), momentum_(momentum) {
  check_hyper(0.0, momentum);
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.numel(), 0.0);
}

void Sgd::step(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const auto& g = p.node()->grad;
    if (g.empty()) {
      std::vector<double> zeros(p.numel(), 0.0);
      sgd_update(p.mutable_values(), zeros, velocity_[i], lr, momentum_);
    } else {
      sgd_update(p.mutable_values(), g, velocity_[i], lr, momentum_);
    }
  }
}

void Sgd::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace flowclip
