// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "flowclip/random.hpp"
#include "flowclip/tensor.hpp"

namespace flowclip::testing {

// Relative error between the analytic gradient of `loss_fn` (a scalar) and
// central differences, over every value of every tensor in `wrt`.
inline double fd_rel_error(const std::function<Tensor()>& loss_fn, std::vector<Tensor> wrt, double h = 1e-5) {
  for (auto& t : wrt) t.zero_grad();
  backward(loss_fn());
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  NoGradGuard no_grad;
  for (auto& t : wrt) {
    const auto analytic = t.grad();
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + h;
      const double up = loss_fn().item();
      v[i] = saved - h;
      const double down = loss_fn().item();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
  }
  const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
  return denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
}

inline Tensor random_leaf(Shape shape, Rng& rng, double stddev = 1.0) {
  Tensor t = normal_tensor(std::move(shape), stddev, rng);
  t.set_requires_grad(true);
  return t;
}

// Fixed random weights for reducing a tensor to a scalar.
inline Tensor probe_like(const Tensor& x, Rng& rng) { return normal_tensor(x.shape(), 1.0, rng); }

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

}  // namespace flowclip::testing
