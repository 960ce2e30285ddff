// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "flowclip/error.hpp"

namespace flowclip {

namespace {

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                       shape_to_string(b.shape()));
}

void require_matrix(const char* op, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_to_string(x.shape()));
}

// Views any rank-1/2 tensor as rows x cols over its last axis.
struct RowView {
  std::size_t rows;
  std::size_t cols;
};

RowView row_view(const Tensor& x) {
  const auto& s = x.shape();
  if (s.empty()) return {1, 1};
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw DimensionError("expected rank <= 2, got " + shape_to_string(s));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul", a, b);
  std::vector<double> out(m * n, 0.0);
  auto A = a.values();
  auto B = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& self) {
    const auto& G = self.grad;
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (an.requires_grad) {
      auto& ga = an.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bn.data.data() + p * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (bn.requires_grad) {
      auto& gb = bn.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = an.data[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  }, "matmul");
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto A = a.values();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  return make_result({c, r}, std::move(out), {a}, [r, c](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  }, "transpose");
}

namespace {

bool row_broadcastable(const Tensor& a, const Tensor& b) {
  return a.rank() == 2 && b.rank() == 1 && b.numel() == a.cols();
}

Tensor add_scaled(const Tensor& a, const Tensor& b, double sign, const char* op) {
  const bool same = a.shape() == b.shape();
  if (!same && !row_broadcastable(a, b)) mismatch(op, a, b);
  auto A = a.values();
  auto B = b.values();
  std::vector<double> out(A.begin(), A.end());
  const std::size_t width = B.size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * B[same ? i : i % width];
  return make_result(a.shape(), std::move(out), {a, b}, [same, width, sign](detail::Node& self) {
    const auto& G = self.grad;
    if (self.needs_grad(0)) {
      auto& ga = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i];
    }
    if (self.needs_grad(1)) {
      auto& gb = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) gb[same ? i : i % width] += sign * G[i];
    }
  }, op);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_scaled(a, b, 1.0, "add"); }

Tensor sub(const Tensor& a, const Tensor& b) { return add_scaled(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  auto A = a.values();
  auto B = b.values();
  std::vector<double> out(A.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    const auto& G = self.grad;
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (an.requires_grad) {
      auto& ga = an.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) ga[i] += G[i] * bn.data[i];
    }
    if (bn.requires_grad) {
      auto& gb = bn.grad_buffer();
      for (std::size_t i = 0; i < G.size(); ++i) gb[i] += G[i] * an.data[i];
    }
  }, "mul");
}

Tensor scale(const Tensor& x, double factor) {
  auto X = x.values();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i] * factor;
  return make_result(x.shape(), std::move(out), {x}, [factor](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
  }, "scale");
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return make_result({}, {total}, {x}, [](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  }, "sum");
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor avg_pool_rows(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("avg_pool_rows: expected a matrix, got " + shape_to_string(x.shape()));
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(d, 0.0);
  auto X = x.values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[j] += X[i * d + j];
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : out) v *= inv;
  return make_result({d}, std::move(out), {x}, [n, d, inv](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += inv * self.grad[j];
  }, "avg_pool_rows");
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  auto X = x.values();
  return make_result(std::move(shape), std::vector<double>(X.begin(), X.end()), {x}, [](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  }, "reshape");
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto [n, d] = row_view(x);
  if (gamma.numel() != d || beta.numel() != d) mismatch("layer_norm", x, gamma);
  auto X = x.values();
  auto Gm = gamma.values();
  auto Bt = beta.values();
  std::vector<double> out(n * d);
  std::vector<double> x_hat(n * d);
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xr = X.data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (xr[j] - mu) * is;
      x_hat[i * d + j] = h;
      out[i * d + j] = Gm[j] * h + Bt[j];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [n, d, x_hat = std::move(x_hat), inv_std = std::move(inv_std)](detail::Node& self) {
    const auto& G = self.grad;
    const auto& gm = self.inputs[1]->data;
    if (self.needs_grad(0)) {
      auto& gx = self.inputs[0]->grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double gh = G[i * d + j] * gm[j];
          sum_g += gh;
          sum_gh += gh * x_hat[i * d + j];
        }
        const double inv_d = 1.0 / static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) {
          const double gh = G[i * d + j] * gm[j];
          gx[i * d + j] += inv_std[i] * (gh - inv_d * sum_g - x_hat[i * d + j] * inv_d * sum_gh);
        }
      }
    }
    if (self.needs_grad(1)) {
      auto& gg = self.inputs[1]->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gg[j] += G[i * d + j] * x_hat[i * d + j];
    }
    if (self.needs_grad(2)) {
      auto& gb = self.inputs[2]->grad_buffer();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gb[j] += G[i * d + j];
    }
  }, "layer_norm");
}

Tensor gelu(const Tensor& x) {
  auto X = x.values();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = 0.5 * X[i] * (1.0 + std::erf(X[i] * std::numbers::sqrt2 / 2.0));
  return make_result(x.shape(), std::move(out), {x}, [](detail::Node& self) {
    const auto& xs = self.inputs[0]->data;
    auto& g = self.inputs[0]->grad_buffer();
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double cdf = 0.5 * (1.0 + std::erf(xs[i] * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xs[i] * xs[i]);
      g[i] += self.grad[i] * (cdf + xs[i] * pdf);
    }
  }, "gelu");
}

Tensor softmax(const Tensor& x, int axis) {
  const auto rank = static_cast<int>(x.rank());
  if (rank == 0) throw DimensionError("softmax: expected rank >= 1");
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) throw DimensionError("softmax: axis out of range for " + shape_to_string(x.shape()));
  // Index map: `outer` independent slices of length `len` with stride `stride`.
  std::size_t len, outer, stride;
  if (rank == 1) {
    len = x.dim(0), outer = 1, stride = 1;
  } else if (axis == 1) {
    len = x.cols(), outer = x.rows(), stride = 1;
  } else {
    len = x.rows(), outer = x.cols(), stride = x.cols();
  }
  const bool by_col = rank == 2 && axis == 0;
  auto index = [=](std::size_t s, std::size_t k) { return by_col ? k * stride + s : s * len + k; };
  auto X = x.values();
  std::vector<double> out(X.size());
  for (std::size_t s = 0; s < outer; ++s) {
    double mx = X[index(s, 0)];
    for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, X[index(s, k)]);
    double z = 0.0;
    for (std::size_t k = 0; k < len; ++k) z += (out[index(s, k)] = std::exp(X[index(s, k)] - mx));
    for (std::size_t k = 0; k < len; ++k) out[index(s, k)] /= z;
  }
  return make_result(x.shape(), std::move(out), {x}, [=](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& y = self.data;
    for (std::size_t s = 0; s < outer; ++s) {
      double dot = 0.0;
      for (std::size_t k = 0; k < len; ++k) dot += self.grad[index(s, k)] * y[index(s, k)];
      for (std::size_t k = 0; k < len; ++k) {
        const auto i = index(s, k);
        g[i] += y[i] * (self.grad[i] - dot);
      }
    }
  }, "softmax");
}

Tensor log_softmax(const Tensor& x) {
  const auto [n, d] = row_view(x);
  auto X = x.values();
  std::vector<double> out(X.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double* xr = X.data() + i * d;
    const double mx = *std::max_element(xr, xr + d);
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) z += std::exp(xr[j] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xr[j] - lz;
  }
  return make_result(x.shape(), std::move(out), {x}, [n, d](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < n; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < d; ++j) gsum += self.grad[i * d + j];
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i * d + j] - std::exp(self.data[i * d + j]) * gsum;
    }
  }, "log_softmax");
}

Tensor pick(const Tensor& x, std::size_t index) {
  if (index >= x.numel()) {
    throw DimensionError("pick: index " + std::to_string(index) + " out of range for " + shape_to_string(x.shape()));
  }
  return make_result({}, {x.values()[index]}, {x}, [index](detail::Node& self) {
    self.inputs[0]->grad_buffer()[index] += self.grad[0];
  }, "pick");
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_matrix("gather_rows", x);
  const std::size_t n = x.rows(), d = x.cols();
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  for (auto r : idx) {
    if (r >= n) throw DimensionError("gather_rows: row " + std::to_string(r) + " out of range for " + shape_to_string(x.shape()));
  }
  auto X = x.values();
  std::vector<double> out(idx.size() * d);
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy_n(X.data() + idx[i] * d, d, out.data() + i * d);
  const std::size_t m = idx.size();
  return make_result({m, d}, std::move(out), {x}, [idx = std::move(idx), d](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g[idx[i] * d + j] += self.grad[i * d + j];
  }, "gather_rows");
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  require_matrix("slice_rows", x);
  if (count == 0 || start + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") out of range for " + shape_to_string(x.shape()));
  }
  const std::size_t d = x.cols();
  auto X = x.values();
  std::vector<double> out(X.begin() + static_cast<std::ptrdiff_t>(start * d),
                          X.begin() + static_cast<std::ptrdiff_t>((start + count) * d));
  return make_result({count, d}, std::move(out), {x}, [start, d](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * d + i] += self.grad[i];
  }, "slice_rows");
}

Tensor row(const Tensor& x, std::size_t index) {
  require_matrix("row", x);
  return reshape(slice_rows(x, index, 1), {x.cols()});
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t d = row_view(parts[0]).cols;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rank() == 0 || row_view(p).cols != d) mismatch("concat_rows", parts[0], p);
    total += row_view(p).rows;
  }
  std::vector<double> out;
  out.reserve(total * d);
  std::vector<std::size_t> offsets;
  offsets.reserve(parts.size());
  for (const auto& p : parts) {
    offsets.push_back(out.size());
    auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return make_result({total, d}, std::move(out), std::vector<Tensor>(parts.begin(), parts.end()),
                     [offsets = std::move(offsets)](detail::Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      if (!self.needs_grad(k)) continue;
      auto& g = self.inputs[k]->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offsets[k] + i];
    }
  }, "concat_rows");
}

Tensor normalize_rows(const Tensor& x) {
  const auto [n, d] = row_view(x);
  auto X = x.values();
  std::vector<double> out(X.size());
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) sq += X[i * d + j] * X[i * d + j];
    const double nr = std::sqrt(sq);
    if (!(nr > 0.0) || !std::isfinite(nr)) {
      throw NumericError("normalize_rows: row " + std::to_string(i) + " has norm " + std::to_string(nr));
    }
    norms[i] = nr;
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = X[i * d + j] / nr;
  }
  return make_result(x.shape(), std::move(out), {x}, [n, d, norms = std::move(norms)](detail::Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& y = self.data;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += y[i * d + j] * self.grad[i * d + j];
      for (std::size_t j = 0; j < d; ++j) {
        g[i * d + j] += (self.grad[i * d + j] - y[i * d + j] * dot) / norms[i];
      }
    }
  }, "normalize_rows");
}

bool all_finite(const Tensor& x) {
  for (double v : x.values()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace flowclip
