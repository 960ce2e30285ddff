// Copyright 2026 The FlowCLIP Authors
// SPDX-License-Identifier: Apache-2.0

#include "flowclip/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowclip/error.hpp"
#include "flowclip/ops.hpp"

namespace flowclip {

Linear make_linear(std::size_t in, std::size_t out, double stddev, Rng& rng) {
  Linear layer{normal_tensor({in, out}, stddev, rng), Tensor({out}, 0.0)};
  layer.weight.set_requires_grad(true);
  layer.bias.set_requires_grad(true);
  return layer;
}

Linear make_zero_linear(std::size_t in, std::size_t out) {
  Linear layer{Tensor({in, out}, 0.0), Tensor({out}, 0.0)};
  layer.weight.set_requires_grad(true);
  layer.bias.set_requires_grad(true);
  return layer;
}

LayerNormParams make_layer_norm(std::size_t dim) {
  LayerNormParams ln{Tensor({dim}, 1.0), Tensor({dim}, 0.0)};
  ln.gamma.set_requires_grad(true);
  ln.beta.set_requires_grad(true);
  return ln;
}

AttentionBlockParams make_attention_block(std::size_t dim, std::size_t heads, std::size_t expansion, Rng& rng,
                                          BlockInit init) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError("attention dim " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (expansion == 0) throw ConfigError("ffn expansion must be positive");
  AttentionBlockParams p;
  p.heads = heads;
  p.expansion = expansion;
  p.q_proj = make_linear(dim, dim, init.stddev, rng);
  p.k_proj = make_linear(dim, dim, init.stddev, rng);
  p.v_proj = make_linear(dim, dim, init.stddev, rng);
  p.o_proj = init.zero_residual_outputs ? make_zero_linear(dim, dim) : make_linear(dim, dim, init.stddev, rng);
  p.ln1 = make_layer_norm(dim);
  p.ln2 = make_layer_norm(dim);
  p.ffn1 = make_linear(dim, expansion * dim, init.stddev, rng);
  p.ffn2 = init.zero_residual_outputs ? make_zero_linear(expansion * dim, dim)
                                      : make_linear(expansion * dim, dim, init.stddev, rng);
  return p;
}

Tensor linear(const Tensor& x, const Linear& layer) {
  if (x.rank() == 1) return reshape(add(matmul(reshape(x, {1, x.numel()}), layer.weight), layer.bias), {layer.bias.numel()});
  return add(matmul(x, layer.weight), layer.bias);
}

Tensor layer_norm(const Tensor& x, const LayerNormParams& ln) { return layer_norm(x, ln.gamma, ln.beta); }

namespace {

struct AttentionShape {
  std::size_t n, m, dim, heads, head_dim;
};

AttentionShape check_attention(const Tensor& q, const Tensor& k, std::size_t heads, bool causal) {
  if (q.rank() != 2 || k.rank() != 2 || q.cols() != k.cols()) {
    throw DimensionError("attention: incompatible shapes " + shape_to_string(q.shape()) + " and " +
                         shape_to_string(k.shape()));
  }
  if (heads == 0 || q.cols() % heads != 0) {
    throw ConfigError("attention dim " + std::to_string(q.cols()) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (causal && q.rows() != k.rows()) throw DimensionError("causal attention needs as many queries as keys");
  return {q.rows(), k.rows(), q.cols(), heads, q.cols() / heads};
}

// probs[h][i][j], flattened.
std::vector<double> attention_probs(std::span<const double> Q, std::span<const double> K, const AttentionShape& s,
                                    bool causal) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
  std::vector<double> probs(s.heads * s.n * s.m, 0.0);
  for (std::size_t h = 0; h < s.heads; ++h) {
    const std::size_t off = h * s.head_dim;
    for (std::size_t i = 0; i < s.n; ++i) {
      double* pr = probs.data() + (h * s.n + i) * s.m;
      const std::size_t visible = causal ? i + 1 : s.m;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < visible; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < s.head_dim; ++c) dot += Q[i * s.dim + off + c] * K[j * s.dim + off + c];
        pr[j] = dot * scale;
        mx = std::max(mx, pr[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < visible; ++j) z += (pr[j] = std::exp(pr[j] - mx));
      for (std::size_t j = 0; j < visible; ++j) pr[j] /= z;
    }
  }
  return probs;
}

}  // namespace

std::vector<double> attention_weights(const Tensor& q, const Tensor& k, std::size_t heads, bool causal) {
  const auto s = check_attention(q, k, heads, causal);
  return attention_probs(q.values(), k.values(), s, causal);
}

Tensor multi_head_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads, bool causal) {
  const auto s = check_attention(q, k, heads, causal);
  if (v.shape() != k.shape()) {
    throw DimensionError("attention: value shape " + shape_to_string(v.shape()) + " differs from key shape " +
                         shape_to_string(k.shape()));
  }
  auto probs = attention_probs(q.values(), k.values(), s, causal);
  auto V = v.values();
  std::vector<double> out(s.n * s.dim, 0.0);
  for (std::size_t h = 0; h < s.heads; ++h) {
    const std::size_t off = h * s.head_dim;
    for (std::size_t i = 0; i < s.n; ++i) {
      const double* pr = probs.data() + (h * s.n + i) * s.m;
      double* orow = out.data() + i * s.dim + off;
      for (std::size_t j = 0; j < s.m; ++j) {
        const double w = pr[j];
        if (w == 0.0) continue;  // masked
        const double* vrow = V.data() + j * s.dim + off;
        for (std::size_t c = 0; c < s.head_dim; ++c) orow[c] += w * vrow[c];
      }
    }
  }
  return make_result({s.n, s.dim}, std::move(out), {q, k, v}, [s, probs = std::move(probs)](detail::Node& self) {
    const auto& G = self.grad;
    const auto& Q = self.inputs[0]->data;
    const auto& K = self.inputs[1]->data;
    const auto& Vd = self.inputs[2]->data;
    const double scale = 1.0 / std::sqrt(static_cast<double>(s.head_dim));
    std::vector<double>* gq = self.needs_grad(0) ? &self.inputs[0]->grad_buffer() : nullptr;
    std::vector<double>* gk = self.needs_grad(1) ? &self.inputs[1]->grad_buffer() : nullptr;
    std::vector<double>* gv = self.needs_grad(2) ? &self.inputs[2]->grad_buffer() : nullptr;
    std::vector<double> dscore(s.m);
    for (std::size_t h = 0; h < s.heads; ++h) {
      const std::size_t off = h * s.head_dim;
      for (std::size_t i = 0; i < s.n; ++i) {
        const double* pr = probs.data() + (h * s.n + i) * s.m;
        const double* grow = G.data() + i * s.dim + off;
        // dP_ij = dO_i . V_j ; dS = P * (dP - sum_j P dP)
        double dot = 0.0;
        for (std::size_t j = 0; j < s.m; ++j) {
          double dp = 0.0;
          if (pr[j] != 0.0) {
            const double* vrow = Vd.data() + j * s.dim + off;
            for (std::size_t c = 0; c < s.head_dim; ++c) dp += grow[c] * vrow[c];
          }
          dscore[j] = dp;
          dot += pr[j] * dp;
        }
        for (std::size_t j = 0; j < s.m; ++j) {
          if (pr[j] == 0.0) continue;
          const double ds = pr[j] * (dscore[j] - dot) * scale;
          if (gv) {
            double* gvrow = gv->data() + j * s.dim + off;
            for (std::size_t c = 0; c < s.head_dim; ++c) gvrow[c] += pr[j] * grow[c];
          }
          if (gq) {
            double* gqrow = gq->data() + i * s.dim + off;
            const double* krow = K.data() + j * s.dim + off;
            for (std::size_t c = 0; c < s.head_dim; ++c) gqrow[c] += ds * krow[c];
          }
          if (gk) {
            double* gkrow = gk->data() + j * s.dim + off;
            const double* qrow = Q.data() + i * s.dim + off;
            for (std::size_t c = 0; c < s.head_dim; ++c) gkrow[c] += ds * qrow[c];
          }
        }
      }
    }
  }, "multi_head_attention");
}

Tensor attention_block(const Tensor& x, const Tensor& ctx, const AttentionBlockParams& p, bool causal) {
  if (x.rank() != 2 || ctx.rank() != 2 || x.cols() != p.dim() || ctx.cols() != p.dim()) {
    throw DimensionError("attention_block: incompatible shapes " + shape_to_string(x.shape()) + " and " +
                         shape_to_string(ctx.shape()));
  }
  const Tensor xn = layer_norm(x, p.ln1);
  const Tensor cn = ctx.node() == x.node() ? xn : layer_norm(ctx, p.ln1);
  const Tensor attn = multi_head_attention(linear(xn, p.q_proj), linear(cn, p.k_proj), linear(cn, p.v_proj), p.heads,
                                           causal);
  const Tensor h = add(x, linear(attn, p.o_proj));
  const Tensor ffn = linear(gelu(linear(layer_norm(h, p.ln2), p.ffn1)), p.ffn2);
  return add(h, ffn);
}

Tensor self_attention_block(const Tensor& x, const AttentionBlockParams& p, bool causal) {
  return attention_block(x, x, p, causal);
}

void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const Linear& layer) {
  out.push_back({prefix + ".weight", layer.weight});
  out.push_back({prefix + ".bias", layer.bias});
}

void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const LayerNormParams& ln) {
  out.push_back({prefix + ".gamma", ln.gamma});
  out.push_back({prefix + ".beta", ln.beta});
}

void append_named(std::vector<NamedTensor>& out, const std::string& prefix, const AttentionBlockParams& p) {
  append_named(out, prefix + ".q_proj", p.q_proj);
  append_named(out, prefix + ".k_proj", p.k_proj);
  append_named(out, prefix + ".v_proj", p.v_proj);
  append_named(out, prefix + ".o_proj", p.o_proj);
  append_named(out, prefix + ".ln1", p.ln1);
  append_named(out, prefix + ".ln2", p.ln2);
  append_named(out, prefix + ".ffn1", p.ffn1);
  append_named(out, prefix + ".ffn2", p.ffn2);
}

}  // namespace flowclip
