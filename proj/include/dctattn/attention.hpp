// Copyright 2026 The dctattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Self-attention in four flavours:
//
//   Vanilla       softmax(Q K^T / sqrt(d_head)) V on the full sequence.
//   DctNaive      compress Q, K, V separately with the truncated DCT, attend
//                 among the n_bar coefficients, inverse-transform.
//   DctEfficient  compress X once, project the n_bar coefficient rows,
//                 attend, inverse-transform. Never builds an n x n matrix.
//   DctIdeal      build the full attention weights E, low-pass them with the
//                 2-D DCT, then multiply by V. O(n^2); evaluation only.
//
// Naive and efficient are algebraically the same map. Ideal differs from
// efficient by the error of applying softmax in the compressed domain.

#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctattn/dct.hpp"
#include "dctattn/numerics.hpp"

namespace dctattn {

/// Projection weights of one head: d x d_head each.
struct AttentionParams {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;

  std::size_t d() const { return w_q.rows(); }
  std::size_t d_head() const { return w_q.cols(); }
};

struct MultiHeadParams {
  std::vector<AttentionParams> heads;
  Matrix w_o;  // (heads * d_head) x d

  std::size_t d() const { return w_o.cols(); }
};

enum class AttentionTag { Vanilla, DctEfficient, DctIdeal, DctNaive };

struct AttentionKind {
  AttentionTag tag = AttentionTag::Vanilla;
  std::size_t n_bar = 0;  // unused for Vanilla

  static AttentionKind vanilla() { return {AttentionTag::Vanilla, 0}; }
  static AttentionKind efficient(std::size_t n_bar) { return checked(AttentionTag::DctEfficient, n_bar); }
  static AttentionKind ideal(std::size_t n_bar) { return checked(AttentionTag::DctIdeal, n_bar); }
  static AttentionKind naive(std::size_t n_bar) { return checked(AttentionTag::DctNaive, n_bar); }

  bool uses_dct() const { return tag != AttentionTag::Vanilla; }

 private:
  static AttentionKind checked(AttentionTag tag, std::size_t n_bar) {
    if (n_bar < 1) throw std::invalid_argument("AttentionKind: n_bar must be at least 1");
    return {tag, n_bar};
  }
};

/// Glorot-uniform bound sqrt(6 / (fan_in + fan_out)).
inline Matrix glorot_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rand_uniform(rng, fan_in, fan_out, -bound, bound);
}

inline AttentionParams init_attention_params(Rng& rng, std::size_t d, std::size_t d_head) {
  AttentionParams p;
  p.w_q = glorot_uniform(rng, d, d_head);
  p.w_k = glorot_uniform(rng, d, d_head);
  p.w_v = glorot_uniform(rng, d, d_head);
  return p;
}

inline MultiHeadParams init_multi_head_params(Rng& rng, std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw std::invalid_argument("init_multi_head_params: d=" + std::to_string(d) +
                                " is not divisible by heads=" + std::to_string(heads));
  }
  MultiHeadParams p;
  const std::size_t d_head = d / heads;
  p.heads.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) p.heads.push_back(init_attention_params(rng, d, d_head));
  p.w_o = glorot_uniform(rng, heads * d_head, d);
  return p;
}

struct Qkv {
  Matrix q;
  Matrix k;
  Matrix v;
};

inline void check_head_params(const AttentionParams& p) {
  const auto& q = p.w_q;
  if (p.w_k.rows() != q.rows() || p.w_k.cols() != q.cols() || p.w_v.rows() != q.rows() ||
      p.w_v.cols() != q.cols()) {
    throw std::invalid_argument("attention params: W_Q " + q.shape() + ", W_K " + p.w_k.shape() +
                                ", W_V " + p.w_v.shape() + " are inconsistent");
  }
}

inline Qkv project_qkv(const Matrix& x, const AttentionParams& p) {
  check_head_params(p);
  if (x.cols() != p.d()) {
    throw std::invalid_argument("project_qkv: input " + x.shape() + " but W_Q is " + p.w_q.shape());
  }
  return {matmul(x, p.w_q), matmul(x, p.w_k), matmul(x, p.w_v)};
}

/// softmax(q k^T / sqrt(d_q)), row-stochastic.
inline Matrix attention_weights(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols()) {
    throw std::invalid_argument("attention: q " + q.shape() + " and k " + k.shape() +
                                " differ in width");
  }
  Matrix e = matmul_nt(q, k);
  scale_inplace(e, 1.0 / std::sqrt(static_cast<double>(q.cols())));
  softmax_rows_inplace(e);
  return e;
}

inline Matrix vanilla_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (k.rows() != v.rows()) {
    throw std::invalid_argument("attention: k " + k.shape() + " and v " + v.shape() +
                                " differ in length");
  }
  const Matrix e = attention_weights(q, k);
  return matmul(e, v);
}

namespace detail {

inline void require_plan_rows(const Matrix& x, const DctPlan& plan, const char* who) {
  if (x.rows() != plan.n()) {
    throw std::invalid_argument(std::string(who) + ": input has " + std::to_string(x.rows()) +
                                " rows, plan expects " + std::to_string(plan.n()));
  }
}

}  // namespace detail

/// Attention among n_bar compressed rows: softmax(Qb Kb^T / sqrt(d_head)) Vb
/// with Qb = x_bar W_Q etc. Output n_bar x d_head.
inline Matrix compressed_head_attention(const Matrix& x_bar, const AttentionParams& p) {
  const Qkv c = project_qkv(x_bar, p);
  return vanilla_attention(c.q, c.k, c.v);
}

/// D^T softmax((D Q)(D K)^T / sqrt(d_q)) (D V), compressing Q, K and V
/// individually.
inline Matrix naive_dct_attention(const Matrix& x, const AttentionParams& p, const DctPlan& plan) {
  detail::require_plan_rows(x, plan, "naive_dct_attention");
  Matrix compressed;
  {
    const Qkv full = project_qkv(x, p);
    const Matrix q_bar = dct_forward(plan, full.q);
    const Matrix k_bar = dct_forward(plan, full.k);
    const Matrix v_bar = dct_forward(plan, full.v);
    compressed = vanilla_attention(q_bar, k_bar, v_bar);
  }
  return dct_inverse(plan, compressed);
}

/// Compress X once, then attend among the n_bar coefficient rows.
inline Matrix efficient_dct_attention(const Matrix& x, const AttentionParams& p,
                                      const DctPlan& plan) {
  detail::require_plan_rows(x, plan, "efficient_dct_attention");
  Matrix compressed;
  {
    const Matrix x_bar = dct_forward(plan, x);
    compressed = compressed_head_attention(x_bar, p);
  }
  return dct_inverse(plan, compressed);
}

/// Low-pass reconstruction D^T (D E D^T) D of an n x n weight matrix.
inline Matrix lowpass_energy(const Matrix& e, const DctPlan& plan) {
  return dct2_inverse(plan, dct2_forward(plan, e));
}

inline Matrix ideal_dct_attention(const Matrix& x, const AttentionParams& p, const DctPlan& plan) {
  detail::require_plan_rows(x, plan, "ideal_dct_attention");
  const Qkv full = project_qkv(x, p);
  const Matrix e_tilde = lowpass_energy(attention_weights(full.q, full.k), plan);
  return matmul(e_tilde, full.v);
}

inline Matrix single_head_attention(const Matrix& x, const AttentionParams& p,
                                    AttentionKind kind, const DctPlan* plan) {
  switch (kind.tag) {
    case AttentionTag::Vanilla: {
      const Qkv full = project_qkv(x, p);
      return vanilla_attention(full.q, full.k, full.v);
    }
    case AttentionTag::DctEfficient:
      return efficient_dct_attention(x, p, *plan);
    case AttentionTag::DctIdeal:
      return ideal_dct_attention(x, p, *plan);
    case AttentionTag::DctNaive:
      return naive_dct_attention(x, p, *plan);
  }
  throw std::logic_error("single_head_attention: unknown kind");
}

inline void check_multi_head_params(const MultiHeadParams& params, std::size_t d) {
  if (params.heads.empty()) throw std::invalid_argument("multi_head: no heads");
  const std::size_t d_head = params.heads.front().d_head();
  for (const auto& h : params.heads) {
    check_head_params(h);
    if (h.d() != d || h.d_head() != d_head) {
      throw std::invalid_argument("multi_head: head projection " + h.w_q.shape() +
                                  " inconsistent with d=" + std::to_string(d) +
                                  ", d_head=" + std::to_string(d_head));
    }
  }
  if (params.w_o.rows() != params.heads.size() * d_head) {
    throw std::invalid_argument("multi_head: W_O has " + std::to_string(params.w_o.rows()) +
                                " rows, expected heads*d_head=" +
                                std::to_string(params.heads.size() * d_head));
  }
}

/// Multi-head self-attention written into a caller-owned n x d_out buffer.
///
/// Heads run one after another and are folded into `out` through their row
/// block of W_O, so only one head's working set is alive at a time. For the
/// efficient kind X is compressed once for all heads and the W_O projection
/// happens in the compressed domain before a single inverse transform.
/// `plan` must match (n, kind.n_bar) for DCT kinds; pass nullptr to use the
/// shared cache.
inline void multi_head_into(const Matrix& x, const MultiHeadParams& params, AttentionKind kind,
                            const DctPlan* plan, Matrix& out) {
  check_multi_head_params(params, x.cols());
  const std::size_t n = x.rows();
  const std::size_t d_out = params.w_o.cols();
  const std::size_t d_head = params.heads.front().d_head();
  if (out.rows() != n || out.cols() != d_out) {
    throw std::invalid_argument("multi_head: output buffer " + out.shape() + ", expected " +
                                std::to_string(n) + "x" + std::to_string(d_out));
  }
  std::shared_ptr<const DctPlan> cached;
  if (kind.uses_dct()) {
    if (kind.n_bar < 1 || kind.n_bar > n) {
      throw std::invalid_argument("multi_head: n_bar=" + std::to_string(kind.n_bar) +
                                  " outside [1, " + std::to_string(n) + "]");
    }
    if (plan == nullptr) {
      cached = PlanCache::global().get(n, kind.n_bar);
      plan = cached.get();
    } else if (plan->n() != n || plan->n_bar() != kind.n_bar) {
      throw std::invalid_argument("multi_head: plan does not match sequence length or n_bar");
    }
  }

  std::fill(out.data().begin(), out.data().end(), 0.0);
  if (kind.tag == AttentionTag::DctEfficient) {
    Matrix mixed(plan->n_bar(), d_out);
    {
      const Matrix x_bar = dct_forward(*plan, x);
      for (std::size_t h = 0; h < params.heads.size(); ++h) {
        const Matrix head = compressed_head_attention(x_bar, params.heads[h]);
        matmul_accumulate(head, params.w_o, mixed, h * d_head);
      }
    }
    dct_inverse_into(*plan, mixed, out);
    return;
  }
  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    const Matrix head = single_head_attention(x, params.heads[h], kind, plan);
    matmul_accumulate(head, params.w_o, out, h * d_head);
  }
}

inline Matrix multi_head(const Matrix& x, const MultiHeadParams& params, AttentionKind kind,
                         const DctPlan* plan = nullptr) {
  Matrix out(x.rows(), params.w_o.cols());
  multi_head_into(x, params, kind, plan, out);
  return out;
}

struct QkvGrad {
  Matrix dq;
  Matrix dk;
  Matrix dv;
};

/// Gradients of <upstream, vanilla_attention(q, k, v)> with respect to q, k, v.
inline QkvGrad vanilla_attention_vjp(const Matrix& q, const Matrix& k, const Matrix& v,
                                     const Matrix& upstream) {
  if (upstream.rows() != q.rows() || upstream.cols() != v.cols()) {
    throw std::invalid_argument("vanilla_attention_vjp: upstream " + upstream.shape() +
                                " does not match output " + std::to_string(q.rows()) + "x" +
                                std::to_string(v.cols()));
  }
  const Matrix p = attention_weights(q, k);
  QkvGrad g;
  g.dv = matmul_tn(p, upstream);
  Matrix ds = matmul_nt(upstream, v);  // dL/dP
  // Softmax Jacobian per row: dS = P .* (dP - <dP, P>).
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto dp = ds.row(i);
    auto pr = p.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < dp.size(); ++j) dot += dp[j] * pr[j];
    for (std::size_t j = 0; j < dp.size(); ++j) dp[j] = pr[j] * (dp[j] - dot);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  scale_inplace(ds, scale);
  g.dq = matmul(ds, k);
  g.dk = matmul_tn(ds, q);
  return g;
}

}  // namespace dctattn
