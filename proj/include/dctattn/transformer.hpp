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

// Forward-only post-LN transformer encoder with a pluggable attention kind.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dctattn/attention.hpp"
#include "dctattn/numerics.hpp"

namespace dctattn {

struct EncoderConfig {
  std::size_t n_blocks = 4;
  std::size_t d = 512;
  std::size_t heads = 8;
  std::size_t d_ff = 2048;
  std::size_t max_len = 4096;
  std::size_t vocab_size = 30522;
  AttentionKind attention = AttentionKind::vanilla();
  std::uint64_t seed = 0;
  double ln_eps = 1e-12;

  void validate() const {
    if (d == 0 || heads == 0 || d_ff == 0 || max_len == 0 || vocab_size == 0) {
      throw std::invalid_argument("EncoderConfig: all sizes must be at least 1");
    }
    if (d % heads != 0) {
      throw std::invalid_argument("EncoderConfig: d=" + std::to_string(d) +
                                  " not divisible by heads=" + std::to_string(heads));
    }
  }
};

struct LayerNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;

  static LayerNormParams identity(std::size_t d) { return {std::vector<double>(d, 1.0), std::vector<double>(d, 0.0)}; }
};

struct BlockWeights {
  MultiHeadParams attention;
  Matrix w1;  // d x d_ff
  std::vector<double> b1;
  Matrix w2;  // d_ff x d
  std::vector<double> b2;
  LayerNormParams ln1;
  LayerNormParams ln2;
};

struct EncoderWeights {
  Matrix token_embedding;     // vocab_size x d
  Matrix position_embedding;  // max_len x d
  std::vector<BlockWeights> blocks;
};

inline EncoderWeights init_encoder_weights(const EncoderConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  EncoderWeights w;
  w.token_embedding = glorot_uniform(rng, cfg.vocab_size, cfg.d);
  w.position_embedding = glorot_uniform(rng, cfg.max_len, cfg.d);
  w.blocks.reserve(cfg.n_blocks);
  for (std::size_t b = 0; b < cfg.n_blocks; ++b) {
    BlockWeights blk;
    blk.attention = init_multi_head_params(rng, cfg.d, cfg.heads);
    blk.w1 = glorot_uniform(rng, cfg.d, cfg.d_ff);
    blk.b1.assign(cfg.d_ff, 0.0);
    blk.w2 = glorot_uniform(rng, cfg.d_ff, cfg.d);
    blk.b2.assign(cfg.d, 0.0);
    blk.ln1 = LayerNormParams::identity(cfg.d);
    blk.ln2 = LayerNormParams::identity(cfg.d);
    w.blocks.push_back(std::move(blk));
  }
  return w;
}

/// Token row plus position row for every position.
inline Matrix embed(std::span<const std::size_t> token_ids, const EncoderWeights& w) {
  const std::size_t n = token_ids.size();
  const std::size_t d = w.token_embedding.cols();
  if (n > w.position_embedding.rows()) {
    throw std::invalid_argument("embed: sequence length " + std::to_string(n) +
                                " exceeds max_len " +
                                std::to_string(w.position_embedding.rows()));
  }
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t id = token_ids[i];
    if (id >= w.token_embedding.rows()) {
      throw std::invalid_argument("embed: token id " + std::to_string(id) + " at position " +
                                  std::to_string(i) + " outside vocabulary of " +
                                  std::to_string(w.token_embedding.rows()));
    }
    auto dst = x.row(i);
    auto tok = w.token_embedding.row(id);
    auto pos = w.position_embedding.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = tok[j] + pos[j];
  }
  return x;
}

/// y = LN(x + MhSA(x)); out = LN(y + GELU(y W1 + b1) W2 + b2).
inline Matrix encoder_block(const Matrix& x, const BlockWeights& w, AttentionKind kind,
                            double ln_eps = 1e-12) {
  if (x.cols() != w.attention.d()) {
    throw std::invalid_argument("encoder_block: input " + x.shape() + " but block width is " +
                                std::to_string(w.attention.d()));
  }
  Matrix y;
  {
    Matrix attn = multi_head(x, w.attention, kind);
    add_inplace(attn, x);
    y = layer_norm(attn, w.ln1.gamma, w.ln1.beta, ln_eps);
  }
  Matrix ff;
  {
    Matrix hidden = matmul(y, w.w1);
    add_row_bias(hidden, w.b1);
    hidden = gelu(hidden);
    ff = matmul(hidden, w.w2);
  }
  add_row_bias(ff, w.b2);
  add_inplace(ff, y);
  return layer_norm(ff, w.ln2.gamma, w.ln2.beta, ln_eps);
}

inline Matrix encoder_forward(std::span<const std::size_t> token_ids, const EncoderWeights& w,
                              const EncoderConfig& cfg) {
  cfg.validate();
  if (w.blocks.size() != cfg.n_blocks || w.token_embedding.cols() != cfg.d) {
    throw std::invalid_argument("encoder_forward: weights do not match config");
  }
  Matrix x = embed(token_ids, w);
  for (const auto& blk : w.blocks) x = encoder_block(x, blk, cfg.attention, cfg.ln_eps);
  return x;
}

}  // namespace dctattn
