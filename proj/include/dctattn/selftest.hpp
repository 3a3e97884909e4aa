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

// Runtime invariant suite behind `dctattn selftest`.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "dctattn/attention.hpp"
#include "dctattn/bench.hpp"
#include "dctattn/dct.hpp"
#include "dctattn/numerics.hpp"

namespace dctattn {

struct PropertyCheck {
  std::string name;
  std::function<bool(std::uint64_t seed)> holds;
};

inline std::vector<PropertyCheck> selftest_properties() {
  std::vector<PropertyCheck> checks;

  checks.push_back({"softmax rows sum to one", [](std::uint64_t seed) {
                      Rng rng(seed);
                      const Matrix p = softmax_rows(rand_uniform(rng, 16, 33, -1e3, 1e3));
                      for (std::size_t i = 0; i < p.rows(); ++i) {
                        double s = 0;
                        for (double v : p.row(i)) s += v;
                        if (std::abs(s - 1.0) > 1e-12) return false;
                      }
                      return true;
                    }});

  checks.push_back({"dct orthonormality", [](std::uint64_t) {
                      for (std::size_t n : {1, 2, 3, 4, 7, 8, 16, 64, 128, 256, 512}) {
                        const Matrix d = dct_matrix(n, n);
                        if (max_abs_diff(matmul_nt(d, d), Matrix::identity(n)) >= 1e-10)
                          return false;
                      }
                      return true;
                    }});

  checks.push_back({"fft path matches matrix path", [](std::uint64_t seed) {
                      Rng rng(seed);
                      for (std::size_t n = 1; n <= 1024; n *= 2) {
                        const Matrix x = rand_uniform(rng, n, 3, -1, 1);
                        const DctPlan fast(n, n, true);
                        const DctPlan slow(n, n, false);
                        if (max_abs_diff(dct_forward(fast, x), dct_forward(slow, x)) >= 1e-9)
                          return false;
                      }
                      return true;
                    }});

  checks.push_back({"projection idempotence", [](std::uint64_t seed) {
                      Rng rng(seed);
                      const Matrix x = rand_uniform(rng, 24, 3, -1, 1);
                      const DctPlan plan(24, 7);
                      const Matrix once = dct_inverse(plan, dct_forward(plan, x));
                      const Matrix twice = dct_inverse(plan, dct_forward(plan, once));
                      return max_abs_diff(once, twice) < 1e-9;
                    }});

  checks.push_back({"efficient equals naive", [](std::uint64_t seed) {
                      Rng rng(seed);
                      const AttentionParams p = init_attention_params(rng, 8, 4);
                      const Matrix x = rand_uniform(rng, 16, 8, -1, 1);
                      for (std::size_t nb : {1, 4, 8, 16}) {
                        const DctPlan plan(16, nb);
                        if (max_abs_diff(efficient_dct_attention(x, p, plan),
                                         naive_dct_attention(x, p, plan)) >= 1e-9)
                          return false;
                      }
                      return true;
                    }});

  checks.push_back({"ideal equals vanilla at full rank", [](std::uint64_t seed) {
                      Rng rng(seed);
                      const AttentionParams p = init_attention_params(rng, 8, 4);
                      const Matrix x = rand_uniform(rng, 16, 8, -1, 1);
                      const DctPlan plan(16, 16);
                      const Qkv qkv = project_qkv(x, p);
                      return max_abs_diff(ideal_dct_attention(x, p, plan),
                                          vanilla_attention(qkv.q, qkv.k, qkv.v)) < 1e-9;
                    }});

  checks.push_back({"vjp matches finite differences", [](std::uint64_t seed) {
                      Rng rng(seed);
                      const Matrix q = rand_uniform(rng, 8, 4, -1, 1);
                      const Matrix k = rand_uniform(rng, 8, 4, -1, 1);
                      const Matrix v = rand_uniform(rng, 8, 4, -1, 1);
                      const Matrix g = rand_uniform(rng, 8, 4, -1, 1);
                      const QkvGrad grad = vanilla_attention_vjp(q, k, v, g);
                      auto loss = [&](const Matrix& qq, const Matrix& kk, const Matrix& vv) {
                        const Matrix o = vanilla_attention(qq, kk, vv);
                        double s = 0;
                        for (std::size_t i = 0; i < o.size(); ++i) s += o.data()[i] * g.data()[i];
                        return s;
                      };
                      const double h = 1e-5;
                      for (int which = 0; which < 3; ++which) {
                        const Matrix& an = which == 0 ? grad.dq : which == 1 ? grad.dk : grad.dv;
                        for (std::size_t i = 0; i < q.size(); ++i) {
                          Matrix qp = q, kp = k, vp = v, qm = q, km = k, vm = v;
                          Matrix& plus = which == 0 ? qp : which == 1 ? kp : vp;
                          Matrix& minus = which == 0 ? qm : which == 1 ? km : vm;
                          plus.data()[i] += h;
                          minus.data()[i] -= h;
                          const double fd = (loss(qp, kp, vp) - loss(qm, km, vm)) / (2 * h);
                          const double a = an.data()[i];
                          const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
                          if (std::abs(a - fd) / denom >= 1e-5) return false;
                        }
                      }
                      return true;
                    }});

  checks.push_back({"efficient peak below vanilla peak", [](std::uint64_t seed) {
                      bench::ScalingConfig cfg;
                      cfg.lengths = {512};
                      cfg.d = 64;
                      cfg.heads = 8;
                      cfg.reps = 3;
                      cfg.seed = seed;
                      cfg.memory_only = true;
                      cfg.kinds = {bench::KindSpec::parse("vanilla", 0.25),
                                   bench::KindSpec::parse("dct", 0.25)};
                      const auto res = bench::run_scaling_bench(cfg);
                      return res.records.size() == 2 &&
                             res.records[1].peak_floats < res.records[0].peak_floats;
                    }});

  return checks;
}

/// Runs every property; reports the first failure by name. Returns true when
/// all hold.
inline bool run_selftest(std::uint64_t seed, std::ostream& log) {
  bool ok = true;
  for (const auto& check : selftest_properties()) {
    bool holds = false;
    std::string error;
    try {
      holds = check.holds(seed);
    } catch (const std::exception& e) {
      error = e.what();
    }
    log << (holds ? "ok     " : "FAILED ") << check.name;
    if (!error.empty()) log << " (" << error << ")";
    log << '\n';
    ok = ok && holds;
  }
  return ok;
}

}  // namespace dctattn
