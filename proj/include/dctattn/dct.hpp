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

// Orthonormal DCT-II along the sequence axis: the truncated transform
// matrix, 1-D and 2-D forward/inverse application, and an FFT fast path
// for power-of-two lengths (Makhoul's reordering trick).

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dctattn/numerics.hpp"

namespace dctattn {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// max(1, round(scale * n)), capped at n.
inline std::size_t n_bar_from_scale(std::size_t n, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw std::invalid_argument("n_bar_from_scale: scale must lie in (0, 1]");
  }
  const auto k = static_cast<std::size_t>(std::llround(scale * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

/// Rows 0..n_bar-1 of the n-point orthonormal DCT-II matrix. Row index is
/// frequency, column index is sample position.
inline Matrix dct_matrix(std::size_t n, std::size_t n_bar) {
  if (n_bar < 1 || n_bar > n) {
    throw std::invalid_argument("dct_matrix: need 1 <= n_bar <= n, got n=" + std::to_string(n) +
                                " n_bar=" + std::to_string(n_bar));
  }
  Matrix d(n_bar, n);
  const double nn = static_cast<double>(n);
  const double a0 = std::sqrt(1.0 / nn);
  const double ak = std::sqrt(2.0 / nn);
  for (std::size_t k = 0; k < n_bar; ++k) {
    const double alpha = k == 0 ? a0 : ak;
    for (std::size_t m = 0; m < n; ++m) {
      // Reduce the angle index mod 4n so large n keep full precision.
      const std::size_t idx = ((2 * m + 1) * k) % (4 * n);
      d(k, m) = alpha * std::cos(std::numbers::pi * static_cast<double>(idx) / (2.0 * nn));
    }
  }
  return d;
}

namespace detail {

/// Radix-2 complex FFT with precomputed roots and bit-reversal table.
class Fft {
 public:
  explicit Fft(std::size_t n) : n_(n), roots_(n / 2), rev_(n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("Fft: length must be a power of two");
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      roots_[k] = {std::cos(ang), std::sin(ang)};
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = r;
    }
  }

  std::size_t size() const { return n_; }

  /// Unnormalized transform; `inverse` flips the root sign and divides by n.
  void transform(std::span<std::complex<double>> a, bool inverse) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t step = n_ / len;
      for (std::size_t i = 0; i < n_; i += len) {
        for (std::size_t j = 0; j < half; ++j) {
          std::complex<double> w = roots_[j * step];
          if (inverse) w = std::conj(w);
          const auto u = a[i + j];
          const auto v = a[i + j + half] * w;
          a[i + j] = u + v;
          a[i + j + half] = u - v;
        }
      }
    }
    if (inverse) {
      const double inv = 1.0 / static_cast<double>(n_);
      for (auto& v : a) v *= inv;
    }
  }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> roots_;
  std::vector<std::size_t> rev_;
};

}  // namespace detail

/// Orthonormal N-point DCT-II and its inverse through one N-point complex FFT.
///
/// The even samples go forward and the odd samples backward into v, so that
/// sum_m x_m cos(pi (2m+1) k / 2N) = Re(exp(-i pi k / 2N) FFT(v)_k).
class MakhoulDct {
 public:
  explicit MakhoulDct(std::size_t n) : fft_(n), twiddle_(n), alpha_(n) {
    const double nn = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double ang = -std::numbers::pi * static_cast<double>(k) / (2.0 * nn);
      twiddle_[k] = {std::cos(ang), std::sin(ang)};
      alpha_[k] = std::sqrt((k == 0 ? 1.0 : 2.0) / nn);
    }
  }

  std::size_t size() const { return fft_.size(); }

  /// Writes the first out.size() coefficients of DCT(x).
  void forward(std::span<const double> x, std::span<double> out,
               std::vector<std::complex<double>>& scratch) const {
    const std::size_t n = size();
    scratch.assign(n, {0.0, 0.0});
    for (std::size_t m = 0; m < n / 2; ++m) {
      scratch[m] = x[2 * m];
      scratch[n - 1 - m] = x[2 * m + 1];
    }
    if (n == 1) scratch[0] = x[0];
    fft_.transform(scratch, false);
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = alpha_[k] * (twiddle_[k] * scratch[k]).real();
  }

  /// Inverse from the leading coeffs.size() coefficients; the rest are zero.
  void inverse(std::span<const double> coeffs, std::span<double> out,
               std::vector<std::complex<double>>& scratch) const {
    const std::size_t n = size();
    const std::size_t kept = coeffs.size();
    auto c = [&](std::size_t k) { return k < kept ? coeffs[k] / alpha_[k] : 0.0; };
    scratch.assign(n, {0.0, 0.0});
    // twiddle_k * V_k = C_k - i C_{n-k}, with C_n = 0.
    for (std::size_t k = 0; k < n; ++k) {
      const double ck = c(k);
      const double cnk = k == 0 ? 0.0 : c(n - k);
      scratch[k] = std::conj(twiddle_[k]) * std::complex<double>(ck, -cnk);
    }
    fft_.transform(scratch, true);
    for (std::size_t m = 0; m < n / 2; ++m) {
      out[2 * m] = scratch[m].real();
      out[2 * m + 1] = scratch[n - 1 - m].real();
    }
    if (n == 1) out[0] = scratch[0].real();
  }

 private:
  detail::Fft fft_;
  std::vector<std::complex<double>> twiddle_;
  std::vector<double> alpha_;
};

inline std::vector<double> makhoul_dct(std::span<const double> x) {
  if (!is_power_of_two(x.size())) {
    throw std::invalid_argument("makhoul_dct: length " + std::to_string(x.size()) +
                                " is not a power of two; use the matrix path (dct_matrix)");
  }
  MakhoulDct t(x.size());
  std::vector<double> out(x.size());
  std::vector<std::complex<double>> scratch;
  t.forward(x, out, scratch);
  return out;
}

inline std::vector<double> makhoul_idct(std::span<const double> coeffs) {
  if (!is_power_of_two(coeffs.size())) {
    throw std::invalid_argument("makhoul_idct: length " + std::to_string(coeffs.size()) +
                                " is not a power of two; use the matrix path (dct_matrix)");
  }
  MakhoulDct t(coeffs.size());
  std::vector<double> out(coeffs.size());
  std::vector<std::complex<double>> scratch;
  t.inverse(coeffs, out, scratch);
  return out;
}

/// Truncated DCT-II for a fixed (n, n_bar). Immutable once built.
class DctPlan {
 public:
  DctPlan(std::size_t n, std::size_t n_bar, bool enable_fast_path = true)
      : n_(n), n_bar_(n_bar), d_bar_(dct_matrix(n, n_bar)) {
    if (enable_fast_path && is_power_of_two(n)) fft_ = std::make_unique<MakhoulDct>(n);
  }

  std::size_t n() const { return n_; }
  std::size_t n_bar() const { return n_bar_; }
  const Matrix& d_bar() const { return d_bar_; }
  bool fast_path() const { return fft_ != nullptr; }
  const MakhoulDct* fft() const { return fft_.get(); }

 private:
  std::size_t n_;
  std::size_t n_bar_;
  Matrix d_bar_;
  std::unique_ptr<MakhoulDct> fft_;
};

/// d_bar * x along the rows of x (n x d -> n_bar x d).
inline Matrix dct_forward(const DctPlan& plan, const Matrix& x) {
  if (x.rows() != plan.n()) {
    throw std::invalid_argument("dct_forward: input has " + std::to_string(x.rows()) +
                                " rows, plan expects " + std::to_string(plan.n()));
  }
  if (!plan.fast_path()) return matmul(plan.d_bar(), x);
  Matrix out(plan.n_bar(), x.cols());
  std::vector<double> column(plan.n());
  std::vector<double> coeffs(plan.n_bar());
  std::vector<std::complex<double>> scratch;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < plan.n(); ++i) column[i] = x(i, j);
    plan.fft()->forward(column, coeffs, scratch);
    for (std::size_t k = 0; k < plan.n_bar(); ++k) out(k, j) = coeffs[k];
  }
  return out;
}

/// out = d_bar^T * x_bar, written into a caller-owned n x d buffer.
inline void dct_inverse_into(const DctPlan& plan, const Matrix& x_bar, Matrix& out) {
  if (x_bar.rows() != plan.n_bar()) {
    throw std::invalid_argument("dct_inverse: input has " + std::to_string(x_bar.rows()) +
                                " rows, plan expects " + std::to_string(plan.n_bar()));
  }
  if (out.rows() != plan.n() || out.cols() != x_bar.cols()) {
    throw std::invalid_argument("dct_inverse: output buffer is " + out.shape());
  }
  if (!plan.fast_path()) {
    std::fill(out.data().begin(), out.data().end(), 0.0);
    matmul_tn_accumulate(plan.d_bar(), x_bar, out);
    return;
  }
  std::vector<double> coeffs(plan.n_bar());
  std::vector<double> column(plan.n());
  std::vector<std::complex<double>> scratch;
  for (std::size_t j = 0; j < x_bar.cols(); ++j) {
    for (std::size_t k = 0; k < plan.n_bar(); ++k) coeffs[k] = x_bar(k, j);
    plan.fft()->inverse(coeffs, column, scratch);
    for (std::size_t i = 0; i < plan.n(); ++i) out(i, j) = column[i];
  }
}

inline Matrix dct_inverse(const DctPlan& plan, const Matrix& x_bar) {
  if (x_bar.rows() != plan.n_bar()) {
    throw std::invalid_argument("dct_inverse: input has " + std::to_string(x_bar.rows()) +
                                " rows, plan expects " + std::to_string(plan.n_bar()));
  }
  Matrix out(plan.n(), x_bar.cols());
  dct_inverse_into(plan, x_bar, out);
  return out;
}

/// d_bar * e * d_bar^T.
inline Matrix dct2_forward(const DctPlan& plan, const Matrix& e) {
  if (e.rows() != plan.n() || e.cols() != plan.n()) {
    throw std::invalid_argument("dct2_forward: expected " + std::to_string(plan.n()) + "x" +
                                std::to_string(plan.n()) + ", got " + e.shape());
  }
  const Matrix cols = dct_forward(plan, e);         // n_bar x n
  const Matrix rows = dct_forward(plan, transpose(cols));  // n_bar x n_bar, transposed
  return transpose(rows);
}

/// d_bar^T * e_bar * d_bar.
inline Matrix dct2_inverse(const DctPlan& plan, const Matrix& e_bar) {
  if (e_bar.rows() != plan.n_bar() || e_bar.cols() != plan.n_bar()) {
    throw std::invalid_argument("dct2_inverse: expected " + std::to_string(plan.n_bar()) + "x" +
                                std::to_string(plan.n_bar()) + ", got " + e_bar.shape());
  }
  const Matrix cols = dct_inverse(plan, e_bar);             // n x n_bar
  const Matrix rows = dct_inverse(plan, transpose(cols));   // n x n, transposed
  return transpose(rows);
}

/// Shared plans keyed by (n, n_bar). Readers take a shared lock.
class PlanCache {
 public:
  static PlanCache& global() {
    static PlanCache cache;
    return cache;
  }

  std::shared_ptr<const DctPlan> get(std::size_t n, std::size_t n_bar) {
    const auto key = std::make_pair(n, n_bar);
    {
      std::shared_lock lock(mu_);
      if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    }
    auto plan = std::make_shared<const DctPlan>(n, n_bar);
    std::unique_lock lock(mu_);
    auto [it, inserted] = plans_.emplace(key, std::move(plan));
    return it->second;
  }

  void clear() {
    std::unique_lock lock(mu_);
    plans_.clear();
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return plans_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const DctPlan>> plans_;
};

}  // namespace dctattn
