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

// Dense row-major matrices, a handful of kernels on them, a SplitMix64
// generator, and a process-wide counter of live matrix elements.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dctattn {

/// Counts float elements held by live Matrix objects.
///
/// Every Matrix construction adds rows*cols to `live`, every destruction
/// subtracts it. `peak` is the high-water mark since the last reset and
/// `largest` the biggest single allocation seen since the last reset.
/// Peaks are only exact when a single thread is allocating.
class AllocationCounter {
 public:
  struct Snapshot {
    std::int64_t live;
    std::int64_t peak;
    std::int64_t largest;
  };

  static AllocationCounter& global() {
    static AllocationCounter counter;
    return counter;
  }

  void on_alloc(std::int64_t n) {
    if (n == 0) return;
    const std::int64_t now = live_.fetch_add(n, std::memory_order_relaxed) + n;
    raise(peak_, now);
    raise(largest_, n);
  }

  void on_free(std::int64_t n) {
    if (n == 0) return;
    live_.fetch_sub(n, std::memory_order_relaxed);
  }

  /// Sets peak = live and forgets the largest allocation.
  void reset() {
    peak_.store(live_.load(std::memory_order_relaxed), std::memory_order_relaxed);
    largest_.store(0, std::memory_order_relaxed);
  }

  std::int64_t live() const { return live_.load(std::memory_order_relaxed); }
  std::int64_t peak() const { return peak_.load(std::memory_order_relaxed); }
  std::int64_t largest() const { return largest_.load(std::memory_order_relaxed); }
  Snapshot snapshot() const { return {live(), peak(), largest()}; }

 private:
  static void raise(std::atomic<std::int64_t>& slot, std::int64_t value) {
    std::int64_t prev = slot.load(std::memory_order_relaxed);
    while (prev < value &&
           !slot.compare_exchange_weak(prev, value, std::memory_order_relaxed)) {
    }
  }

  std::atomic<std::int64_t> live_{0};
  std::atomic<std::int64_t> peak_{0};
  std::atomic<std::int64_t> largest_{0};
};

/// Scoped measurement: resets the counter on entry and reports the peak
/// relative to the live count at that moment.
class PeakScope {
 public:
  PeakScope() : baseline_(AllocationCounter::global().live()) {
    AllocationCounter::global().reset();
  }
  std::int64_t peak_above_baseline() const {
    return AllocationCounter::global().peak() - baseline_;
  }
  std::int64_t largest_allocation() const { return AllocationCounter::global().largest(); }
  std::int64_t baseline() const { return baseline_; }

 private:
  std::int64_t baseline_;
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    track();
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                  " does not match shape " + std::to_string(rows_) + "x" +
                                  std::to_string(cols_));
    }
    track();
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    track();
  }

  Matrix(const Matrix& other) : rows_(other.rows_), cols_(other.cols_), data_(other.data_) {
    track();
  }

  Matrix(Matrix&& other) noexcept
      : rows_(std::exchange(other.rows_, 0)),
        cols_(std::exchange(other.cols_, 0)),
        data_(std::move(other.data_)) {
    other.data_.clear();
  }

  Matrix& operator=(const Matrix& other) {
    if (this != &other) {
      Matrix tmp(other);
      swap(tmp);
    }
    return *this;
  }

  Matrix& operator=(Matrix&& other) noexcept {
    if (this != &other) {
      untrack();
      rows_ = std::exchange(other.rows_, 0);
      cols_ = std::exchange(other.cols_, 0);
      data_ = std::move(other.data_);
      other.data_.clear();
    }
    return *this;
  }

  ~Matrix() { untrack(); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  void swap(Matrix& other) noexcept {
    std::swap(rows_, other.rows_);
    std::swap(cols_, other.cols_);
    data_.swap(other.data_);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void track() const {
    AllocationCounter::global().on_alloc(static_cast<std::int64_t>(data_.size()));
  }
  void untrack() const {
    AllocationCounter::global().on_free(static_cast<std::int64_t>(data_.size()));
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

/// out += a * b[b_row0 : b_row0 + a.cols, :]. The row offset lets callers
/// multiply against a row block of b without copying it.
inline void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& out,
                              std::size_t b_row0 = 0) {
  detail::require(b_row0 + a.cols() <= b.rows(),
                  "matmul: shapes " + a.shape() + " and " + b.shape() + " do not conform");
  detail::require(out.rows() == a.rows() && out.cols() == b.cols(),
                  "matmul: output shape " + out.shape() + " does not match " + a.shape() +
                      " * " + b.shape());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* dst = out.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double s = arow[k];
      if (s == 0.0) continue;
      const double* brow = b.row(b_row0 + k).data();
      for (std::size_t j = 0; j < cols; ++j) dst[j] += s * brow[j];
    }
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.rows(),
                  "matmul: shapes " + a.shape() + " and " + b.shape() + " do not conform");
  Matrix out(a.rows(), b.cols());
  matmul_accumulate(a, b, out);
  return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols(), "matmul_nt: shapes " + a.shape() + " and " +
                                            b.shape() + "^T do not conform");
  Matrix out(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    double* dst = out.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      dst[j] = acc;
    }
  }
  return out;
}

/// out += a^T * b without materializing the transpose.
inline void matmul_tn_accumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  detail::require(a.rows() == b.rows(), "matmul_tn: shapes " + a.shape() + "^T and " +
                                            b.shape() + " do not conform");
  detail::require(out.rows() == a.cols() && out.cols() == b.cols(),
                  "matmul_tn: output shape " + out.shape() + " does not match");
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* arow = a.row(k).data();
    const double* brow = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = arow[i];
      if (s == 0.0) continue;
      double* dst = out.row(i).data();
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += s * brow[j];
    }
  }
}

inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows(), "matmul_tn: shapes " + a.shape() + "^T and " +
                                            b.shape() + " do not conform");
  Matrix out(a.cols(), b.cols());
  matmul_tn_accumulate(a, b, out);
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double v) { return std::isfinite(v); });
}

/// Row-wise softmax, in place. Subtracts the row max before exponentiating.
inline void softmax_rows_inplace(Matrix& a) {
  detail::require(all_finite(a), "softmax_rows: non-finite input");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    if (r.empty()) continue;
    const double mx = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      sum += v;
    }
    const double inv = 1.0 / sum;
    for (double& v : r) v *= inv;
  }
}

inline Matrix softmax_rows(const Matrix& a) {
  Matrix out(a);
  softmax_rows_inplace(out);
  return out;
}

inline Matrix layer_norm(const Matrix& a, std::span<const double> gamma,
                         std::span<const double> beta, double eps) {
  detail::require(gamma.size() == a.cols() && beta.size() == a.cols(),
                  "layer_norm: gamma/beta length must equal " + std::to_string(a.cols()));
  detail::require(eps > 0.0, "layer_norm: eps must be positive");
  Matrix out(a.rows(), a.cols());
  const double cols = static_cast<double>(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= cols;
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= cols;
    const double inv = 1.0 / std::sqrt(var + eps);
    auto o = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) o[j] = (r[j] - mean) * inv * gamma[j] + beta[j];
  }
  return out;
}

/// x * Phi(x) with the exact Gaussian CDF.
inline double gelu(double x) { return 0.5 * x * std::erfc(-x / std::sqrt(2.0)); }

inline Matrix gelu(const Matrix& a) {
  Matrix out(a);
  for (double& v : out.data()) v = gelu(v);
  return out;
}

inline void add_inplace(Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "add: shapes " + a.shape() + " and " + b.shape() + " differ");
  auto dst = a.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline void scale_inplace(Matrix& a, double s) {
  for (double& v : a.data()) v *= s;
}

/// Adds `bias` to every row.
inline void add_row_bias(Matrix& a, std::span<const double> bias) {
  detail::require(bias.size() == a.cols(), "add_row_bias: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "subtract: shapes " + a.shape() + " and " + b.shape() + " differ");
  Matrix out(a);
  auto dst = out.data();
  auto src = b.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

inline double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return std::sqrt(acc);
}

/// ||a - b||_F without allocating the difference.
inline double frobenius_distance(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "frobenius_distance: shapes " + a.shape() + " and " + b.shape() + " differ");
  double acc = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(acc);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "max_abs_diff: shapes " + a.shape() + " and " + b.shape() + " differ");
  double m = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

/// SplitMix64. Same seed, same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on [0, 1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

inline Matrix rand_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  detail::require(lo < hi, "rand_uniform: lo must be below hi");
  Matrix out(rows, cols);
  for (double& v : out.data()) {
    v = rng.uniform(lo, hi);
    // lo + (hi-lo)*u can round up to hi for u just below 1.
    if (v >= hi) v = std::nextafter(hi, lo);
  }
  return out;
}

}  // namespace dctattn
