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

// Measurement harnesses: sequence-length scaling of the multi-head
// attention module (median time, peak live floats) and the error profile
// separating truncation error from the softmax-in-compressed-domain error.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <new>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "dctattn/attention.hpp"
#include "dctattn/dct.hpp"
#include "dctattn/numerics.hpp"

namespace dctattn::bench {

/// An attention kind whose n_bar is derived from the sequence length.
struct KindSpec {
  AttentionTag tag = AttentionTag::Vanilla;
  double scale = 1.0;

  /// "Vanilla", or "{DCT,IDEAL,NAIVE}-<scale>".
  std::string label() const {
    if (tag == AttentionTag::Vanilla) return "Vanilla";
    const char* prefix = tag == AttentionTag::DctEfficient ? "DCT"
                         : tag == AttentionTag::DctIdeal   ? "IDEAL"
                                                           : "NAIVE";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s-%g", prefix, scale);
    return buf;
  }

  AttentionKind at(std::size_t n) const {
    if (tag == AttentionTag::Vanilla) return AttentionKind::vanilla();
    return {tag, n_bar_from_scale(n, scale)};
  }

  /// Accepts vanilla | dct | ideal | naive (case-insensitive).
  static KindSpec parse(std::string name, double scale) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name == "vanilla") return {AttentionTag::Vanilla, 1.0};
    if (name == "dct" || name == "efficient") return {AttentionTag::DctEfficient, scale};
    if (name == "ideal") return {AttentionTag::DctIdeal, scale};
    if (name == "naive") return {AttentionTag::DctNaive, scale};
    throw std::invalid_argument("unknown attention kind '" + name +
                                "' (expected vanilla, dct, ideal or naive)");
  }
};

struct BenchRecord {
  std::string kind;
  std::size_t n = 0;
  std::size_t batch = 1;
  std::optional<std::size_t> n_bar;  // empty for Vanilla
  std::size_t reps = 0;
  double time_ms_median = 0.0;  // per batch element
  std::int64_t peak_floats = 0;  // per batch element
};

struct SkippedRun {
  std::string kind;
  std::size_t n = 0;
  std::string reason;
};

struct ScalingConfig {
  std::vector<std::size_t> lengths;
  double scale = 0.25;
  std::vector<KindSpec> kinds;
  std::size_t batch = 1;
  std::size_t reps = 10;
  std::size_t warmups = 3;
  std::uint64_t seed = 0;
  std::size_t d = 512;
  std::size_t heads = 8;
  /// Skip timing; record peak_floats only (time_ms_median stays 0).
  bool memory_only = false;
};

struct ScalingResult {
  std::vector<BenchRecord> records;
  std::vector<SkippedRun> skipped;
};

/// Closed-form peak live floats of one multi-head forward, above the input,
/// weights and output buffer, for the allocation plan of multi_head_into.
/// DCT kinds include the n_bar x n transform held by a freshly built plan.
inline std::int64_t model_peak_floats(AttentionTag tag, std::size_t n, std::size_t d,
                                      std::size_t heads, std::size_t n_bar) {
  const auto N = static_cast<std::int64_t>(n);
  const auto D = static_cast<std::int64_t>(d);
  const auto H = static_cast<std::int64_t>(d / heads);
  const auto M = static_cast<std::int64_t>(n_bar);
  switch (tag) {
    case AttentionTag::Vanilla:
      return N * N + 4 * N * H;
    case AttentionTag::DctEfficient:
      return M * N + M * M + 4 * M * H + 2 * M * D;
    case AttentionTag::DctNaive:
      return M * N + 3 * N * H + 4 * M * H + M * M;
    case AttentionTag::DctIdeal:
      break;
  }
  throw std::invalid_argument("model_peak_floats: no closed form for the ideal path");
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Time and peak memory of the multi-head attention module for every
/// (kind, n). Single-threaded. Allocation failures skip the configuration.
inline ScalingResult run_scaling_bench(const ScalingConfig& cfg) {
  if (cfg.reps < 3) throw std::invalid_argument("run_scaling_bench: reps must be at least 3");
  if (cfg.batch < 1) throw std::invalid_argument("run_scaling_bench: batch must be at least 1");
  if (cfg.lengths.empty()) throw std::invalid_argument("run_scaling_bench: no lengths");
  for (std::size_t n : cfg.lengths)
    if (n < 1) throw std::invalid_argument("run_scaling_bench: lengths must be at least 1");

  using Clock = std::chrono::steady_clock;
  ScalingResult result;
  for (const KindSpec& ks : cfg.kinds) {
    for (std::size_t n : cfg.lengths) {
      const AttentionKind kind = ks.at(n);
      try {
        Rng rng(cfg.seed);
        const MultiHeadParams params = init_multi_head_params(rng, cfg.d, cfg.heads);
        std::vector<Matrix> inputs;
        inputs.reserve(cfg.batch);
        for (std::size_t b = 0; b < cfg.batch; ++b)
          inputs.push_back(rand_uniform(rng, n, cfg.d, -1.0, 1.0));
        Matrix out(n, cfg.d);

        BenchRecord rec;
        rec.kind = ks.label();
        rec.n = n;
        rec.batch = cfg.batch;
        if (kind.uses_dct()) rec.n_bar = kind.n_bar;
        rec.reps = cfg.reps;

        {
          // Elements run back to back and release everything, so the peak
          // over the loop is already the per-element peak.
          PeakScope scope;
          std::optional<DctPlan> plan;
          if (kind.uses_dct()) plan.emplace(n, kind.n_bar);
          for (const Matrix& x : inputs)
            multi_head_into(x, params, kind, plan ? &*plan : nullptr, out);
          rec.peak_floats = scope.peak_above_baseline();
        }

        if (!cfg.memory_only) {
          std::shared_ptr<const DctPlan> plan;
          if (kind.uses_dct()) plan = PlanCache::global().get(n, kind.n_bar);
          auto pass = [&] {
            for (const Matrix& x : inputs) multi_head_into(x, params, kind, plan.get(), out);
          };
          for (std::size_t w = 0; w < cfg.warmups; ++w) pass();
          std::vector<double> times;
          times.reserve(cfg.reps);
          for (std::size_t r = 0; r < cfg.reps; ++r) {
            const auto t0 = Clock::now();
            pass();
            const auto t1 = Clock::now();
            const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            times.push_back(ms / static_cast<double>(cfg.batch));
          }
          // Guard against a clock too coarse to resolve tiny runs.
          rec.time_ms_median = std::max(detail::median(times), 1e-6);
        }
        result.records.push_back(std::move(rec));
      } catch (const std::bad_alloc&) {
        result.skipped.push_back({ks.label(), n, "out of memory"});
      }
    }
  }
  return result;
}

struct ErrorRecord {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t n_bar = 0;
  std::uint64_t seed = 0;
  double frob_E = 0.0;             // ||E_tilde - E||_F over all heads
  double out_err_ideal = 0.0;      // ||ideal - vanilla||_F
  double out_err_efficient = 0.0;  // ||efficient - vanilla||_F
  double relax_gap = 0.0;          // ||efficient - ideal||_F
};

/// For every (n_bar, seed): random X and multi-head params from the seed,
/// then vanilla, efficient and ideal outputs and the energy-level error.
inline std::vector<ErrorRecord> run_error_profile(std::size_t n, std::size_t d, std::size_t heads,
                                                  const std::vector<std::size_t>& n_bars,
                                                  const std::vector<std::uint64_t>& seeds) {
  for (std::size_t nb : n_bars) {
    if (nb < 1 || nb > n) {
      throw std::invalid_argument("run_error_profile: n_bar=" + std::to_string(nb) +
                                  " outside [1, " + std::to_string(n) + "]");
    }
  }
  std::vector<ErrorRecord> out;
  for (std::uint64_t seed : seeds) {
    Rng rng(seed);
    const MultiHeadParams params = init_multi_head_params(rng, d, heads);
    const Matrix x = rand_uniform(rng, n, d, -1.0, 1.0);
    const Matrix vanilla = multi_head(x, params, AttentionKind::vanilla());
    std::vector<Matrix> energies;
    for (const auto& head : params.heads) {
      const Qkv qkv = project_qkv(x, head);
      energies.push_back(attention_weights(qkv.q, qkv.k));
    }
    for (std::size_t nb : n_bars) {
      const auto plan = PlanCache::global().get(n, nb);
      const Matrix efficient = multi_head(x, params, AttentionKind::efficient(nb), plan.get());
      const Matrix ideal = multi_head(x, params, AttentionKind::ideal(nb), plan.get());
      double e_sq = 0.0;
      for (const Matrix& e : energies) {
        const double dist = frobenius_distance(lowpass_energy(e, *plan), e);
        e_sq += dist * dist;
      }
      ErrorRecord rec;
      rec.n = n;
      rec.d = d;
      rec.n_bar = nb;
      rec.seed = seed;
      rec.frob_E = std::sqrt(e_sq);
      rec.out_err_ideal = frobenius_distance(ideal, vanilla);
      rec.out_err_efficient = frobenius_distance(efficient, vanilla);
      rec.relax_gap = frobenius_distance(efficient, ideal);
      out.push_back(rec);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ErrorRecord& a, const ErrorRecord& b) {
    return std::tie(a.n, a.n_bar, a.seed) < std::tie(b.n, b.n_bar, b.seed);
  });
  return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kScalingHeader = "kind,n,batch,n_bar,reps,time_ms_median,peak_floats";
inline constexpr const char* kErrorHeader =
    "n,d,n_bar,seed,frob_E,out_err_ideal,out_err_efficient,relax_gap";

inline std::string format_float(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string to_csv(std::vector<BenchRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const BenchRecord& a, const BenchRecord& b) {
    return std::tie(a.kind, a.n, a.n_bar) < std::tie(b.kind, b.n, b.n_bar);
  });
  std::ostringstream os;
  os << kScalingHeader << '\n';
  for (const auto& r : records) {
    os << r.kind << ',' << r.n << ',' << r.batch << ',';
    if (r.n_bar) os << *r.n_bar;
    os << ',' << r.reps << ',' << format_float(r.time_ms_median) << ',' << r.peak_floats << '\n';
  }
  return os.str();
}

inline std::string to_csv(std::vector<ErrorRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const ErrorRecord& a, const ErrorRecord& b) {
    return std::tie(a.n, a.n_bar, a.seed) < std::tie(b.n, b.n_bar, b.seed);
  });
  std::ostringstream os;
  os << kErrorHeader << '\n';
  for (const auto& r : records) {
    os << r.n << ',' << r.d << ',' << r.n_bar << ',' << r.seed << ',' << format_float(r.frob_E)
       << ',' << format_float(r.out_err_ideal) << ',' << format_float(r.out_err_efficient) << ','
       << format_float(r.relax_gap) << '\n';
  }
  return os.str();
}

namespace detail {

inline void write_file(const std::string& text, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

inline std::vector<std::vector<std::string>> parse_rows(std::istream& in, const char* header,
                                                        std::size_t fields) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error("CSV header mismatch: expected '" + std::string(header) + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != fields) throw std::runtime_error("CSV row has wrong field count: " + line);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace detail

inline void write_csv(const std::vector<BenchRecord>& records, const std::string& path) {
  detail::write_file(to_csv(records), path);
}

inline void write_csv(const std::vector<ErrorRecord>& records, const std::string& path) {
  detail::write_file(to_csv(records), path);
}

inline std::vector<BenchRecord> parse_scaling_csv(std::istream& in) {
  std::vector<BenchRecord> out;
  for (const auto& c : detail::parse_rows(in, kScalingHeader, 7)) {
    BenchRecord r;
    r.kind = c[0];
    r.n = std::stoull(c[1]);
    r.batch = std::stoull(c[2]);
    if (!c[3].empty()) r.n_bar = std::stoull(c[3]);
    r.reps = std::stoull(c[4]);
    r.time_ms_median = std::stod(c[5]);
    r.peak_floats = std::stoll(c[6]);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<ErrorRecord> parse_error_csv(std::istream& in) {
  std::vector<ErrorRecord> out;
  for (const auto& c : detail::parse_rows(in, kErrorHeader, 8)) {
    ErrorRecord r;
    r.n = std::stoull(c[0]);
    r.d = std::stoull(c[1]);
    r.n_bar = std::stoull(c[2]);
    r.seed = std::stoull(c[3]);
    r.frob_E = std::stod(c[4]);
    r.out_err_ideal = std::stod(c[5]);
    r.out_err_efficient = std::stod(c[6]);
    r.relax_gap = std::stod(c[7]);
    out.push_back(r);
  }
  return out;
}

inline void print_table(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << std::left << std::setw(12) << "kind" << std::right << std::setw(8) << "n" << std::setw(8)
     << "n_bar" << std::setw(7) << "batch" << std::setw(6) << "reps" << std::setw(14)
     << "time_ms" << std::setw(14) << "peak_floats" << '\n';
  for (const auto& r : records) {
    os << std::left << std::setw(12) << r.kind << std::right << std::setw(8) << r.n << std::setw(8)
       << (r.n_bar ? std::to_string(*r.n_bar) : std::string("-")) << std::setw(7) << r.batch
       << std::setw(6) << r.reps << std::setw(14) << format_float(r.time_ms_median)
       << std::setw(14) << r.peak_floats << '\n';
  }
}

inline void print_table(std::ostream& os, const std::vector<ErrorRecord>& records) {
  os << std::right << std::setw(6) << "n" << std::setw(6) << "d" << std::setw(7) << "n_bar"
     << std::setw(6) << "seed" << std::setw(14) << "frob_E" << std::setw(14) << "err_ideal"
     << std::setw(14) << "err_effic" << std::setw(14) << "relax_gap" << '\n';
  for (const auto& r : records) {
    os << std::setw(6) << r.n << std::setw(6) << r.d << std::setw(7) << r.n_bar << std::setw(6)
       << r.seed << std::setw(14) << format_float(r.frob_E) << std::setw(14)
       << format_float(r.out_err_ideal) << std::setw(14) << format_float(r.out_err_efficient)
       << std::setw(14) << format_float(r.relax_gap) << '\n';
  }
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("loglog_slope: need two or more paired points");
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    num += dx * (std::log(y[i]) - my);
    den += dx * dx;
  }
  return num / den;
}

}  // namespace dctattn::bench
