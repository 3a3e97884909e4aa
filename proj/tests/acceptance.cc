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

// End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
// and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dctattn/attention.hpp"
#include "dctattn/bench.hpp"
#include "dctattn/cli.hpp"
#include "dctattn/dct.hpp"
#include "dctattn/transformer.hpp"

namespace {

using namespace dctattn;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Criterion {
  std::string name;
  double time_limit_s;  // <= 0: no limit
  std::function<Outcome(std::string& summary)> run;
};

Outcome dct_correctness(std::string& summary) {
  Outcome o;
  double worst_orth = 0, worst_round = 0, worst_compact = 0;
  Rng rng(1);
  for (std::size_t n : {1, 2, 3, 4, 7, 8, 16, 64, 128, 256, 512}) {
    const Matrix d = dct_matrix(n, n);
    worst_orth = std::max(worst_orth, max_abs_diff(matmul_nt(d, d), Matrix::identity(n)));
    for (bool fast : {false, true}) {
      const DctPlan plan(n, n, fast);
      const Matrix x = rand_uniform(rng, n, 4, -1, 1);
      worst_round = std::max(worst_round, max_abs_diff(dct_inverse(plan, dct_forward(plan, x)), x));
      const Matrix c = dct_forward(plan, Matrix(n, 1, 1.0));
      worst_compact = std::max(worst_compact, std::abs(c(0, 0) - std::sqrt(double(n))));
      for (std::size_t k = 1; k < n; ++k) worst_compact = std::max(worst_compact, std::abs(c(k, 0)));
    }
  }
  o.require(worst_orth < 1e-10, "orthogonality " + fmt(worst_orth));
  o.require(worst_round < 1e-9, "round trip " + fmt(worst_round));
  o.require(worst_compact < 1e-12, "compaction " + fmt(worst_compact));
  summary = "max|DD^T-I|=" + fmt(worst_orth) + " roundtrip=" + fmt(worst_round) +
            " compaction=" + fmt(worst_compact);
  return o;
}

Outcome makhoul_equivalence(std::string& summary) {
  Outcome o;
  double worst = 0;
  Rng rng(2);
  for (std::size_t n = 1; n <= 1024; n *= 2) {
    const Matrix d = dct_matrix(n, n);
    for (int t = 0; t < 10; ++t) {
      const Matrix x = rand_uniform(rng, n, 1, -1, 1);
      std::vector<double> v(x.data().begin(), x.data().end());
      const auto fast = makhoul_dct(v);
      const Matrix slow = matmul(d, x);
      for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(fast[k] - slow(k, 0)));
    }
  }
  o.require(worst < 1e-9, "gap " + fmt(worst));
  summary = "max gap=" + fmt(worst);
  return o;
}

Outcome efficient_equals_naive(std::string& summary) {
  Outcome o;
  double worst = 0;
  int count = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t ns[] = {4, 16, 64};
    const std::size_t n = ns[i % 3];
    const std::size_t nbs[] = {1, n / 4, n / 2, n};
    const std::size_t n_bar = nbs[(i / 3) % 4];
    Rng rng(1000 + i);
    const AttentionParams p = init_attention_params(rng, 16, 8);
    const Matrix x = rand_uniform(rng, n, 16, -1, 1);
    const DctPlan plan(n, n_bar);
    worst = std::max(worst, max_abs_diff(efficient_dct_attention(x, p, plan),
                                         naive_dct_attention(x, p, plan)));
    ++count;
  }
  o.require(worst < 1e-9, "gap " + fmt(worst));
  summary = std::to_string(count) + " instances, max gap=" + fmt(worst);
  return o;
}

Outcome ideal_exact_at_full_rank(std::string& summary) {
  Outcome o;
  double worst = 0;
  for (std::size_t n : {8, 32}) {
    const DctPlan plan(n, n);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed);
      const AttentionParams p = init_attention_params(rng, 16, 8);
      const Matrix x = rand_uniform(rng, n, 16, -1, 1);
      const Qkv qkv = project_qkv(x, p);
      worst = std::max(worst, max_abs_diff(ideal_dct_attention(x, p, plan),
                                           vanilla_attention(qkv.q, qkv.k, qkv.v)));
    }
  }
  o.require(worst < 1e-9, "gap " + fmt(worst));
  summary = "max gap=" + fmt(worst);
  return o;
}

Outcome relaxation_separation(std::string& summary) {
  Outcome o;
  const auto path = (std::filesystem::temp_directory_path() / "dctattn_acceptance_error.csv").string();
  bench::write_csv(bench::run_error_profile(64, 32, 8, {8, 16, 32, 64}, {1, 2, 3}), path);
  std::ifstream in(path);
  const auto recs = bench::parse_error_csv(in);
  std::filesystem::remove(path);
  o.require(recs.size() == 12, "row count " + std::to_string(recs.size()));
  double min_gap = HUGE_VAL, full_rank_e = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    double prev = HUGE_VAL;
    for (const auto& r : recs) {
      if (r.seed != seed) continue;
      o.require(r.frob_E <= prev + 1e-12, "frob_E increased at n_bar=" + std::to_string(r.n_bar));
      prev = r.frob_E;
      if (r.n_bar == 64) {
        full_rank_e = std::max(full_rank_e, r.frob_E);
      } else {
        min_gap = std::min(min_gap, r.relax_gap);
      }
    }
  }
  o.require(full_rank_e < 1e-9, "frob_E at n_bar=n " + fmt(full_rank_e));
  o.require(min_gap > 1e-6, "min relax_gap " + fmt(min_gap));
  summary = "frob_E(n_bar=64)=" + fmt(full_rank_e) + " min relax_gap(n_bar<64)=" + fmt(min_gap);
  return o;
}

Outcome gradient_check(std::string& summary) {
  Outcome o;
  const double h = 1e-5;
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Matrix q = rand_uniform(rng, 8, 4, -1, 1), k = rand_uniform(rng, 8, 4, -1, 1),
           v = rand_uniform(rng, 8, 4, -1, 1);
    const Matrix up = rand_uniform(rng, 8, 4, -1, 1);
    const QkvGrad g = vanilla_attention_vjp(q, k, v, up);
    auto loss = [&] {
      const Matrix out = vanilla_attention(q, k, v);
      double s = 0;
      for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * up.data()[i];
      return s;
    };
    Matrix* in[] = {&q, &k, &v};
    const Matrix* an[] = {&g.dq, &g.dk, &g.dv};
    for (int w = 0; w < 3; ++w) {
      for (std::size_t i = 0; i < in[w]->size(); ++i) {
        double& x = in[w]->data()[i];
        const double x0 = x;
        x = x0 + h;
        const double fp = loss();
        x = x0 - h;
        const double fm = loss();
        x = x0;
        const double fd = (fp - fm) / (2 * h);
        const double a = an[w]->data()[i];
        worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
      }
    }
  }
  o.require(worst < 1e-5, "relative error " + fmt(worst));
  summary = "max relative error=" + fmt(worst);
  return o;
}

Outcome memory_scaling(std::string& summary) {
  Outcome o;
  bench::ScalingConfig cfg;
  cfg.lengths = {256, 512, 1024, 2048, 4096};
  cfg.scale = 0.25;
  cfg.d = 64;
  cfg.heads = 8;
  cfg.batch = 1;
  cfg.reps = 3;
  cfg.seed = 1;
  cfg.memory_only = true;
  cfg.kinds = {bench::KindSpec::parse("vanilla", 0.25), bench::KindSpec::parse("dct", 0.25)};
  const auto a = bench::run_scaling_bench(cfg);
  const auto b = bench::run_scaling_bench(cfg);
  bool deterministic = a.records.size() == b.records.size();
  for (std::size_t i = 0; deterministic && i < a.records.size(); ++i)
    deterministic = a.records[i].peak_floats == b.records[i].peak_floats;
  o.require(deterministic, "peaks differ between identical runs");
  o.require(a.skipped.empty(), "skipped configurations");

  std::vector<double> ns, van, eff;
  double ratio = 0;
  for (std::size_t n : cfg.lengths) {
    double pv = 0, pe = 0;
    for (const auto& r : a.records) {
      if (r.n != n) continue;
      (r.kind == "Vanilla" ? pv : pe) = static_cast<double>(r.peak_floats);
    }
    ns.push_back(double(n));
    van.push_back(pv);
    eff.push_back(pe);
    if (n == 2048) ratio = pe / pv;
  }
  const double sv = bench::loglog_slope(ns, van);
  const double se = bench::loglog_slope(ns, eff);
  o.require(ratio <= 0.4, "peak ratio " + fmt(ratio));
  o.require(sv >= 1.9, "vanilla slope " + fmt(sv));
  o.require(se <= 1.3, "DCT slope " + fmt(se) + " > 1.3");
  summary = "ratio@2048=" + fmt(ratio) + " slope vanilla=" + fmt(sv) + " slope DCT-0.25=" + fmt(se);
  return o;
}

Outcome time_scaling(std::string& summary) {
  Outcome o;
  bench::ScalingConfig cfg;
  cfg.lengths = {2048};
  cfg.scale = 0.25;
  cfg.d = 64;
  cfg.heads = 8;
  cfg.reps = 5;
  cfg.seed = 2;
  cfg.kinds = {bench::KindSpec::parse("vanilla", 0.25), bench::KindSpec::parse("dct", 0.25)};
  const auto r = bench::run_scaling_bench(cfg);
  double tv = 0, te = 0;
  for (const auto& rec : r.records) (rec.kind == "Vanilla" ? tv : te) = rec.time_ms_median;
  const double ratio = te / tv;
  o.require(ratio <= 0.7, "time ratio " + fmt(ratio));
  summary = "vanilla=" + fmt(tv) + "ms DCT-0.25=" + fmt(te) + "ms ratio=" + fmt(ratio);
  return o;
}

Outcome encoder_smoke(std::string& summary) {
  Outcome o;
  EncoderConfig cfg;  // 4 blocks, d=512, 8 heads, FF 2048
  cfg.seed = 9;
  const EncoderWeights w = init_encoder_weights(cfg);
  Rng rng(10);
  std::vector<std::size_t> ids(128);
  for (auto& id : ids) id = rng.next_u64() % cfg.vocab_size;
  std::vector<Matrix> outs;
  for (AttentionKind kind : {AttentionKind::vanilla(), AttentionKind::efficient(32),
                             AttentionKind::ideal(128), AttentionKind::naive(32)}) {
    cfg.attention = kind;
    outs.push_back(encoder_forward(ids, w, cfg));
    o.require(all_finite(outs.back()), "non-finite output");
    o.require(outs.back().rows() == 128 && outs.back().cols() == 512,
              "shape " + outs.back().shape());
  }
  const double gap = max_abs_diff(outs[0], outs[2]);
  o.require(gap < 1e-9, "vanilla vs ideal(128) " + fmt(gap));
  summary = "4 kinds finite 128x512, vanilla vs IDEAL-128 gap=" + fmt(gap);
  return o;
}

Outcome cli_determinism(std::string& summary) {
  Outcome o;
  namespace fs = std::filesystem;
  auto call = [](std::vector<std::string> args) {
    args.insert(args.begin(), "dctattn");
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  auto without_time = [&](const std::string& p) {
    std::istringstream in(slurp(p));
    auto recs = bench::parse_scaling_csv(in);
    for (auto& r : recs) r.time_ms_median = 0;
    return bench::to_csv(recs);
  };
  const auto dir = fs::temp_directory_path();
  const std::string b1 = (dir / "dctattn_acc_b1.csv").string(), b2 = (dir / "dctattn_acc_b2.csv").string();
  const std::string e1 = (dir / "dctattn_acc_e1.csv").string(), e2 = (dir / "dctattn_acc_e2.csv").string();
  for (const auto& p : {b1, b2}) {
    o.require(call({"bench", "--lengths", "64,128", "--scale", "0.25", "--kinds",
                    "vanilla,dct,ideal,naive", "--d", "64", "--heads", "8", "--reps", "3",
                    "--seed", "7", "--out", p}) == 0,
              "bench exit code");
  }
  for (const auto& p : {e1, e2}) {
    o.require(call({"error", "--n", "64", "--d", "32", "--nbar", "8,16,32,64", "--seeds", "1,2,3",
                    "--out", p}) == 0,
              "error exit code");
  }
  o.require(without_time(b1) == without_time(b2), "bench CSVs differ outside time column");
  o.require(slurp(e1) == slurp(e2), "error CSVs differ");
  const int st = call({"selftest", "--seed", "42"});
  o.require(st == 0, "selftest exit " + std::to_string(st));
  for (const auto& p : {b1, b2, e1, e2}) fs::remove(p);
  summary = "bench/error CSVs reproducible, selftest exit " + std::to_string(st);
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1 DCT correctness", 5, dct_correctness},
      {"2 Makhoul equivalence", 10, makhoul_equivalence},
      {"3 efficient == naive", 30, efficient_equals_naive},
      {"4 ideal exact at full rank", 0, ideal_exact_at_full_rank},
      {"5 relaxation-error separation", 0, relaxation_separation},
      {"6 gradient check", 0, gradient_check},
      {"7 memory scaling", 120, memory_scaling},
      {"8 time scaling (soft)", 0, time_scaling},
      {"9 encoder smoke at reference shape", 0, encoder_smoke},
      {"10 CLI determinism", 0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string summary;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run(summary);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit_s > 0) o.require(secs < c.time_limit_s, "runtime " + fmt(secs) + "s");
    std::printf("[%s] %-36s %s (%.2fs)%s%s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(),
                summary.c_str(), secs, o.pass ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
