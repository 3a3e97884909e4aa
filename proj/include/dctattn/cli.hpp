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

// `dctattn` command line: selftest | bench | error.
// Exit codes: 0 success, 1 runtime or property failure, 2 usage error.

#pragma once

#include <cstdint>
#include <exception>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dctattn/bench.hpp"
#include "dctattn/selftest.hpp"

namespace dctattn::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;

struct CliConfig {
  std::string subcommand;
  std::vector<std::size_t> lengths{128, 512, 1024, 4096};
  double scale = 0.25;
  std::vector<std::string> kinds{"vanilla", "dct"};
  std::size_t batch = 1;
  std::size_t reps = 10;
  std::uint64_t seed = 0;
  std::size_t n = 64;
  std::size_t d = 512;
  std::size_t heads = 8;
  std::vector<std::size_t> n_bar_list;
  std::vector<std::uint64_t> seeds{0};
  std::string out;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CliConfig cfg;
  CLI::App app{"DCT-compressed self-attention: self-tests, scaling benchmarks, error profiles",
               "dctattn"};
  app.require_subcommand(1);

  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");
  selftest->add_option("--seed", cfg.seed, "random seed");

  auto* bench = app.add_subcommand("bench", "sequence-length scaling of time and peak memory");
  bench->add_option("--lengths", cfg.lengths, "comma-separated sequence lengths")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  bench->add_option("--scale", cfg.scale, "retained fraction n_bar/n, in (0,1]")
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--kinds", cfg.kinds, "vanilla,dct,ideal,naive")->delimiter(',');
  bench->add_option("--batch", cfg.batch, "batch size")->check(CLI::PositiveNumber);
  bench->add_option("--reps", cfg.reps, "timed repetitions (>= 3)")->check(CLI::Range(3, 1 << 20));
  bench->add_option("--seed", cfg.seed, "random seed");
  bench->add_option("--d", cfg.d, "embedding width")->check(CLI::PositiveNumber);
  bench->add_option("--heads", cfg.heads, "attention heads")->check(CLI::PositiveNumber);
  bench->add_option("--out", cfg.out, "CSV output path")->required();

  auto* error = app.add_subcommand("error", "approximation and relaxation error profile");
  error->add_option("--n", cfg.n, "sequence length")->check(CLI::PositiveNumber);
  error->add_option("--d", cfg.d, "embedding width")->check(CLI::PositiveNumber);
  error->add_option("--heads", cfg.heads, "attention heads")->check(CLI::PositiveNumber);
  error->add_option("--nbar", cfg.n_bar_list, "comma-separated retained coefficient counts")
      ->delimiter(',')
      ->required()
      ->check(CLI::PositiveNumber);
  error->add_option("--seeds", cfg.seeds, "comma-separated seeds")->delimiter(',');
  error->add_option("--out", cfg.out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  std::vector<bench::KindSpec> kinds;
  if (bench->parsed()) {
    if (cfg.scale <= 0.0) {
      err << "error: --scale must lie in (0, 1]\n";
      return kUsage;
    }
    if (cfg.d % cfg.heads != 0) {
      err << "error: --d must be divisible by --heads\n";
      return kUsage;
    }
    try {
      for (const auto& k : cfg.kinds) kinds.push_back(bench::KindSpec::parse(k, cfg.scale));
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << '\n';
      return kUsage;
    }
  }
  if (error->parsed()) {
    if (cfg.d % cfg.heads != 0) {
      err << "error: --d must be divisible by --heads\n";
      return kUsage;
    }
    for (std::size_t nb : cfg.n_bar_list) {
      if (nb > cfg.n) {
        err << "error: --nbar value " << nb << " exceeds --n " << cfg.n << '\n';
        return kUsage;
      }
    }
  }

  try {
    if (selftest->parsed()) {
      if (run_selftest(cfg.seed, out)) return kOk;
      err << "selftest failed\n";
      return kFailure;
    }
    if (bench->parsed()) {
      bench::ScalingConfig sc;
      sc.lengths = cfg.lengths;
      sc.scale = cfg.scale;
      sc.kinds = kinds;
      sc.batch = cfg.batch;
      sc.reps = cfg.reps;
      sc.seed = cfg.seed;
      sc.d = cfg.d;
      sc.heads = cfg.heads;
      const auto result = bench::run_scaling_bench(sc);
      bench::write_csv(result.records, cfg.out);
      bench::print_table(out, result.records);
      for (const auto& s : result.skipped)
        out << "skipped " << s.kind << " n=" << s.n << ": " << s.reason << '\n';
      return kOk;
    }
    if (error->parsed()) {
      const auto records =
          bench::run_error_profile(cfg.n, cfg.d, cfg.heads, cfg.n_bar_list, cfg.seeds);
      bench::write_csv(records, cfg.out);
      bench::print_table(out, records);
      return kOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace dctattn::cli
