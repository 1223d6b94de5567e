// Command-line front end: runs the three experiments and the invariant
// verification suite, writing CSV results and JSON summaries.
//
// Exit codes: 0 success, 1 property/verification failure, 2 invalid config.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "multiridge/config.hpp"
#include "multiridge/experiments.hpp"
#include "multiridge/verify.hpp"
#include "multiridge/version.hpp"

namespace {

int run_verify(int threads) {
  multiridge::VerifyOptions opts;
  opts.threads = threads;
  auto results = multiridge::run_property_suite(opts);
  int failed = 0;
  for (const auto& r : results) {
    std::printf("[%s] %-42s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    if (!r.passed) ++failed;
  }
  std::printf("%zu/%zu properties passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-penalty ridge regression: experiments and verification"};
  app.set_version_flag("--version", multiridge::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string precision;
  long long seed = -1;
  int threads = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "INI config file (defaults run desk scale)");
    cmd->add_option("--out", out_dir, "output directory for CSV/JSON results");
    cmd->add_option("--seed", seed, "override the base seed");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
  };

  auto* exp1 = app.add_subcommand("experiment1", "feature-count sensitivity study");
  add_common(exp1);
  auto* bench = app.add_subcommand("gradient-bench",
                                   "analytic vs finite-difference gradient benchmark");
  add_common(bench);
  bench->add_option("--precision", precision, "restrict to one precision")
      ->check(CLI::IsMember({"f64", "f32"}));
  auto* exp3 = app.add_subcommand("experiment3", "LPV-ARX identification study");
  add_common(exp3);
  auto* verify = app.add_subcommand("verify", "run the invariant suite and print a report");
  verify->add_option("--threads", threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    multiridge::RunnerOptions opts;
    opts.out_dir = out_dir;
    opts.threads = multiridge::resolve_threads(threads);
    if (seed >= 0) opts.seed_override = static_cast<std::uint64_t>(seed);
    opts.precision_filter = precision;

    multiridge::IniConfig ini;
    if (!config_path.empty()) ini = multiridge::IniConfig::parse_file(config_path);

    if (verify->parsed()) {
      return run_verify(opts.threads);
    }
    if (exp1->parsed()) {
      auto summary = multiridge::run_experiment1(ini, opts);
      std::printf("experiment1: results in %s, summary in %s\n", summary.csv_path.c_str(),
                  summary.summary_path.c_str());
      return 0;
    }
    if (bench->parsed()) {
      auto summary = multiridge::run_gradient_bench(ini, opts);
      std::printf("gradient-bench: results in %s, summary in %s\n", summary.csv_path.c_str(),
                  summary.summary_path.c_str());
      return 0;
    }
    if (exp3->parsed()) {
      auto summary = multiridge::run_experiment3(ini, opts);
      std::printf("experiment3: results in %s, summary in %s\n", summary.csv_path.c_str(),
                  summary.summary_path.c_str());
      for (const auto& [method, median] : summary.medians) {
        std::printf("  median r2 %-12s %.4f\n", method.c_str(), median);
      }
      return 0;
    }
  } catch (const multiridge::InvalidInputError& err) {
    std::fprintf(stderr, "invalid config: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
