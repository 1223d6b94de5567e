// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.
//
// Usage: acceptance <path-to-multiridge_cli> [out_dir]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multiridge/baselines.hpp"
#include "multiridge/experiments.hpp"
#include "multiridge/verify.hpp"
#include "support/prox_oracle.hpp"

namespace mr = multiridge;
namespace fs = std::filesystem;
using mr::MatrixXd;
using mr::VectorXd;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool passed;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
  g_results.push_back({id, name, passed, detail});
  std::printf("[%s] criterion %d (%s): %s\n", passed ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

const mr::PropertyResult* find_property(const std::vector<mr::PropertyResult>& results,
                                        const std::string& prefix) {
  for (const auto& r : results) {
    if (r.name.rfind(prefix, 0) == 0) return &r;
  }
  return nullptr;
}

// --- criterion 1 + 2 + 3: property suite at full instance count ------------

void run_criteria_1_2_3() {
  const auto t0 = std::chrono::steady_clock::now();
  mr::VerifyOptions opts;
  opts.agreement_instances = 50;
  auto results = mr::run_property_suite(opts);
  const double elapsed = seconds_since(t0);

  const auto* plain = find_property(results, "gradient agreement (plain)");
  const auto* augmented = find_property(results, "gradient agreement (gamma");
  const auto* qterm = find_property(results, "gradient agreement (Q");
  {
    const bool ok = plain && plain->passed && augmented && augmented->passed && qterm &&
                    qterm->passed && elapsed < 60.0;
    std::ostringstream detail;
    detail << "plain/augmented/Q agreement on 50 instances each, suite took " << elapsed << "s";
    report(1, "gradient correctness", ok, detail.str());
  }
  {
    const auto* origin = find_property(results, "origin stationarity");
    report(2, "origin stationarity", origin && origin->passed,
           origin ? origin->detail : "property missing");
  }
  {
    const auto* residual = find_property(results, "solver normal-equation residual");
    const auto* ridge_eq = find_property(results, "solver ridge equivalence");
    const auto* perm = find_property(results, "solver permutation equivariance");
    const bool ok = residual && residual->passed && ridge_eq && ridge_eq->passed && perm &&
                    perm->passed;
    std::ostringstream detail;
    detail << (residual ? residual->detail : "missing") << "; ridge equivalence and permutation "
           << "equivariance " << (ok ? "hold" : "failed");
    report(3, "solver correctness", ok, detail.str());
  }
}

// --- criterion 4: experiment 1 desk scale -----------------------------------

void run_criterion_4(const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  mr::RunnerOptions opts;
  opts.out_dir = out_dir + "/exp1";
  mr::IniConfig ini;  // defaults: D in {100,400,800}, 5 seeds, paper settings
  auto summary = mr::run_experiment1(ini, opts);
  const double elapsed = seconds_since(t0);

  auto median = [&](mr::Index d, const std::string& method) {
    return summary.stats.at({d, method})[0];
  };

  std::ostringstream detail;
  bool ok = true;
  for (const std::string& method : {"oracle", "ridge", "lasso", "enet", "multiridge"}) {
    const double m = median(100, method);
    if (m < 0.95) {
      ok = false;
      detail << method << " median at D=100 is " << m << " < 0.95; ";
    }
  }
  const double mr800 = median(800, "multiridge");
  const double lasso800 = median(800, "lasso");
  const double enet800 = median(800, "enet");
  const double ridge800 = median(800, "ridge");
  detail << "D=800 medians: multiridge " << mr800 << ", lasso " << lasso800 << ", enet "
         << enet800 << ", ridge " << ridge800;
  if (!(mr800 >= lasso800 && lasso800 >= enet800 && enet800 >= ridge800)) {
    ok = false;
    detail << "; ordering multiridge >= lasso >= enet >= ridge violated";
  }
  if (!(mr800 - ridge800 >= 0.05)) {
    ok = false;
    detail << "; multiridge - ridge gap " << (mr800 - ridge800) << " < 0.05";
  }
  detail << "; runtime " << elapsed << "s (budget 1800s)";
  if (elapsed > 1800.0) ok = false;
  report(4, "feature-count study trend", ok, detail.str());
}

// --- criterion 5: gradient benchmark ----------------------------------------

void run_criterion_5(const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  mr::RunnerOptions opts;
  opts.out_dir = out_dir + "/bench";
  mr::IniConfig ini;  // defaults: D in {10, 100, 1000}, N = 1000, M = 10, 80:20
  auto summary = mr::run_gradient_bench(ini, opts);
  const double elapsed = seconds_since(t0);

  auto row = [&](mr::Index d, const std::string& precision,
                 const std::string& method) -> const mr::GradientBenchRow& {
    for (const auto& r : summary.rows) {
      if (r.d == d && r.precision == precision && r.method == method) return r;
    }
    throw std::runtime_error("bench row missing");
  };

  bool ok = true;
  std::ostringstream detail;
  const auto& analytic64 = row(1000, "f64", "analytic");
  const auto& fd64 = row(1000, "f64", "finite_diff");
  detail << "D=1000 f64: analytic " << analytic64.seconds << "s vs finite-diff " << fd64.seconds
         << "s";
  if (!(analytic64.seconds < fd64.seconds)) {
    ok = false;
    detail << " (analytic not faster)";
  }
  for (mr::Index d : {10, 100, 1000}) {
    const auto& r = row(d, "f64", "analytic");
    if (!(r.diff_norm < 1e-6 * r.grad_norm)) {
      ok = false;
      detail << "; f64 relative diff at D=" << d << " is " << r.diff_norm / r.grad_norm;
    }
  }
  const double f32_diff = row(1000, "f32", "analytic").diff_norm;
  const double f64_diff = analytic64.diff_norm;
  detail << "; diff norms at D=1000: f64 " << f64_diff << ", f32 " << f32_diff;
  if (!(f32_diff >= 1e3 * f64_diff)) {
    ok = false;
    detail << " (f32/f64 ratio " << f32_diff / f64_diff << " < 1e3)";
  }
  detail << "; runtime " << elapsed << "s (budget 600s)";
  if (elapsed > 600.0) ok = false;
  report(5, "gradient benchmark", ok, detail.str());
}

// --- criterion 6: experiment 3 desk scale ------------------------------------

void run_criterion_6(const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  mr::RunnerOptions opts;
  opts.out_dir = out_dir + "/exp3";
  mr::IniConfig ini;  // defaults: 20 runs, paper settings, lasso-informed init
  auto summary = mr::run_experiment3(ini, opts);
  const double elapsed = seconds_since(t0);

  const double mr_med = summary.medians.at("multiridge");
  const double lasso_med = summary.medians.at("lasso");
  const double ridge_med = summary.medians.at("ridge");
  const double ols_med = summary.medians.at("ols");

  bool ok = true;
  std::ostringstream detail;
  detail << "medians: multiridge " << mr_med << ", lasso " << lasso_med << ", ridge " << ridge_med
         << ", ols " << ols_med;
  if (!(mr_med > lasso_med && lasso_med > ridge_med && ridge_med > ols_med)) {
    ok = false;
    detail << "; ordering multiridge > lasso > ridge > ols violated";
  }
  if (!(mr_med >= 0.80)) {
    ok = false;
    detail << "; multiridge median < 0.80";
  }
  if (!(std::abs(mr_med - 0.91) <= 0.15)) {
    ok = false;
    detail << "; multiridge median not within 0.15 of 0.91";
  }
  if (!(std::abs(lasso_med - 0.88) <= 0.15)) {
    ok = false;
    detail << "; lasso median not within 0.15 of 0.88";
  }
  detail << "; runtime " << elapsed << "s (budget 1200s)";
  if (elapsed > 1200.0) ok = false;
  report(6, "LPV identification trend", ok, detail.str());
}

// --- criterion 7: LASSO baseline correctness ---------------------------------

void run_criterion_7() {
  double worst_kkt = 0.0;
  std::mt19937_64 seeder(9100);
  for (int i = 0; i < 50; ++i) {
    std::mt19937_64 rng(seeder());
    std::normal_distribution<double> gauss(0.0, 1.0);
    const mr::Index d = 3 + static_cast<mr::Index>(rng() % 25);
    const mr::Index n = 20 + static_cast<mr::Index>(rng() % 100);
    MatrixXd x(n, d), y(n, 1);
    for (mr::Index r = 0; r < n; ++r)
      for (mr::Index c = 0; c < d; ++c) x(r, c) = gauss(rng);
    for (mr::Index r = 0; r < n; ++r) y(r, 0) = gauss(rng);
    const double alpha = 0.02 + 0.05 * double(i % 7);
    auto fit = mr::lasso_fit(x, y, alpha);
    worst_kkt = std::max(worst_kkt, mr::kkt_violation(x, y, fit.theta, alpha, 0.0));
  }

  // Objective agreement with the independent proximal-gradient oracle.
  double worst_gap = 0.0;
  for (std::uint64_t seed : {11u, 12u, 13u, 14u, 15u}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd x(24, 6), y(24, 1);
    for (mr::Index r = 0; r < 24; ++r)
      for (mr::Index c = 0; c < 6; ++c) x(r, c) = gauss(rng);
    for (mr::Index r = 0; r < 24; ++r) y(r, 0) = gauss(rng);
    const double alpha = 0.08;
    auto cd = mr::lasso_fit(x, y, alpha, 1e-9, 20000);
    MatrixXd oracle = multiridge_testing::fista_oracle(x, y, alpha, 1.0);
    const double f_cd = multiridge_testing::enet_objective(x, y, cd.theta, alpha, 1.0);
    const double f_or = multiridge_testing::enet_objective(x, y, oracle, alpha, 1.0);
    worst_gap = std::max(worst_gap, std::abs(f_cd - f_or));
  }

  std::ostringstream detail;
  detail << "max KKT violation " << worst_kkt << " (tol 1e-4), max objective gap vs "
         << "proximal oracle " << worst_gap << " (tol 1e-8)";
  report(7, "lasso baseline correctness", worst_kkt <= 1e-4 && worst_gap <= 1e-8, detail.str());
}

// --- criterion 8: CLI determinism --------------------------------------------

void run_criterion_8(const std::string& cli, const std::string& out_dir) {
  const std::string cfg_dir = out_dir + "/determinism";
  fs::create_directories(cfg_dir);

  // Timing columns are zeroed via record_timings so the full files are
  // byte-reproducible; everything else is deterministic unconditionally.
  const std::string exp1_cfg = cfg_dir + "/exp1.ini";
  {
    std::ofstream out(exp1_cfg);
    out << "[output]\nrecord_timings = false\n[experiment1]\nfeature_counts = 30\n"
           "replications = 2\nn_train = 120\nn_test = 400\n"
           "[ridge_search]\npoints = 50\n[lasso_search]\npoints = 50\n"
           "[enet_search]\npoints = 50\n[multiridge]\nepochs = 20\nlearning_rate = 5\n";
  }
  const std::string bench_cfg = cfg_dir + "/bench.ini";
  {
    std::ofstream out(bench_cfg);
    out << "[output]\nrecord_timings = false\n[gradient_bench]\nfeature_counts = 10, 40\n"
           "n_samples = 200\ntiming_reps = 1\n";
  }
  const std::string exp3_cfg = cfg_dir + "/exp3.ini";
  {
    std::ofstream out(exp3_cfg);
    out << "[output]\nrecord_timings = false\n[experiment3]\nruns = 2\nn_train = 40\n"
           "n_test = 300\nn_a = 5\nn_b = 5\n"
           "[ridge_search]\npoints = 50\n[lasso_search]\npoints = 50\n"
           "[enet_search]\npoints = 50\n[multiridge]\nepochs = 20\n";
  }

  struct Cmd {
    std::string subcommand, cfg, csv;
  };
  const std::vector<Cmd> commands = {
      {"experiment1", exp1_cfg, "experiment1_results.csv"},
      {"gradient-bench", bench_cfg, "gradient_bench_results.csv"},
      {"experiment3", exp3_cfg, "experiment3_results.csv"},
  };

  bool ok = true;
  std::ostringstream detail;
  for (const auto& cmd : commands) {
    const std::string dir_a = cfg_dir + "/" + cmd.subcommand + "_a";
    const std::string dir_b = cfg_dir + "/" + cmd.subcommand + "_b";
    for (const std::string& dir : {dir_a, dir_b}) {
      std::ostringstream shell;
      shell << cli << " " << cmd.subcommand << " --config " << cmd.cfg << " --out " << dir
            << " > /dev/null 2>&1";
      const int rc = std::system(shell.str().c_str());
      if (rc != 0) {
        ok = false;
        detail << cmd.subcommand << " exited with " << rc << "; ";
      }
    }
    const std::string a = read_file(dir_a + "/" + cmd.csv);
    const std::string b = read_file(dir_b + "/" + cmd.csv);
    if (a.empty() || a != b) {
      ok = false;
      detail << cmd.subcommand << " CSVs differ across runs; ";
    }
  }
  if (ok) detail << "all three commands byte-identical across two runs";
  report(8, "CLI determinism", ok, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <multiridge_cli path> [out_dir]\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::string out_dir =
      argc > 2 ? argv[2] : (fs::temp_directory_path() / "multiridge_acceptance").string();
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);

  run_criteria_1_2_3();
  run_criterion_7();
  run_criterion_8(cli, out_dir);
  run_criterion_5(out_dir);
  run_criterion_6(out_dir);
  run_criterion_4(out_dir);

  int failed = 0;
  for (const auto& r : g_results) failed += r.passed ? 0 : 1;
  std::printf("%zu/%zu acceptance criteria passed\n", g_results.size() - failed,
              g_results.size());
  return failed == 0 ? 0 : 1;
}
