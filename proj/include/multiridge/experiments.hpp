#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "multiridge/baselines.hpp"
#include "multiridge/config.hpp"
#include "multiridge/criterion.hpp"
#include "multiridge/datagen.hpp"
#include "multiridge/finite_diff.hpp"
#include "multiridge/folds.hpp"
#include "multiridge/metrics.hpp"
#include "multiridge/optimizer.hpp"
#include "multiridge/parallel.hpp"
#include "multiridge/records.hpp"
#include "multiridge/standardize.hpp"

namespace multiridge {

struct RunnerOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::string precision_filter;  // gradient bench: "", "f64" or "f32"
};

namespace exp_detail {

using json = nlohmann::json;

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

/// Median of `reps` timed calls after one warm-up. The callable must be
/// idempotent; its last result is the one kept by the caller.
template <typename F>
double time_median(F&& f, int reps) {
  if (reps < 1) reps = 1;
  f();  // warm-up
  std::vector<double> times(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    f();
    times[static_cast<std::size_t>(r)] = now_seconds() - t0;
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * double(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - double(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(line);
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write " + path);
  out << text;
}

inline std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return out;
}

/// Existing-result cache: rows keyed by their identifying columns so
/// partial re-runs only compute what is missing.
struct CsvCache {
  std::string header;
  std::map<std::string, std::string> rows;  // key -> full line

  static CsvCache load(const std::string& path, const std::string& expected_header,
                       int key_columns) {
    CsvCache cache;
    cache.header = expected_header;
    if (!std::filesystem::exists(path)) return cache;
    auto lines = read_lines(path);
    if (lines.empty()) return cache;
    if (lines.front() != expected_header) {
      throw InvalidInputError(path + ": existing file has a different schema; move it away");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      auto fields = split_csv(lines[i]);
      if (static_cast<int>(fields.size()) < key_columns) {
        throw InvalidInputError(path + ": malformed row: " + lines[i]);
      }
      std::string key;
      for (int c = 0; c < key_columns; ++c) key += fields[static_cast<std::size_t>(c)] + "|";
      cache.rows[key] = lines[i];
    }
    return cache;
  }

  bool has(const std::string& key) const { return rows.count(key) > 0; }

  void put(const std::string& key, const std::string& line) { rows[key] = line; }

  /// Writes rows in the order of `ordered_keys` (every key must exist).
  void write(const std::string& path, const std::vector<std::string>& ordered_keys) const {
    std::ostringstream out;
    out << header << "\n";
    for (const auto& key : ordered_keys) out << rows.at(key) << "\n";
    write_text(path, out.str());
  }
};

/// Loads/saves the per-run ExperimentRecord archive keyed by experiment_id.
struct RecordArchive {
  std::map<std::string, ExperimentRecord> records;

  static RecordArchive load(const std::string& path) {
    RecordArchive archive;
    if (!std::filesystem::exists(path)) return archive;
    std::ifstream in(path);
    json j = json::parse(in);
    for (const auto& item : j) {
      ExperimentRecord r = item.get<ExperimentRecord>();
      archive.records[r.experiment_id] = std::move(r);
    }
    return archive;
  }

  void save(const std::string& path) const {
    json j = json::array();
    for (const auto& [id, record] : records) j.push_back(record);
    write_text(path, j.dump(2) + "\n");
  }
};

}  // namespace exp_detail

// ---------------------------------------------------------------------------
// Shared per-run method suite
// ---------------------------------------------------------------------------

/// One experiment run's method roster and its settings.
struct MethodSuiteConfig {
  std::vector<std::string> methods;  // subset of oracle/ols/ridge/lasso/enet/multiridge
  int folds = 5;
  SearchSpec ridge_search = SearchSpec::ridge_default();
  SearchSpec lasso_search = SearchSpec::lasso_default();
  SearchSpec enet_search = SearchSpec::enet_default();
  OptimConfig optim{};
  std::vector<double> gamma_set{1.0};
  double mu = 0.0;
  std::uint64_t plan_seed = 0;
  int threads = 1;
  bool record_timings = true;
};

struct MethodSuiteResult {
  std::vector<MethodOutcome> methods;
  std::vector<std::array<double, 3>> optimizer_history;  // multiridge (value, grad_norm, lr)
};

/// Standardizes on the training set, builds the fold plan, and runs every
/// requested method; per-method failures become `error:` statuses rather
/// than aborting the run. Predictions are mapped back to the original
/// target units before scoring.
inline MethodSuiteResult run_method_suite(const Dataset<double>& train,
                                          const Dataset<double>& test,
                                          const MethodSuiteConfig& cfg) {
  using exp_detail::now_seconds;
  MethodSuiteResult out;

  const Standardizer<double> scaler = standardize_fit(train);
  const Dataset<double> train_std = standardize_apply(scaler, train);
  const MatrixXd x_test_std = scaler.apply_features(test.X);
  const FoldPlan plan = partition_folds(train.n_samples(), cfg.folds, cfg.plan_seed);

  auto score = [&](const MatrixXd& theta_std) {
    return r2_score(test.Y, scaler.invert_targets(MatrixXd(x_test_std * theta_std)));
  };

  std::optional<MatrixXd> lasso_theta;  // reused by the lasso-informed init

  auto run_lasso_search = [&]() {
    auto result = search_cv(train_std, plan, cfg.lasso_search, cfg.threads);
    lasso_theta = result.theta;
    return result;
  };

  for (const std::string& method : cfg.methods) {
    MethodOutcome outcome;
    outcome.method = method;
    const double t0 = now_seconds();
    try {
      if (method == "oracle") {
        if (!train.has_true_theta()) throw InvalidInputError("oracle method needs true_theta");
        outcome.r2 = r2_score(test.Y, MatrixXd(test.X * train.true_theta));
      } else if (method == "ols") {
        outcome.r2 = score(ols_fit(train_std.X, train_std.Y));
      } else if (method == "ridge") {
        auto result = search_cv(train_std, plan, cfg.ridge_search, cfg.threads);
        outcome.hyperparams = {{"alpha", result.strength}};
        outcome.r2 = score(result.theta);
      } else if (method == "lasso") {
        auto result = run_lasso_search();
        outcome.hyperparams = {{"alpha", result.strength}};
        outcome.r2 = score(result.theta);
      } else if (method == "enet") {
        auto result = search_cv(train_std, plan, cfg.enet_search, cfg.threads);
        outcome.hyperparams = {{"alpha", result.strength}, {"l1_ratio", result.l1_ratio}};
        outcome.r2 = score(result.theta);
      } else if (method == "multiridge") {
        HyperParams<double> hp;
        hp.gamma_set.assign(cfg.gamma_set.begin(), cfg.gamma_set.end());
        hp.mu = cfg.mu;
        if (cfg.optim.init.kind == InitSpec::Kind::LassoInformed) {
          if (!lasso_theta) run_lasso_search();
          hp.lambda =
              init_lambda<double>(cfg.optim.init, train.n_features(), &lasso_theta.value());
        } else {
          hp.lambda = init_lambda<double>(cfg.optim.init, train.n_features());
        }
        auto result = optimize(train_std, plan, hp, cfg.optim, cfg.threads);
        outcome.r2 = score(result.theta_final);
        outcome.hyperparams = {{"lambda_norm", result.lambda_star.norm()},
                               {"epochs", result.epochs_run}};
        out.optimizer_history.clear();
        out.optimizer_history.reserve(result.history.size());
        for (const auto& stat : result.history) {
          out.optimizer_history.push_back({stat.value, stat.grad_norm, stat.lr});
        }
      } else {
        throw InvalidInputError("unknown method: " + method);
      }
    } catch (const std::exception& err) {
      outcome.status = std::string("error: ") + err.what();
      outcome.r2 = std::numeric_limits<double>::quiet_NaN();
    }
    outcome.seconds = cfg.record_timings ? now_seconds() - t0 : 0.0;
    out.methods.push_back(std::move(outcome));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 1: sensitivity to the number of features
// ---------------------------------------------------------------------------

struct Experiment1Config {
  std::vector<Index> feature_counts{100, 400, 800};
  int replications = 5;
  std::uint64_t seed = 1;
  Index n_train = 1000;
  Index n_test = 10000;
  double snr_db = 20.0;
  double informative_fraction = 0.5;
  double coef_lo = -50.0;
  double coef_hi = 50.0;
  MethodSuiteConfig suite;
  bool record_timings = true;

  static Experiment1Config from_ini(const IniConfig& ini, const RunnerOptions& opts) {
    Experiment1Config cfg;
    auto counts = ini.get_double_list("experiment1", "feature_counts", {100, 400, 800});
    cfg.feature_counts.assign(counts.begin(), counts.end());
    cfg.replications = static_cast<int>(ini.get_int("experiment1", "replications", 5));
    cfg.seed = static_cast<std::uint64_t>(ini.get_int("experiment1", "seed", 1));
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    cfg.n_train = ini.get_int("experiment1", "n_train", 1000);
    cfg.n_test = ini.get_int("experiment1", "n_test", 10000);
    cfg.snr_db = ini.get_double("experiment1", "snr_db", 20.0);
    cfg.informative_fraction = ini.get_double("experiment1", "informative_fraction", 0.5);
    cfg.coef_lo = ini.get_double("experiment1", "coef_lo", -50.0);
    cfg.coef_hi = ini.get_double("experiment1", "coef_hi", 50.0);
    cfg.record_timings = ini.get_bool("output", "record_timings", true);

    cfg.suite.methods = ini.get_string_list("experiment1", "methods",
                                            {"oracle", "ridge", "lasso", "enet", "multiridge"});
    cfg.suite.folds = static_cast<int>(ini.get_int("experiment1", "folds", 5));
    cfg.suite.record_timings = cfg.record_timings;
    cfg.suite.threads = opts.threads;
    load_search_specs(ini, cfg.suite);
    cfg.suite.optim.learning_rate = ini.get_double("multiridge", "learning_rate", 350.0);
    cfg.suite.optim.decay = ini.get_double("multiridge", "decay", 0.999);
    cfg.suite.optim.epochs = static_cast<int>(ini.get_int("multiridge", "epochs", 300));
    cfg.suite.optim.init = read_init(ini, "identity");
    cfg.suite.gamma_set = ini.get_double_list("multiridge", "gamma_set", {1.0});
    cfg.suite.mu = ini.get_double("multiridge", "mu", 0.0);
    return cfg;
  }

  static void load_search_specs(const IniConfig& ini, MethodSuiteConfig& suite) {
    auto load = [&](const char* section, SearchSpec spec) {
      spec.strength_lo = ini.get_double(section, "lo", spec.strength_lo);
      spec.strength_hi = ini.get_double(section, "hi", spec.strength_hi);
      spec.num_points = static_cast<int>(ini.get_int(section, "points", spec.num_points));
      spec.cd_tol = ini.get_double("cd", "tol", 1e-4);
      spec.cd_max_iter = static_cast<int>(ini.get_int("cd", "max_iter", 1000));
      return spec;
    };
    suite.ridge_search = load("ridge_search", SearchSpec::ridge_default());
    suite.lasso_search = load("lasso_search", SearchSpec::lasso_default());
    suite.enet_search = load("enet_search", SearchSpec::enet_default());
    suite.enet_search.l1_ratio_lo = ini.get_double("enet_search", "ratio_lo", 0.0);
    suite.enet_search.l1_ratio_hi = ini.get_double("enet_search", "ratio_hi", 1.0);
  }

  static InitSpec read_init(const IniConfig& ini, const std::string& fallback) {
    const std::string kind = ini.get_string("multiridge", "init", fallback);
    if (kind == "identity") return InitSpec::identity();
    if (kind == "lasso_informed") {
      return InitSpec::lasso_informed(ini.get_double("multiridge", "init_high", 10.0),
                                      ini.get_double("multiridge", "init_low", 1.0));
    }
    if (kind.rfind("constant", 0) == 0) {
      return InitSpec::constant(ini.get_double("multiridge", "init_value", 1.0));
    }
    throw InvalidInputError("unknown multiridge init strategy: " + kind);
  }
};

struct Experiment1Summary {
  // (D, method) -> {median, p5, p95, n}
  std::map<std::pair<Index, std::string>, std::array<double, 4>> stats;
  std::string csv_path;
  std::string summary_path;
};

inline Experiment1Summary run_experiment1(const Experiment1Config& cfg,
                                          const RunnerOptions& opts) {
  namespace ed = exp_detail;
  const std::string csv_path = opts.out_dir + "/experiment1_results.csv";
  const std::string summary_path = opts.out_dir + "/experiment1_summary.json";
  const std::string records_path = opts.out_dir + "/experiment1_records.json";
  const std::string header = "D,method,seed,r2,seconds,status";
  auto cache = ed::CsvCache::load(csv_path, header, 3);
  auto archive = ed::RecordArchive::load(records_path);

  std::vector<std::string> ordered_keys;
  for (Index d : cfg.feature_counts) {
    for (int rep = 0; rep < cfg.replications; ++rep) {
      const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(rep);
      std::vector<std::string> missing;
      for (const auto& method : cfg.suite.methods) {
        const std::string key = std::to_string(d) + "|" + method + "|" +
                                std::to_string(run_seed) + "|";
        ordered_keys.push_back(key);
        if (!cache.has(key)) missing.push_back(method);
      }
      if (missing.empty()) continue;

      SparseLinearSpec spec;
      spec.d = d;
      spec.n_train = cfg.n_train;
      spec.n_test = cfg.n_test;
      spec.informative_fraction = cfg.informative_fraction;
      spec.coef_lo = cfg.coef_lo;
      spec.coef_hi = cfg.coef_hi;
      spec.snr_db = cfg.snr_db;
      spec.seed = ed::mix_seed(run_seed, static_cast<std::uint64_t>(d));
      auto [train, test] = gen_sparse_linear(spec);

      MethodSuiteConfig suite = cfg.suite;
      suite.methods = missing;
      suite.plan_seed = ed::mix_seed(spec.seed, 1);
      suite.enet_search.seed = ed::mix_seed(spec.seed, 2);
      auto result = run_method_suite(train, test, suite);

      ExperimentRecord record;
      record.experiment_id =
          "experiment1/D=" + std::to_string(d) + "/seed=" + std::to_string(run_seed);
      record.config = {{"D", d},           {"n_train", cfg.n_train},
                       {"n_test", cfg.n_test}, {"snr_db", cfg.snr_db},
                       {"informative_fraction", cfg.informative_fraction}};
      record.seeds = {run_seed, spec.seed, suite.plan_seed};
      record.methods = result.methods;
      record.optimizer_history = result.optimizer_history;
      if (archive.records.count(record.experiment_id)) {
        auto& existing = archive.records[record.experiment_id];
        existing.methods.insert(existing.methods.end(), record.methods.begin(),
                                record.methods.end());
        existing.optimizer_history = record.optimizer_history.empty()
                                         ? existing.optimizer_history
                                         : record.optimizer_history;
      } else {
        archive.records[record.experiment_id] = record;
      }

      for (const auto& outcome : result.methods) {
        const std::string key = std::to_string(d) + "|" + outcome.method + "|" +
                                std::to_string(run_seed) + "|";
        std::ostringstream line;
        line << d << "," << outcome.method << "," << run_seed << "," << ed::fmt(outcome.r2)
             << "," << ed::fmt(outcome.seconds) << "," << ed::sanitize(outcome.status);
        cache.put(key, line.str());
      }
    }
  }

  cache.write(csv_path, ordered_keys);
  archive.save(records_path);

  // Summary statistics over replications.
  Experiment1Summary summary;
  summary.csv_path = csv_path;
  summary.summary_path = summary_path;
  std::map<std::pair<Index, std::string>, std::vector<double>> grouped;
  for (const auto& key : ordered_keys) {
    auto fields = ed::split_csv(cache.rows.at(key));
    if (fields.at(5) != "ok") continue;
    grouped[{static_cast<Index>(std::stoll(fields.at(0))), fields.at(1)}].push_back(
        std::stod(fields.at(3)));
  }
  ed::json j;
  j["experiment"] = "experiment1";
  j["version"] = kVersion;
  ed::json stats = ed::json::array();
  for (const auto& [group, values] : grouped) {
    const double median = ed::percentile(values, 50.0);
    const double p5 = ed::percentile(values, 5.0);
    const double p95 = ed::percentile(values, 95.0);
    summary.stats[group] = {median, p5, p95, double(values.size())};
    stats.push_back({{"D", group.first},
                     {"method", group.second},
                     {"median_r2", median},
                     {"p5_r2", p5},
                     {"p95_r2", p95},
                     {"n", values.size()}});
  }
  j["stats"] = std::move(stats);
  ed::write_text(summary_path, j.dump(2) + "\n");
  return summary;
}

inline Experiment1Summary run_experiment1(const IniConfig& ini, const RunnerOptions& opts) {
  return run_experiment1(Experiment1Config::from_ini(ini, opts), opts);
}

// ---------------------------------------------------------------------------
// Gradient benchmark: analytic gradient vs central finite differences
// ---------------------------------------------------------------------------

struct GradientBenchConfig {
  std::vector<Index> feature_counts{10, 100, 1000};
  Index n_samples = 1000;
  Index n_targets = 10;
  double val_fraction = 0.2;
  std::uint64_t seed = 1;
  double fd_step_f64 = 1e-6;
  double fd_step_f32 = 1e-3;
  int timing_reps = 5;
  int fd_timing_reps = 1;
  std::vector<std::string> precisions{"f64", "f32"};
  bool record_timings = true;

  static GradientBenchConfig from_ini(const IniConfig& ini, const RunnerOptions& opts) {
    GradientBenchConfig cfg;
    auto counts = ini.get_double_list("gradient_bench", "feature_counts", {10, 100, 1000});
    cfg.feature_counts.assign(counts.begin(), counts.end());
    cfg.n_samples = ini.get_int("gradient_bench", "n_samples", 1000);
    cfg.n_targets = ini.get_int("gradient_bench", "n_targets", 10);
    cfg.val_fraction = ini.get_double("gradient_bench", "val_fraction", 0.2);
    cfg.seed = static_cast<std::uint64_t>(ini.get_int("gradient_bench", "seed", 1));
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    cfg.fd_step_f64 = ini.get_double("gradient_bench", "fd_step_f64", 1e-6);
    cfg.fd_step_f32 = ini.get_double("gradient_bench", "fd_step_f32", 1e-3);
    cfg.timing_reps = static_cast<int>(ini.get_int("gradient_bench", "timing_reps", 5));
    cfg.fd_timing_reps = static_cast<int>(ini.get_int("gradient_bench", "fd_timing_reps", 1));
    cfg.precisions = ini.get_string_list("gradient_bench", "precisions", {"f64", "f32"});
    if (!opts.precision_filter.empty()) cfg.precisions = {opts.precision_filter};
    cfg.record_timings = ini.get_bool("output", "record_timings", true);
    for (const auto& p : cfg.precisions) {
      if (p != "f64" && p != "f32") throw InvalidInputError("unknown precision: " + p);
    }
    return cfg;
  }
};

struct GradientBenchRow {
  Index d = 0;
  std::string precision;
  std::string method;  // "analytic" or "finite_diff"
  double seconds = 0.0;
  double diff_norm = 0.0;
  double grad_norm = 0.0;
};

namespace exp_detail {

template <typename Scalar>
std::pair<GradientBenchRow, GradientBenchRow> bench_one_precision(
    const Dataset<double>& data64, const VectorXd& lambda64, const FoldPlan& plan, Index d,
    const GradientBenchConfig& cfg, const std::string& precision, double fd_step) {
  Dataset<Scalar> data = data64.template cast<Scalar>();
  HyperParams<Scalar> hp;
  hp.lambda = lambda64.template cast<Scalar>();
  CvEngine<Scalar> engine(data, plan);

  Vector<Scalar> analytic;
  const double analytic_seconds =
      time_median([&] { analytic = engine.gradient(hp).grad; }, cfg.timing_reps);

  auto objective = [&](const Vector<Scalar>& lam) {
    HyperParams<Scalar> probe = hp;
    probe.lambda = lam;
    return engine.evaluate(probe).value;
  };
  Vector<Scalar> numeric;
  const double fd_seconds = time_median(
      [&] { numeric = finite_diff_grad(objective, hp.lambda, Scalar(fd_step)); },
      cfg.fd_timing_reps);

  const double diff = static_cast<double>((analytic - numeric).norm());
  const double norm = static_cast<double>(analytic.norm());
  GradientBenchRow analytic_row{d, precision, "analytic",
                                cfg.record_timings ? analytic_seconds : 0.0, diff, norm};
  GradientBenchRow fd_row{d, precision, "finite_diff", cfg.record_timings ? fd_seconds : 0.0,
                          diff, norm};
  return {analytic_row, fd_row};
}

}  // namespace exp_detail

struct GradientBenchSummary {
  std::vector<GradientBenchRow> rows;
  std::string csv_path;
  std::string summary_path;
};

inline GradientBenchSummary run_gradient_bench(const GradientBenchConfig& cfg,
                                               const RunnerOptions& opts) {
  namespace ed = exp_detail;
  const std::string csv_path = opts.out_dir + "/gradient_bench_results.csv";
  const std::string summary_path = opts.out_dir + "/gradient_bench_summary.json";
  const std::string header = "D,precision,method,seconds,diff_norm,grad_norm";
  auto cache = ed::CsvCache::load(csv_path, header, 3);

  std::vector<std::string> ordered_keys;
  GradientBenchSummary summary;
  summary.csv_path = csv_path;
  summary.summary_path = summary_path;

  for (Index d : cfg.feature_counts) {
    for (const std::string& precision : cfg.precisions) {
      const std::string key_a = std::to_string(d) + "|" + precision + "|analytic|";
      const std::string key_f = std::to_string(d) + "|" + precision + "|finite_diff|";
      ordered_keys.push_back(key_a);
      ordered_keys.push_back(key_f);
      if (cache.has(key_a) && cache.has(key_f)) continue;

      const std::uint64_t data_seed = ed::mix_seed(cfg.seed, static_cast<std::uint64_t>(d));
      std::mt19937_64 rng(data_seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Dataset<double> data;
      data.X = MatrixXd(cfg.n_samples, d);
      data.Y = MatrixXd(cfg.n_samples, cfg.n_targets);
      for (Index i = 0; i < cfg.n_samples; ++i)
        for (Index j = 0; j < d; ++j) data.X(i, j) = gauss(rng);
      for (Index i = 0; i < cfg.n_samples; ++i)
        for (Index m = 0; m < cfg.n_targets; ++m) data.Y(i, m) = gauss(rng);
      VectorXd lambda(d);
      for (Index j = 0; j < d; ++j) lambda[j] = gauss(rng);
      const FoldPlan plan = FoldPlan::holdout(cfg.n_samples, cfg.val_fraction, data_seed + 1);

      std::pair<GradientBenchRow, GradientBenchRow> rows =
          precision == "f64"
              ? ed::bench_one_precision<double>(data, lambda, plan, d, cfg, precision,
                                                cfg.fd_step_f64)
              : ed::bench_one_precision<float>(data, lambda, plan, d, cfg, precision,
                                               cfg.fd_step_f32);
      for (const auto& row : {rows.first, rows.second}) {
        std::ostringstream line;
        line << row.d << "," << row.precision << "," << row.method << ","
             << ed::fmt(row.seconds) << "," << ed::fmt(row.diff_norm) << ","
             << ed::fmt(row.grad_norm);
        cache.put(std::to_string(row.d) + "|" + row.precision + "|" + row.method + "|",
                  line.str());
      }
    }
  }

  cache.write(csv_path, ordered_keys);

  for (const auto& key : ordered_keys) {
    auto fields = ed::split_csv(cache.rows.at(key));
    GradientBenchRow row;
    row.d = static_cast<Index>(std::stoll(fields.at(0)));
    row.precision = fields.at(1);
    row.method = fields.at(2);
    row.seconds = std::stod(fields.at(3));
    row.diff_norm = std::stod(fields.at(4));
    row.grad_norm = std::stod(fields.at(5));
    summary.rows.push_back(std::move(row));
  }

  ed::json j;
  j["experiment"] = "gradient_bench";
  j["version"] = kVersion;
  ed::json rows = ed::json::array();
  for (const auto& row : summary.rows) {
    rows.push_back({{"D", row.d},
                    {"precision", row.precision},
                    {"method", row.method},
                    {"seconds", row.seconds},
                    {"diff_norm", row.diff_norm},
                    {"grad_norm", row.grad_norm}});
  }
  j["rows"] = std::move(rows);
  ed::write_text(summary_path, j.dump(2) + "\n");
  return summary;
}

inline GradientBenchSummary run_gradient_bench(const IniConfig& ini, const RunnerOptions& opts) {
  return run_gradient_bench(GradientBenchConfig::from_ini(ini, opts), opts);
}

// ---------------------------------------------------------------------------
// Experiment 3: LPV-ARX identification
// ---------------------------------------------------------------------------

struct Experiment3Config {
  int runs = 20;
  std::uint64_t seed = 1;
  LpvSpec lpv{};
  MethodSuiteConfig suite;
  bool record_timings = true;

  static Experiment3Config from_ini(const IniConfig& ini, const RunnerOptions& opts) {
    Experiment3Config cfg;
    cfg.runs = static_cast<int>(ini.get_int("experiment3", "runs", 20));
    cfg.seed = static_cast<std::uint64_t>(ini.get_int("experiment3", "seed", 1));
    if (opts.seed_override) cfg.seed = *opts.seed_override;
    cfg.lpv.n = ini.get_int("experiment3", "n_train", 50);
    cfg.lpv.n_test = ini.get_int("experiment3", "n_test", 3000);
    cfg.lpv.snr_db = ini.get_double("experiment3", "snr_db", 14.0);
    cfg.lpv.n_a = static_cast<int>(ini.get_int("experiment3", "n_a", 30));
    cfg.lpv.n_b = static_cast<int>(ini.get_int("experiment3", "n_b", 30));
    cfg.lpv.n_alpha = static_cast<int>(ini.get_int("experiment3", "n_alpha", 8));
    cfg.record_timings = ini.get_bool("output", "record_timings", true);

    cfg.suite.methods = ini.get_string_list("experiment3", "methods",
                                            {"ols", "ridge", "lasso", "enet", "multiridge"});
    cfg.suite.folds = static_cast<int>(ini.get_int("experiment3", "folds", 5));
    cfg.suite.record_timings = cfg.record_timings;
    cfg.suite.threads = 1;  // runs are parallelized instead
    Experiment1Config::load_search_specs(ini, cfg.suite);
    cfg.suite.optim.learning_rate = ini.get_double("multiridge", "learning_rate", 350.0);
    cfg.suite.optim.decay = ini.get_double("multiridge", "decay", 0.999);
    cfg.suite.optim.epochs = static_cast<int>(ini.get_int("multiridge", "epochs", 300));
    cfg.suite.optim.init = Experiment1Config::read_init(ini, "lasso_informed");
    cfg.suite.gamma_set = ini.get_double_list("multiridge", "gamma_set", {0.5, 1.0, 2.0});
    cfg.suite.mu = ini.get_double("multiridge", "mu", 0.0);
    return cfg;
  }
};

struct Experiment3Summary {
  std::map<std::string, double> medians;
  std::map<std::string, double> reference_medians;
  std::string csv_path;
  std::string summary_path;
};

inline Experiment3Summary run_experiment3(const Experiment3Config& cfg,
                                          const RunnerOptions& opts) {
  namespace ed = exp_detail;
  const std::string csv_path = opts.out_dir + "/experiment3_results.csv";
  const std::string summary_path = opts.out_dir + "/experiment3_summary.json";
  const std::string records_path = opts.out_dir + "/experiment3_records.json";
  const std::string header = "run,method,r2,status";
  auto cache = ed::CsvCache::load(csv_path, header, 2);
  auto archive = ed::RecordArchive::load(records_path);

  std::vector<std::string> ordered_keys;
  std::vector<int> missing_runs;
  for (int run = 0; run < cfg.runs; ++run) {
    bool missing = false;
    for (const auto& method : cfg.suite.methods) {
      const std::string key = std::to_string(run) + "|" + method + "|";
      ordered_keys.push_back(key);
      missing = missing || !cache.has(key);
    }
    if (missing) missing_runs.push_back(run);
  }

  struct RunOutput {
    int run;
    MethodSuiteResult result;
    std::vector<std::uint64_t> seeds;
  };
  std::vector<RunOutput> outputs(missing_runs.size());
  parallel_for(missing_runs.size(), opts.threads, [&](std::size_t i) {
    const int run = missing_runs[i];
    LpvSpec spec = cfg.lpv;
    spec.seed = ed::mix_seed(cfg.seed, static_cast<std::uint64_t>(run));
    auto [train, test] = simulate_lpv(spec);
    MethodSuiteConfig suite = cfg.suite;
    suite.plan_seed = ed::mix_seed(spec.seed, 1);
    suite.enet_search.seed = ed::mix_seed(spec.seed, 2);
    outputs[i] = {run, run_method_suite(train, test, suite), {spec.seed, suite.plan_seed}};
  });

  for (const auto& out : outputs) {
    ExperimentRecord record;
    record.experiment_id = "experiment3/run=" + std::to_string(out.run);
    record.config = {{"n_train", cfg.lpv.n},       {"n_test", cfg.lpv.n_test},
                     {"snr_db", cfg.lpv.snr_db},   {"n_a", cfg.lpv.n_a},
                     {"n_b", cfg.lpv.n_b},         {"n_alpha", cfg.lpv.n_alpha}};
    record.seeds = out.seeds;
    record.methods = out.result.methods;
    record.optimizer_history = out.result.optimizer_history;
    archive.records[record.experiment_id] = record;
    for (const auto& outcome : out.result.methods) {
      std::ostringstream line;
      line << out.run << "," << outcome.method << "," << ed::fmt(outcome.r2) << ","
           << ed::sanitize(outcome.status);
      cache.put(std::to_string(out.run) + "|" + outcome.method + "|", line.str());
    }
  }

  cache.write(csv_path, ordered_keys);
  archive.save(records_path);

  Experiment3Summary summary;
  summary.csv_path = csv_path;
  summary.summary_path = summary_path;
  summary.reference_medians = {{"ols", 0.18},  {"ridge", 0.21},      {"lasso", 0.88},
                               {"enet", 0.86}, {"multiridge", 0.91}};
  std::map<std::string, std::vector<double>> grouped;
  for (const auto& key : ordered_keys) {
    auto fields = ed::split_csv(cache.rows.at(key));
    if (fields.at(3) != "ok") continue;
    grouped[fields.at(1)].push_back(std::stod(fields.at(2)));
  }
  ed::json j;
  j["experiment"] = "experiment3";
  j["version"] = kVersion;
  j["runs"] = cfg.runs;
  ed::json medians = ed::json::object();
  for (const auto& [method, values] : grouped) {
    const double median = ed::percentile(values, 50.0);
    summary.medians[method] = median;
    medians[method] = median;
  }
  j["medians"] = std::move(medians);
  ed::json reference = ed::json::object();
  for (const auto& [method, value] : summary.reference_medians) reference[method] = value;
  j["reference_medians"] = std::move(reference);
  ed::write_text(summary_path, j.dump(2) + "\n");
  return summary;
}

inline Experiment3Summary run_experiment3(const IniConfig& ini, const RunnerOptions& opts) {
  return run_experiment3(Experiment3Config::from_ini(ini, opts), opts);
}

}  // namespace multiridge
