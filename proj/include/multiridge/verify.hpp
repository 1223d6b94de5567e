#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "multiridge/baselines.hpp"
#include "multiridge/criterion.hpp"
#include "multiridge/datagen.hpp"
#include "multiridge/finite_diff.hpp"
#include "multiridge/folds.hpp"
#include "multiridge/metrics.hpp"
#include "multiridge/optimizer.hpp"
#include "multiridge/solver.hpp"

namespace multiridge {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  int agreement_instances = 50;
  int threads = 1;
  /// Test hook: perturbs analytic gradients before the agreement check so
  /// the failure path (named instance and coordinate) can be exercised.
  std::function<void(VectorXd&)> gradient_hook;
};

namespace verify_detail {

inline MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

struct AgreementInstance {
  Dataset<double> data;
  FoldPlan plan = partition_folds(10, 2, 0);
  HyperParams<double> hp;
  std::uint64_t seed = 0;
};

/// Sampling rules of the agreement suite: D <= 50, M <= 5, K = 5,
/// N <= 200, lambda entries in [-2, 2] excluding (-0.05, 0.05).
inline AgreementInstance agreement_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AgreementInstance inst;
  inst.seed = seed;
  const Index d = 2 + static_cast<Index>(rng() % 49);   // 2..50
  const Index m = 1 + static_cast<Index>(rng() % 5);    // 1..5
  const Index n = 50 + static_cast<Index>(rng() % 151); // 50..200
  inst.data.X = gaussian(n, d, rng);
  inst.data.Y = gaussian(n, m, rng);
  inst.plan = partition_folds(n, 5, seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> mag(0.05, 2.0);
  inst.hp.lambda = VectorXd(d);
  for (Index j = 0; j < d; ++j) {
    inst.hp.lambda[j] = (rng() & 1 ? 1.0 : -1.0) * mag(rng);
  }
  return inst;
}

/// Empty when every coordinate agrees; otherwise the worst offender.
inline std::optional<std::string> agreement_failure(const VectorXd& analytic,
                                                    const VectorXd& numeric, std::uint64_t seed,
                                                    double rel = 1e-6, double abs = 1e-9) {
  std::optional<std::string> worst;
  double worst_excess = 0.0;
  for (Index j = 0; j < analytic.size(); ++j) {
    const double denom = std::max(std::abs(analytic[j]), std::abs(numeric[j]));
    const double err = std::abs(analytic[j] - numeric[j]);
    const double allowed = std::max(rel * denom, abs);
    if (err > allowed && err - allowed > worst_excess) {
      worst_excess = err - allowed;
      std::ostringstream msg;
      msg << "instance seed " << seed << ", coordinate " << j << ": analytic " << analytic[j]
          << " vs finite-difference " << numeric[j];
      worst = msg.str();
    }
  }
  return worst;
}

enum class AgreementMode { Base, Augmented, QTerm };

inline PropertyResult gradient_agreement(const VerifyOptions& opts, AgreementMode mode,
                                         const std::string& name) {
  PropertyResult result{name, true, ""};
  for (int i = 0; i < opts.agreement_instances; ++i) {
    auto inst = agreement_instance(1000 + static_cast<std::uint64_t>(i));
    if (mode == AgreementMode::Augmented) inst.hp.gamma_set = {0.5, 1.0, 2.0};
    if (mode == AgreementMode::QTerm) inst.hp.mu = 0.3;
    CvEngine<double> engine(inst.data, inst.plan);
    engine.set_threads(opts.threads);

    VectorXd analytic;
    std::function<double(const VectorXd&)> objective;
    if (mode == AgreementMode::QTerm) {
      analytic = engine.q_term(inst.hp).grad;
      objective = [&](const VectorXd& lam) {
        auto hp = inst.hp;
        hp.lambda = lam;
        return engine.q_term(hp).value;
      };
    } else {
      analytic = engine.gradient(inst.hp).grad;
      objective = [&](const VectorXd& lam) {
        auto hp = inst.hp;
        hp.lambda = lam;
        return engine.evaluate(hp).value;
      };
    }
    if (opts.gradient_hook) opts.gradient_hook(analytic);
    VectorXd numeric = finite_diff_grad(objective, inst.hp.lambda, 1e-6);
    if (auto failure = agreement_failure(analytic, numeric, inst.seed)) {
      result.passed = false;
      result.detail = *failure;
      return result;
    }
  }
  std::ostringstream detail;
  detail << opts.agreement_instances << " instances within 1e-6 relative";
  result.detail = detail.str();
  return result;
}

template <typename Check>
PropertyResult run_property(const std::string& name, Check&& check) {
  PropertyResult result{name, false, ""};
  try {
    result = check();
    result.name = name;
  } catch (const std::exception& err) {
    result.passed = false;
    result.detail = std::string("exception: ") + err.what();
  }
  return result;
}

}  // namespace verify_detail

/// Executes the library's invariant suite and reports one line per
/// property. Everything is deterministic; `opts.gradient_hook` exists so a
/// negative control can prove the agreement check actually bites.
inline std::vector<PropertyResult> run_property_suite(const VerifyOptions& opts = {}) {
  namespace vd = verify_detail;
  std::vector<PropertyResult> results;

  results.push_back(vd::run_property("solver normal-equation residual", [&] {
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      std::mt19937_64 rng(2000 + i);
      const Index d = 2 + static_cast<Index>(rng() % 40);
      const Index n = d + 5 + static_cast<Index>(rng() % 100);
      MatrixXd x = vd::gaussian(n, d, rng);
      MatrixXd y = vd::gaussian(n, 2, rng);
      VectorXd lambda = vd::gaussian(d, 1, rng).col(0);
      const double gamma = 1.0 + 0.5 * double(i % 3);
      MatrixXd theta = solve_tikhonov(x, y, lambda, gamma);
      MatrixXd w = x.transpose() * x;
      w.diagonal() += (double(n) * gamma * gamma) * lambda.array().square().matrix();
      MatrixXd xty = x.transpose() * y;
      worst = std::max(worst, (w * theta - xty).norm() / xty.norm());
    }
    std::ostringstream detail;
    detail << "100 solves, max relative residual " << worst;
    return PropertyResult{"", worst <= 1e-8, detail.str()};
  }));

  results.push_back(vd::run_property("solver sign invariance", [&] {
    std::mt19937_64 rng(3000);
    MatrixXd x = vd::gaussian(60, 9, rng);
    MatrixXd y = vd::gaussian(60, 2, rng);
    VectorXd lambda = vd::gaussian(9, 1, rng).col(0);
    MatrixXd a = solve_tikhonov(x, y, lambda);
    MatrixXd b = solve_tikhonov(x, y, VectorXd(lambda.cwiseAbs()));
    return PropertyResult{"", a == b, "solve(lambda) == solve(|lambda|) exactly"};
  }));

  results.push_back(vd::run_property("solver ridge equivalence", [&] {
    std::mt19937_64 rng(3100);
    MatrixXd x = vd::gaussian(70, 8, rng);
    MatrixXd y = vd::gaussian(70, 2, rng);
    const double c = 0.7;
    MatrixXd uniform = solve_tikhonov(x, y, VectorXd(VectorXd::Constant(8, c)));
    MatrixXd ridge = ridge_fit(x, y, 70.0 * c * c);
    const double rel = (uniform - ridge).norm() / ridge.norm();
    std::ostringstream detail;
    detail << "relative difference " << rel;
    return PropertyResult{"", rel <= 1e-10, detail.str()};
  }));

  results.push_back(vd::run_property("solver permutation equivariance", [&] {
    std::mt19937_64 rng(3200);
    const Index d = 7;
    MatrixXd x = vd::gaussian(50, d, rng);
    MatrixXd y = vd::gaussian(50, 1, rng);
    VectorXd lambda = vd::gaussian(d, 1, rng).col(0);
    MatrixXd theta = solve_tikhonov(x, y, lambda);
    std::vector<Index> perm{4, 2, 6, 0, 3, 1, 5};
    MatrixXd xp(50, d);
    VectorXd lp(d);
    for (Index j = 0; j < d; ++j) {
      xp.col(j) = x.col(perm[static_cast<std::size_t>(j)]);
      lp[j] = lambda[perm[static_cast<std::size_t>(j)]];
    }
    MatrixXd tp = solve_tikhonov(xp, y, lp);
    double worst = 0.0;
    for (Index j = 0; j < d; ++j) {
      worst = std::max(worst,
                       (tp.row(j) - theta.row(perm[static_cast<std::size_t>(j)])).norm());
    }
    std::ostringstream detail;
    detail << "max row difference " << worst;
    return PropertyResult{"", worst <= 1e-10 * (1.0 + theta.norm()), detail.str()};
  }));

  results.push_back(vd::run_property("solver scalar monotone shrinkage", [&] {
    std::mt19937_64 rng(3300);
    MatrixXd x = vd::gaussian(30, 1, rng);
    MatrixXd y = vd::gaussian(30, 1, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double lam = 0.0; lam <= 10.0; lam += 0.25) {
      const double cur = std::abs(solve_tikhonov(x, y, VectorXd(VectorXd::Constant(1, lam)))(0, 0));
      if (cur > prev + 1e-15) return PropertyResult{"", false, "shrinkage not monotone"};
      prev = cur;
    }
    return PropertyResult{"", true, "|theta| non-increasing in |lambda|"};
  }));

  results.push_back(
      vd::gradient_agreement(opts, vd::AgreementMode::Base, "gradient agreement (plain)"));
  results.push_back(vd::gradient_agreement(opts, vd::AgreementMode::Augmented,
                                           "gradient agreement (gamma augmentation)"));
  results.push_back(
      vd::gradient_agreement(opts, vd::AgreementMode::QTerm, "gradient agreement (Q term)"));

  results.push_back(vd::run_property("origin stationarity", [&] {
    for (int i = 0; i < 10; ++i) {
      std::mt19937_64 rng(4000 + i);
      const Index d = 2 + static_cast<Index>(rng() % 15);
      const Index n = 5 * d + 25;
      Dataset<double> data;
      data.X = vd::gaussian(n, d, rng);
      data.Y = vd::gaussian(n, 2, rng);
      auto plan = partition_folds(n, 5, 4000 + i);
      HyperParams<double> hp;
      hp.lambda = VectorXd::Zero(d);
      auto report = grad_lambda(data, plan, hp);
      for (Index j = 0; j < d; ++j) {
        if (report.grad[j] != 0.0) {
          std::ostringstream detail;
          detail << "instance " << i << " coordinate " << j << " gradient " << report.grad[j];
          return PropertyResult{"", false, detail.str()};
        }
      }
    }
    return PropertyResult{"", true, "gradient at lambda = 0 is exactly zero on 10 instances"};
  }));

  results.push_back(vd::run_property("criterion evenness", [&] {
    auto inst = vd::agreement_instance(77);
    auto base = eval_criterion(inst.data, inst.plan, inst.hp);
    auto hp = inst.hp;
    hp.lambda = -hp.lambda;
    auto mirrored = eval_criterion(inst.data, inst.plan, hp);
    const double rel = std::abs(mirrored.value - base.value) / std::abs(base.value);
    std::ostringstream detail;
    detail << "relative change under sign flip " << rel;
    return PropertyResult{"", rel <= 1e-12, detail.str()};
  }));

  results.push_back(vd::run_property("criterion fold-order independence", [&] {
    auto inst = vd::agreement_instance(78);
    CvEngine<double> engine(inst.data, inst.plan);
    auto base = engine.gradient(inst.hp);
    CvEngine<double> permuted(inst.data, inst.plan.reordered({4, 2, 0, 3, 1}));
    auto moved = permuted.gradient(inst.hp);
    const double value_rel = std::abs(moved.value - base.value) / std::abs(base.value);
    double grad_rel = 0.0;
    for (Index j = 0; j < base.grad.size(); ++j) {
      grad_rel = std::max(grad_rel, std::abs(moved.grad[j] - base.grad[j]) /
                                        std::max(1.0, std::abs(base.grad[j])));
    }
    std::ostringstream detail;
    detail << "value " << value_rel << ", gradient " << grad_rel;
    return PropertyResult{"", value_rel <= 1e-12 && grad_rel <= 1e-12, detail.str()};
  }));

  results.push_back(vd::run_property("criterion base-case reduction", [&] {
    auto inst = vd::agreement_instance(79);
    CvEngine<double> engine(inst.data, inst.plan);
    auto defaulted = engine.gradient(inst.hp);
    auto hp = inst.hp;
    hp.gamma_set = {1.0};
    auto explicit_unit = engine.gradient(hp);
    const bool same = defaulted.value == explicit_unit.value &&
                      defaulted.grad == explicit_unit.grad &&
                      defaulted.per_fold_losses == explicit_unit.per_fold_losses;
    return PropertyResult{"", same, "gamma_set {1} reduces bit-for-bit"};
  }));

  results.push_back(vd::run_property("full-matrix gradient diagonal consistency", [&] {
    auto inst = vd::agreement_instance(80);
    inst.hp.gamma_set = {0.5, 1.0, 2.0};
    CvEngine<double> engine(inst.data, inst.plan);
    auto diag = engine.gradient(inst.hp);
    auto full = engine.gradient_full(inst.hp);
    const Index d = inst.hp.lambda.size();
    Eigen::Map<const MatrixXd> shaped(full.grad.data(), d, d);
    for (Index j = 0; j < d; ++j) {
      if (shaped(j, j) != diag.grad[j]) {
        std::ostringstream detail;
        detail << "coordinate " << j << " differs";
        return PropertyResult{"", false, detail.str()};
      }
    }
    return PropertyResult{"", true, "diagonal extraction equals grad_lambda bit-for-bit"};
  }));

  results.push_back(vd::run_property("lasso KKT conditions", [&] {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      std::mt19937_64 rng(5000 + i);
      const Index d = 3 + static_cast<Index>(rng() % 20);
      const Index n = 20 + static_cast<Index>(rng() % 80);
      MatrixXd x = vd::gaussian(n, d, rng);
      MatrixXd y = vd::gaussian(n, 1, rng);
      const double alpha = 0.02 + 0.1 * double(i % 5);
      auto fit = lasso_fit(x, y, alpha);
      worst = std::max(worst, static_cast<double>(kkt_violation(x, y, fit.theta, alpha, 0.0)));
    }
    std::ostringstream detail;
    detail << "50 instances, max violation " << worst;
    return PropertyResult{"", worst <= 1e-4, detail.str()};
  }));

  results.push_back(vd::run_property("coordinate descent monotonicity", [&] {
    std::mt19937_64 rng(5100);
    MatrixXd x = vd::gaussian(40, 8, rng);
    MatrixXd y = vd::gaussian(40, 1, rng);
    const double alpha = 0.07, ratio = 0.6;
    auto objective = [&](const MatrixXd& theta) {
      return (y - x * theta).squaredNorm() / 80.0 + alpha * ratio * theta.cwiseAbs().sum() +
             0.5 * alpha * (1.0 - ratio) * theta.squaredNorm();
    };
    MatrixXd warm = MatrixXd::Zero(8, 1);
    double prev = objective(warm);
    for (int sweep = 0; sweep < 10; ++sweep) {
      warm = coordinate_descent(x, y, alpha * ratio, alpha * (1.0 - ratio), 0.0, 1, &warm).theta;
      const double cur = objective(warm);
      if (cur > prev + 1e-14) return PropertyResult{"", false, "objective increased"};
      prev = cur;
    }
    return PropertyResult{"", true, "objective non-increasing over 10 sweeps"};
  }));

  results.push_back(vd::run_property("r2 affine invariance", [&] {
    std::mt19937_64 rng(5200);
    MatrixXd y = vd::gaussian(40, 2, rng);
    MatrixXd pred = y + 0.2 * vd::gaussian(40, 2, rng);
    const double base = r2_score(y, pred);
    MatrixXd ys = (2.5 * y.array() + 1.0).matrix();
    MatrixXd ps = (2.5 * pred.array() + 1.0).matrix();
    const double moved = r2_score(ys, ps);
    std::ostringstream detail;
    detail << "difference " << std::abs(moved - base);
    return PropertyResult{"", std::abs(moved - base) <= 1e-12, detail.str()};
  }));

  results.push_back(vd::run_property("fold plan determinism", [&] {
    auto a = partition_folds(173, 5, 31);
    auto b = partition_folds(173, 5, 31);
    for (int k = 0; k < 5; ++k) {
      if (a.validation_indices(k) != b.validation_indices(k)) {
        return PropertyResult{"", false, "same (N, K, seed) produced different folds"};
      }
    }
    return PropertyResult{"", true, "reconstruction from (N, K, seed) is deterministic"};
  }));

  results.push_back(vd::run_property("sparse generator support count", [&] {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SparseLinearSpec spec;
      spec.d = 64;
      spec.n_train = 100;
      spec.n_test = 10;
      spec.informative_fraction = 0.5;
      spec.seed = seed;
      auto [train, test] = gen_sparse_linear(spec);
      const Index nonzero = (train.true_theta.array() != 0.0).count();
      if (nonzero != 32) {
        std::ostringstream detail;
        detail << "seed " << seed << ": " << nonzero << " nonzero rows, expected 32";
        return PropertyResult{"", false, detail.str()};
      }
    }
    return PropertyResult{"", true, "nonzero support is floor(D * fraction) on 5 seeds"};
  }));

  results.push_back(vd::run_property("lpv noise-free recovery", [&] {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(0.0, 1.0);
      std::normal_distribution<double> sched(0.0, std::sqrt(std::numbers::pi));
      const int n = 300;
      VectorXd u(n), p(n);
      for (int k = 0; k < n; ++k) {
        u[k] = g(rng);
        p[k] = sched(rng);
      }
      VectorXd y = simulate_lpv_response(u, p, VectorXd(VectorXd::Zero(n)), seed);
      MatrixXd features(n - 3, 4);
      MatrixXd target(n - 3, 1);
      for (int k = 3; k < n; ++k) {
        const double s = std::sin(p[k]), c = std::cos(p[k]);
        features(k - 3, 0) = c * y[k - 2];
        features(k - 3, 1) = s * s * y[k - 3];
        features(k - 3, 2) = (c - s) * u[k - 2];
        features(k - 3, 3) = s * u[k - 3];
        target(k - 3, 0) = y[k];
      }
      MatrixXd theta = ols_fit(features, target);
      VectorXd truth(4);
      truth << 0.5, -0.1, 1.0, 3.0;
      if ((theta.col(0) - truth).cwiseAbs().maxCoeff() > 1e-8) {
        std::ostringstream detail;
        detail << "seed " << seed << " recovery error "
               << (theta.col(0) - truth).cwiseAbs().maxCoeff();
        return PropertyResult{"", false, detail.str()};
      }
    }
    return PropertyResult{"", true, "true coefficients recovered to 1e-8 on 10 seeds"};
  }));

  results.push_back(vd::run_property("optimizer schedule and descent sanity", [&] {
    std::mt19937_64 rng(5300);
    Dataset<double> data;
    data.X = vd::gaussian(80, 6, rng);
    MatrixXd coef = vd::gaussian(6, 1, rng);
    data.Y = data.X * coef + 2.0 * vd::gaussian(80, 1, rng);
    auto plan = partition_folds(80, 5, 53);
    HyperParams<double> hp;
    hp.lambda = VectorXd::Ones(6);
    OptimConfig cfg;
    cfg.learning_rate = 35.0;  // paper settings scaled by 1/10
    cfg.decay = 0.999;
    cfg.epochs = 120;
    auto result = optimize(data, plan, hp, cfg);
    for (int t = 0; t < cfg.epochs; ++t) {
      if (result.history[static_cast<std::size_t>(t)].lr != 35.0 * std::pow(0.999, t)) {
        return PropertyResult{"", false, "learning-rate schedule mismatch"};
      }
    }
    CvEngine<double> engine(data, plan);
    const double initial = engine.evaluate(hp).value;
    HyperParams<double> final_hp = hp;
    final_hp.lambda = result.lambda_star;
    const double final_value = engine.evaluate(final_hp).value;
    std::ostringstream detail;
    detail << "E " << initial << " -> " << final_value;
    return PropertyResult{"", final_value <= initial, detail.str()};
  }));

  return results;
}

}  // namespace multiridge
