#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "multiridge/criterion.hpp"
#include "multiridge/solver.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Initialization strategy for the hyperparameter vector.
struct InitSpec {
  enum class Kind { Identity, Constant, LassoInformed };

  Kind kind = Kind::Identity;
  double value = 1.0;  // Constant
  double high = 10.0;  // LassoInformed: rows estimated zero
  double low = 1.0;    // LassoInformed: rows estimated nonzero

  static InitSpec identity() { return {}; }
  static InitSpec constant(double c) { return {Kind::Constant, c, 10.0, 1.0}; }
  static InitSpec lasso_informed(double high = 10.0, double low = 1.0) {
    return {Kind::LassoInformed, 1.0, high, low};
  }
};

/// Builds the initial lambda. The identity strategy is the all-ones vector
/// (the diagonal of I_D); lasso_informed gives a 10x higher penalty to
/// coefficients a LASSO pre-fit estimated as exactly zero across all
/// targets.
template <typename Scalar = double>
Vector<Scalar> init_lambda(const InitSpec& spec, Index d,
                           const Matrix<Scalar>* lasso_theta = nullptr) {
  if (d < 1) throw InvalidInputError("init_lambda: feature count must be positive");
  switch (spec.kind) {
    case InitSpec::Kind::Identity:
      return Vector<Scalar>::Ones(d);
    case InitSpec::Kind::Constant:
      return Vector<Scalar>::Constant(d, Scalar(spec.value));
    case InitSpec::Kind::LassoInformed: {
      if (lasso_theta == nullptr) {
        throw InvalidInputError("lasso_informed initialization requires a lasso coefficient matrix");
      }
      if (lasso_theta->rows() != d) {
        throw InvalidInputError("lasso_informed initialization: coefficient row count mismatch");
      }
      Vector<Scalar> lambda(d);
      for (Index j = 0; j < d; ++j) {
        const bool all_zero = (lasso_theta->row(j).array() == Scalar(0)).all();
        lambda[j] = all_zero ? Scalar(spec.high) : Scalar(spec.low);
      }
      return lambda;
    }
  }
  throw InvalidInputError("init_lambda: unknown strategy");
}

struct OptimConfig {
  double learning_rate = 350.0;
  double decay = 0.999;
  int epochs = 300;
  InitSpec init{};
  bool record_history = true;

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw InvalidInputError("learning rate must be finite and nonnegative");
    }
    if (!(decay > 0.0 && decay <= 1.0)) throw InvalidInputError("decay must lie in (0, 1]");
    if (epochs < 1) throw InvalidInputError("epoch count must be at least 1");
  }
};

template <typename Scalar = double>
struct EpochStat {
  Scalar value;      // objective at the epoch's starting iterate (E, or E + Q)
  Scalar grad_norm;  // Euclidean norm of the descended gradient
  Scalar lr;         // learning rate used for the step
};

template <typename Scalar = double>
struct OptimResult {
  Vector<Scalar> lambda_star;
  std::vector<EpochStat<Scalar>> history;
  Matrix<Scalar> theta_final;  // refit on all training rows with lambda_star, gamma = 1
  int epochs_run = 0;
};

/// Full-batch gradient descent on the cross-validation criterion:
///   lambda_{t+1} = lambda_t - lr_t * g_t,  lr_t = lr_0 * decay^t,
/// with g_t the analytic gradient of E (plus the Q term when mu > 0).
/// After the fixed epoch budget the model is refit on the complete
/// training data with gamma = 1; Q affects hyperparameter selection only.
///
/// hp0.lambda supplies the starting point; when empty it is derived from
/// cfg.init (lasso_informed needs an explicit lambda and is rejected here).
template <typename Scalar = double>
OptimResult<Scalar> optimize(const Dataset<Scalar>& data, const FoldPlan& plan,
                             const HyperParams<Scalar>& hp0, const OptimConfig& cfg,
                             int threads = 1) {
  cfg.validate();
  CvEngine<Scalar> engine(data, plan);
  engine.set_threads(threads);

  HyperParams<Scalar> hp = hp0;
  if (hp.lambda.size() == 0) {
    if (cfg.init.kind == InitSpec::Kind::LassoInformed) {
      throw InvalidInputError(
          "optimize: lasso_informed initialization needs hp0.lambda built via init_lambda");
    }
    hp.lambda = init_lambda<Scalar>(cfg.init, data.n_features());
  }
  hp.validate(data.n_features());

  OptimResult<Scalar> result;
  if (cfg.record_history) result.history.reserve(static_cast<std::size_t>(cfg.epochs));

  // Iterates beyond this scale overflow lambda^2 inside the solver; treat
  // them as divergence rather than a singular system.
  const Scalar runaway = std::sqrt(std::numeric_limits<Scalar>::max()) / Scalar(1e6);
  Vector<Scalar> last_finite = hp.lambda;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Scalar lr = Scalar(cfg.learning_rate) * Scalar(std::pow(cfg.decay, epoch));
    GradientReport<Scalar> report;
    bool finite = hp.lambda.allFinite() && hp.lambda.cwiseAbs().maxCoeff() < runaway;
    if (finite) {
      report = engine.descent_gradient(hp);
      finite = std::isfinite(static_cast<double>(report.value)) && report.grad.allFinite();
    }
    if (!finite) {
      std::ostringstream msg;
      msg << "gradient descent diverged at epoch " << epoch
          << " (non-finite criterion or gradient)";
      std::vector<double> lam(last_finite.data(), last_finite.data() + last_finite.size());
      throw DivergenceError(msg.str(), epoch, std::move(lam));
    }
    last_finite = hp.lambda;
    if (cfg.record_history) result.history.push_back({report.value, report.grad.norm(), lr});
    hp.lambda -= lr * report.grad;
    result.epochs_run = epoch + 1;
  }

  if (!hp.lambda.allFinite() || hp.lambda.cwiseAbs().maxCoeff() >= runaway) {
    std::vector<double> lam(last_finite.data(), last_finite.data() + last_finite.size());
    throw DivergenceError("gradient descent diverged on the final step", cfg.epochs,
                          std::move(lam));
  }
  result.lambda_star = hp.lambda;
  result.theta_final = solve_tikhonov(data.X, data.Y, hp.lambda, Scalar(1), "final refit");
  return result;
}

}  // namespace multiridge
