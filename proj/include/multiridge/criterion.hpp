#pragma once

#include <atomic>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "multiridge/folds.hpp"
#include "multiridge/parallel.hpp"
#include "multiridge/solver.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Outcome of a criterion / gradient evaluation.
///
/// `value` is the evaluated objective: E for plain runs, E + Q when mu > 0,
/// or Q alone for q_term reports. For criterion reports, value equals the
/// mean of per_fold_losses plus the sum of per_fold_q. `grad` stays empty
/// for value-only evaluations; it has length D for gradients with respect
/// to lambda and D^2 (column-major vec) for full-matrix gradients.
template <typename Scalar = double>
struct GradientReport {
  Scalar value{0};
  Vector<Scalar> grad;
  Vector<Scalar> per_fold_losses;
  Vector<Scalar> per_fold_q;
};

/// Per-fold coefficient estimates with their validation residuals, plus
/// the refit on the complete training data.
template <typename Scalar = double>
struct FitState {
  std::vector<Matrix<Scalar>> theta_per_fold;      // K matrices, D x M
  Matrix<Scalar> theta_full;                       // D x M
  std::vector<Matrix<Scalar>> residuals_per_fold;  // K matrices, N_V x M
};

/// Cross-validation criterion engine.
///
/// Caches per-fold submatrices and Gram products once, then serves
/// repeated evaluations of the criterion
///
///   E = (1/K) sum_k (1/|Gamma|) sum_{gamma in Gamma}
///         (1/(2 N_V)) || Y_k - X_k theta_k(gamma) ||_F^2,
///   theta_k(gamma) = (X'_{\k} X_{\k} + N_T gamma^2 Lambda^2)^{-1} X'_{\k} Y_{\k},
///
/// and of its analytic gradient with respect to lambda. Per (fold, gamma)
/// work items are independent; results are always combined in fixed
/// (fold, gamma) order so output does not depend on dispatch.
template <typename Scalar = double>
class CvEngine {
 public:
  CvEngine(const Dataset<Scalar>& data, const FoldPlan& plan) : plan_(plan) {
    data.validate();
    if (plan.n_samples() != data.n_samples()) {
      throw InvalidInputError("fold plan was built for a different sample count");
    }
    d_ = data.n_features();
    m_ = data.n_targets();
    full_x_ = data.X;
    full_y_ = data.Y;
    folds_.resize(plan.fold_count());
    for (int k = 0; k < plan.fold_count(); ++k) {
      Fold& f = folds_[k];
      f.x_train = take_rows(data.X, plan.train_indices(k));
      f.y_train = take_rows(data.Y, plan.train_indices(k));
      f.x_val = take_rows(data.X, plan.validation_indices(k));
      f.y_val = take_rows(data.Y, plan.validation_indices(k));
      f.gram = Matrix<Scalar>::Zero(d_, d_);
      f.gram.template selfadjointView<Eigen::Lower>().rankUpdate(f.x_train.transpose());
      f.gram.template triangularView<Eigen::StrictlyUpper>() = f.gram.transpose();
      f.xty = f.x_train.transpose() * f.y_train;
    }
  }

  /// Criterion value only (E, plus Q when mu > 0).
  GradientReport<Scalar> evaluate(const HyperParams<Scalar>& hp) const {
    return run(hp, GradKind::None, QGrad::Exclude);
  }

  /// Analytic gradient of E with respect to lambda. `value` matches
  /// evaluate() on the same inputs (shared computation); the gradient
  /// excludes the Q term even when mu > 0.
  GradientReport<Scalar> gradient(const HyperParams<Scalar>& hp) const {
    return run(hp, GradKind::Diagonal, QGrad::Exclude);
  }

  /// Gradient of E with respect to the full hyperparameter matrix, as a
  /// column-major vec of length D^2. Its diagonal equals gradient()'s
  /// output exactly.
  GradientReport<Scalar> gradient_full(const HyperParams<Scalar>& hp) const {
    return run(hp, GradKind::Full, QGrad::Exclude);
  }

  /// Q = (mu/2) sum_k ||Lambda theta_k||_F^2 and its gradient. Requires the
  /// plain mode (gamma_set == {1}); mu == 0 yields zeros.
  GradientReport<Scalar> q_term(const HyperParams<Scalar>& hp) const {
    hp.validate(d_);
    if (!(hp.gamma_set.size() == 1 && hp.gamma_set.front() == Scalar(1))) {
      throw InvalidInputError("the validation regularizer requires gamma_set == {1}");
    }
    GradientReport<Scalar> full = run(hp, GradKind::Diagonal, QGrad::Only);
    return full;
  }

  /// Gradient of the descended objective: E + Q when mu > 0, else E.
  /// One factorization per (fold, gamma) serves both parts.
  GradientReport<Scalar> descent_gradient(const HyperParams<Scalar>& hp) const {
    return run(hp, GradKind::Diagonal, QGrad::Include);
  }

  /// Per-fold solves at gamma = 1 plus the full-data refit.
  FitState<Scalar> fit(const HyperParams<Scalar>& hp) const {
    hp.validate(d_);
    FitState<Scalar> state;
    state.theta_per_fold.resize(folds_.size());
    state.residuals_per_fold.resize(folds_.size());
    for (std::size_t k = 0; k < folds_.size(); ++k) {
      const Fold& f = folds_[k];
      TikhonovFactor<Scalar> factor(
          detail::regularized_gram(f.gram, hp.lambda, Scalar(1), f.x_train.rows()),
          fold_context(static_cast<int>(k), Scalar(1)));
      state.theta_per_fold[k] = factor.solve(f.xty);
      if (factor.used_fallback()) ++fallback_count_;
      state.residuals_per_fold[k] = f.x_val * state.theta_per_fold[k] - f.y_val;
    }
    state.theta_full = solve_tikhonov(full_x_, full_y_, hp.lambda, Scalar(1), "full refit");
    return state;
  }

  Index n_features() const { return d_; }
  Index n_targets() const { return m_; }
  const FoldPlan& plan() const { return plan_; }

  void set_threads(int threads) { threads_ = threads; }

  /// Number of solves that needed the pivoted-factorization fallback since
  /// construction; nonzero values deserve a warning upstream.
  int fallback_count() const { return fallback_count_.load(); }

 private:
  enum class GradKind { None, Diagonal, Full };
  enum class QGrad { Exclude, Include, Only };

  struct Fold {
    Matrix<Scalar> x_train, y_train, x_val, y_val;
    Matrix<Scalar> gram;  // X'_{\k} X_{\k}
    Matrix<Scalar> xty;   // X'_{\k} Y_{\k}
  };

  struct ItemOut {
    Scalar loss = 0;
    Scalar q = 0;
    Vector<Scalar> grad;    // data-term contribution, already scaled by -(N_T g^2 / N_V)
    Vector<Scalar> grad_q;  // Q contribution, already scaled by mu
    Matrix<Scalar> full;    // full-matrix counterpart of grad
  };

  static Matrix<Scalar> take_rows(const Matrix<Scalar>& m, const std::vector<Index>& rows) {
    Matrix<Scalar> out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
    return out;
  }

  std::string fold_context(int fold, Scalar gamma) const {
    std::ostringstream msg;
    msg << "fold " << fold << ", gamma " << static_cast<double>(gamma);
    return msg.str();
  }

  ItemOut compute_item(int fold, Scalar gamma, const HyperParams<Scalar>& hp, GradKind kind,
                       bool want_q, bool want_q_grad) const {
    const Fold& f = folds_[static_cast<std::size_t>(fold)];
    const Index n_train = f.x_train.rows();
    const Index n_val = f.x_val.rows();
    const Scalar g2 = gamma * gamma;

    TikhonovFactor<Scalar> factor(detail::regularized_gram(f.gram, hp.lambda, gamma, n_train),
                                  fold_context(fold, gamma));
    if (factor.used_fallback()) ++fallback_count_;

    ItemOut out;
    Matrix<Scalar> theta = factor.solve(f.xty);
    Matrix<Scalar> residual = f.x_val * theta - f.y_val;
    out.loss = residual.squaredNorm() / (Scalar(2) * Scalar(n_val));

    if (kind != GradKind::None) {
      Matrix<Scalar> xvr = f.x_val.transpose() * residual;   // D x M
      Matrix<Scalar> solved = factor.solve(xvr);             // A_k X'_k R_k
      const Scalar item_scale = -(Scalar(n_train) * g2 / Scalar(n_val));
      if (kind == GradKind::Full) {
        Matrix<Scalar> b = solved * theta.transpose();  // B_k, D x D
        // The diagonal is recomputed with the same accumulation order as
        // the diagonal-only path so both gradient routes agree exactly.
        b.diagonal() = (solved.array() * theta.array()).rowwise().sum().matrix();
        out.full = item_scale * (hp.lambda.asDiagonal() * b + b * hp.lambda.asDiagonal());
        out.grad = out.full.diagonal();
      } else {
        Vector<Scalar> diag_b = (solved.array() * theta.array()).rowwise().sum().matrix();
        out.grad =
            item_scale * (hp.lambda.array() * diag_b.array() + diag_b.array() * hp.lambda.array())
                             .matrix();
      }
    }

    if (want_q || want_q_grad) {
      Matrix<Scalar> scaled_theta = hp.lambda.asDiagonal() * theta;  // D_k
      out.q = (hp.mu / Scalar(2)) * scaled_theta.squaredNorm();
      if (want_q_grad) {
        Vector<Scalar> lam_sq = hp.lambda.array().square().matrix();
        Matrix<Scalar> solved_q = factor.solve(lam_sq.asDiagonal() * theta);  // A_k Lambda^2 theta
        Vector<Scalar> diag_tt = (theta.array() * theta.array()).rowwise().sum().matrix();
        Vector<Scalar> diag_g = (solved_q.array() * theta.array()).rowwise().sum().matrix();
        out.grad_q = hp.mu * (hp.lambda.array() * diag_tt.array() -
                              Scalar(n_train) * (hp.lambda.array() * diag_g.array() +
                                                 diag_g.array() * hp.lambda.array()))
                                 .matrix();
      }
    }
    return out;
  }

  GradientReport<Scalar> run(const HyperParams<Scalar>& hp, GradKind kind, QGrad qmode) const {
    hp.validate(d_);
    const int k_folds = plan_.fold_count();
    const int n_gamma = static_cast<int>(hp.gamma_set.size());
    const bool with_q = hp.mu > Scalar(0);
    const bool want_q_grad = with_q && qmode != QGrad::Exclude;
    const GradKind item_kind = qmode == QGrad::Only ? GradKind::None : kind;

    std::vector<ItemOut> items(static_cast<std::size_t>(k_folds) * n_gamma);
    parallel_for(items.size(), threads_, [&](std::size_t i) {
      const int fold = static_cast<int>(i) / n_gamma;
      const Scalar gamma = hp.gamma_set[i % n_gamma];
      items[i] = compute_item(fold, gamma, hp, item_kind, with_q, want_q_grad);
    });

    GradientReport<Scalar> report;
    report.per_fold_losses = Vector<Scalar>::Zero(k_folds);
    if (with_q) report.per_fold_q = Vector<Scalar>::Zero(k_folds);

    Vector<Scalar> grad_sum;
    Matrix<Scalar> full_sum;
    if (item_kind == GradKind::Diagonal || item_kind == GradKind::Full) {
      grad_sum = Vector<Scalar>::Zero(d_);
    }
    if (item_kind == GradKind::Full) full_sum = Matrix<Scalar>::Zero(d_, d_);
    Vector<Scalar> grad_q_sum;
    if (want_q_grad) grad_q_sum = Vector<Scalar>::Zero(d_);

    for (int fold = 0; fold < k_folds; ++fold) {
      Scalar fold_loss = 0;
      for (int g = 0; g < n_gamma; ++g) {
        const ItemOut& item = items[static_cast<std::size_t>(fold) * n_gamma + g];
        fold_loss += item.loss;
        if (grad_sum.size() > 0) grad_sum += item.grad;
        if (full_sum.size() > 0) full_sum += item.full;
      }
      report.per_fold_losses[fold] = fold_loss / Scalar(n_gamma);
      if (with_q) {
        // Q is defined for the plain mode only (one gamma per fold).
        report.per_fold_q[fold] = items[static_cast<std::size_t>(fold) * n_gamma].q;
        if (want_q_grad) grad_q_sum += items[static_cast<std::size_t>(fold) * n_gamma].grad_q;
      }
    }

    const Scalar criterion = report.per_fold_losses.sum() / Scalar(k_folds);
    const Scalar q_total = with_q ? report.per_fold_q.sum() : Scalar(0);
    const Scalar reduction = Scalar(1) / (Scalar(k_folds) * Scalar(n_gamma));

    switch (qmode) {
      case QGrad::Exclude:
      case QGrad::Include:
        report.value = with_q ? criterion + q_total : criterion;
        break;
      case QGrad::Only:
        report.value = q_total;
        report.per_fold_losses.resize(0);
        break;
    }

    if (qmode == QGrad::Only) {
      report.grad = want_q_grad ? grad_q_sum : Vector<Scalar>::Zero(d_);
      if (!with_q) report.per_fold_q = Vector<Scalar>::Zero(k_folds);
    } else if (item_kind == GradKind::Full) {
      report.grad = Vector<Scalar>(d_ * d_);
      Eigen::Map<Matrix<Scalar>>(report.grad.data(), d_, d_) = reduction * full_sum;
    } else if (item_kind == GradKind::Diagonal) {
      report.grad = reduction * grad_sum;
      if (qmode == QGrad::Include && want_q_grad) report.grad += grad_q_sum;
    }
    return report;
  }

  FoldPlan plan_;
  std::vector<Fold> folds_;
  Matrix<Scalar> full_x_, full_y_;
  Index d_ = 0, m_ = 0;
  int threads_ = 1;
  mutable std::atomic<int> fallback_count_{0};
};

/// Criterion value for (data, plan, hp); see CvEngine::evaluate. Building a
/// fresh engine per call is fine for one-off evaluations; loops should hold
/// a CvEngine to reuse the cached Gram matrices.
template <typename Scalar>
GradientReport<Scalar> eval_criterion(const Dataset<Scalar>& data, const FoldPlan& plan,
                                      const HyperParams<Scalar>& hp) {
  return CvEngine<Scalar>(data, plan).evaluate(hp);
}

template <typename Scalar>
GradientReport<Scalar> grad_lambda(const Dataset<Scalar>& data, const FoldPlan& plan,
                                   const HyperParams<Scalar>& hp) {
  return CvEngine<Scalar>(data, plan).gradient(hp);
}

template <typename Scalar>
GradientReport<Scalar> grad_lambda_full(const Dataset<Scalar>& data, const FoldPlan& plan,
                                        const HyperParams<Scalar>& hp) {
  return CvEngine<Scalar>(data, plan).gradient_full(hp);
}

template <typename Scalar>
GradientReport<Scalar> q_term_and_grad(const Dataset<Scalar>& data, const FoldPlan& plan,
                                       const HyperParams<Scalar>& hp) {
  return CvEngine<Scalar>(data, plan).q_term(hp);
}

}  // namespace multiridge
