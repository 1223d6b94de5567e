#pragma once

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "multiridge/types.hpp"

namespace multiridge {

/// Symmetric positive-definite factorization of the regularized Gram
/// matrix W = X'X + n_train * gamma^2 * Diag(lambda)^2.
///
/// The factorization is retained because the gradient engine needs repeated
/// solves against the same W (the A_k applications); the explicit inverse is
/// never formed. Cholesky first; if that reports failure on a semidefinite
/// edge, a pivoted LDLT takes over and `used_fallback()` flips so callers
/// can surface a warning.
template <typename Scalar = double>
class TikhonovFactor {
 public:
  explicit TikhonovFactor(Matrix<Scalar> regularized_gram, std::string context = {})
      : context_(std::move(context)) {
    llt_.compute(regularized_gram);
    if (llt_.info() != Eigen::Success) {
      fallback_ = true;
      ldlt_.compute(regularized_gram);
      if (ldlt_.info() != Eigen::Success) {
        throw SingularSystemError("regularized Gram matrix is not factorizable" + suffix());
      }
      // LDLT solves consistent singular systems as if by pseudoinverse, so
      // rank deficiency must be caught on the pivots.
      Vector<Scalar> d = ldlt_.vectorD().cwiseAbs();
      const Scalar max_pivot = d.maxCoeff();
      const Scalar tol = std::numeric_limits<Scalar>::epsilon() * Scalar(d.size()) * max_pivot;
      if (!(max_pivot > Scalar(0)) || d.minCoeff() <= tol) {
        throw SingularSystemError("regularized Gram matrix is singular" + suffix());
      }
    }
  }

  Matrix<Scalar> solve(const Matrix<Scalar>& rhs) const {
    Matrix<Scalar> out;
    if (fallback_) {
      out = ldlt_.solve(rhs);
    } else {
      out = llt_.solve(rhs);
    }
    if (!out.allFinite()) {
      throw SingularSystemError("regularized system is singular" + suffix());
    }
    return out;
  }

  bool used_fallback() const { return fallback_; }
  const std::string& context() const { return context_; }

 private:
  std::string suffix() const { return context_.empty() ? std::string() : " (" + context_ + ")"; }

  Eigen::LLT<Matrix<Scalar>> llt_;
  Eigen::LDLT<Matrix<Scalar>> ldlt_;
  bool fallback_ = false;
  std::string context_;
};

namespace detail {

/// W = X'X + n_train * gamma^2 * Diag(lambda)^2, built from a precomputed
/// Gram matrix so the CV engine can reuse X'X across epochs.
template <typename Scalar>
Matrix<Scalar> regularized_gram(const Matrix<Scalar>& gram, const Vector<Scalar>& lambda,
                                Scalar gamma, Index n_train) {
  Matrix<Scalar> w = gram;
  w.diagonal().array() += Scalar(n_train) * (gamma * gamma) * lambda.array().square();
  return w;
}

template <typename Scalar>
Scalar singular_residual_tol() {
  return std::sqrt(std::numeric_limits<Scalar>::epsilon()) * Scalar(100);
}

}  // namespace detail

/// Closed-form solve of the Tikhonov-regularized least squares problem:
/// returns theta = (X'X + n_train * gamma^2 * Lambda^2)^{-1} X'Y where
/// n_train = rows(X). A residual check guards against quietly returning a
/// garbage solution for a singular system; `context` names the offending
/// fold in error messages when called from the CV engine.
template <typename Scalar>
Matrix<Scalar> solve_tikhonov(const Matrix<Scalar>& x, const Matrix<Scalar>& y,
                              const Vector<Scalar>& lambda, Scalar gamma = Scalar(1),
                              const std::string& context = {}) {
  if (x.rows() != y.rows()) throw InvalidInputError("solve_tikhonov: X/Y row mismatch");
  if (x.rows() < 1) throw InvalidInputError("solve_tikhonov: empty system");
  if (lambda.size() != x.cols()) throw InvalidInputError("solve_tikhonov: lambda length mismatch");

  const Index n_train = x.rows();
  Matrix<Scalar> gram = Matrix<Scalar>::Zero(x.cols(), x.cols());
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.template triangularView<Eigen::StrictlyUpper>() = gram.transpose();

  Matrix<Scalar> xty = x.transpose() * y;
  Matrix<Scalar> w = detail::regularized_gram(gram, lambda, gamma, n_train);
  TikhonovFactor<Scalar> factor(w, context);
  Matrix<Scalar> theta = factor.solve(xty);

  const Scalar rhs_norm = xty.norm();
  const Scalar residual = (w * theta - xty).norm();
  if (residual > detail::singular_residual_tol<Scalar>() * std::max(rhs_norm, Scalar(1))) {
    std::ostringstream msg;
    msg << "regularized system is singular (normal-equation residual " << residual << ")";
    if (!context.empty()) msg << " (" << context << ")";
    throw SingularSystemError(msg.str());
  }
  return theta;
}

/// Model predictions XTheta for row-stacked inputs.
template <typename Scalar>
Matrix<Scalar> predict(const Matrix<Scalar>& theta, const Matrix<Scalar>& x) {
  if (x.cols() != theta.rows()) {
    std::ostringstream msg;
    msg << "predict: X has " << x.cols() << " columns but theta has " << theta.rows() << " rows";
    throw InvalidInputError(msg.str());
  }
  return x * theta;
}

}  // namespace multiridge
