#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "multiridge/errors.hpp"

namespace multiridge {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Paired feature/target matrices, one sample per row.
///
/// `true_theta` (D x M) and `noise` (N x M) are populated by the synthetic
/// generators and stay empty (0 x 0) for externally supplied data.
template <typename Scalar = double>
struct Dataset {
  Matrix<Scalar> X;           // N x D
  Matrix<Scalar> Y;           // N x M
  Matrix<Scalar> true_theta;  // D x M when known
  Matrix<Scalar> noise;       // N x M when synthetic

  Index n_samples() const { return X.rows(); }
  Index n_features() const { return X.cols(); }
  Index n_targets() const { return Y.cols(); }

  bool has_true_theta() const { return true_theta.size() > 0; }
  bool has_noise() const { return noise.size() > 0; }

  void validate() const {
    if (X.rows() != Y.rows()) {
      std::ostringstream msg;
      msg << "dataset row mismatch: X has " << X.rows() << " rows, Y has " << Y.rows();
      throw InvalidInputError(msg.str());
    }
    if (X.rows() < 1) throw InvalidInputError("dataset is empty");
    if (X.cols() < 1) throw InvalidInputError("dataset has no features");
    if (Y.cols() < 1) throw InvalidInputError("dataset has no targets");
    if (!X.allFinite() || !Y.allFinite()) {
      throw InvalidInputError("dataset contains non-finite entries");
    }
  }

  template <typename Other>
  Dataset<Other> cast() const {
    Dataset<Other> out;
    out.X = X.template cast<Other>();
    out.Y = Y.template cast<Other>();
    out.true_theta = true_theta.template cast<Other>();
    out.noise = noise.template cast<Other>();
    return out;
  }
};

/// Per-feature regularization weights lambda (the diagonal of Lambda),
/// the scaling set Gamma for optimal-solution augmentation, and the
/// validation-regularizer weight mu.
///
/// lambda is unconstrained in sign: the criterion depends on it only
/// through Lambda^2, so the effective penalty is lambda_j^2. mu > 0 and
/// |gamma_set| > 1 are mutually exclusive modes.
template <typename Scalar = double>
struct HyperParams {
  Vector<Scalar> lambda;
  std::vector<Scalar> gamma_set{Scalar(1)};
  Scalar mu{0};

  void validate(Index n_features) const {
    if (lambda.size() != n_features) {
      std::ostringstream msg;
      msg << "lambda has length " << lambda.size() << ", expected " << n_features;
      throw InvalidInputError(msg.str());
    }
    if (!lambda.allFinite()) throw InvalidInputError("lambda contains non-finite entries");
    if (gamma_set.empty()) throw InvalidInputError("gamma_set is empty");
    for (Scalar g : gamma_set) {
      if (!(g != Scalar(0)) || !std::isfinite(static_cast<double>(g))) {
        throw InvalidInputError("gamma_set entries must be finite and nonzero");
      }
    }
    if (!(mu >= Scalar(0)) || !std::isfinite(static_cast<double>(mu))) {
      throw InvalidInputError("mu must be finite and nonnegative");
    }
    if (mu > Scalar(0) && !(gamma_set.size() == 1 && gamma_set.front() == Scalar(1))) {
      throw InvalidInputError(
          "validation regularization (mu > 0) and scaling augmentation (gamma_set != {1}) "
          "cannot be combined in one run");
    }
  }
};

}  // namespace multiridge
