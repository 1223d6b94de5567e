#pragma once

#include <algorithm>
#include <cmath>

#include "multiridge/errors.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Clipped coefficient of determination on held-out data:
/// max{0, 1 - sum_i ||y_i - yhat_i||^2 / sum_i ||y_i - ybar||^2}
/// with ybar the column means of y_true.
template <typename Scalar>
Scalar r2_score(const Matrix<Scalar>& y_true, const Matrix<Scalar>& y_pred) {
  if (y_true.rows() != y_pred.rows() || y_true.cols() != y_pred.cols()) {
    throw InvalidInputError("r2_score: shape mismatch between y_true and y_pred");
  }
  if (y_true.rows() < 2) throw InvalidInputError("r2_score needs at least 2 samples");
  const Scalar sse = (y_true - y_pred).squaredNorm();
  Matrix<Scalar> centered = y_true.rowwise() - y_true.colwise().mean();
  const Scalar sst = centered.squaredNorm();
  if (sst == Scalar(0)) throw InvalidInputError("r2_score: y_true is constant");
  return std::max(Scalar(0), Scalar(1) - sse / sst);
}

/// 10 log10(||signal||^2 / ||noise||^2) in dB.
template <typename Scalar>
Scalar snr_db(const Matrix<Scalar>& signal, const Matrix<Scalar>& noise) {
  const Scalar sp = signal.squaredNorm();
  const Scalar np = noise.squaredNorm();
  if (np == Scalar(0)) throw InvalidInputError("snr_db: noise is identically zero");
  return Scalar(10) * std::log10(sp / np);
}

}  // namespace multiridge
