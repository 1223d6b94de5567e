#pragma once

#include <sstream>

#include "multiridge/types.hpp"

namespace multiridge {

/// Column-wise centering/scaling transform for features and targets,
/// fit once on the full training set before fold splitting.
///
/// Scales are population standard deviations; a zero-variance column keeps
/// scale 1 so it passes through centered instead of blowing up.
template <typename Scalar = double>
struct Standardizer {
  Vector<Scalar> feature_mean;
  Vector<Scalar> feature_scale;
  Vector<Scalar> target_mean;
  Vector<Scalar> target_scale;

  Matrix<Scalar> apply_features(const Matrix<Scalar>& x) const {
    check_cols(x.cols(), feature_mean.size(), "feature");
    return ((x.rowwise() - feature_mean.transpose()).array().rowwise() /
            feature_scale.transpose().array())
        .matrix();
  }

  Matrix<Scalar> apply_targets(const Matrix<Scalar>& y) const {
    check_cols(y.cols(), target_mean.size(), "target");
    return ((y.rowwise() - target_mean.transpose()).array().rowwise() /
            target_scale.transpose().array())
        .matrix();
  }

  /// Maps standardized predictions back to the original target units.
  Matrix<Scalar> invert_targets(const Matrix<Scalar>& y) const {
    check_cols(y.cols(), target_mean.size(), "target");
    return (y.array().rowwise() * target_scale.transpose().array()).matrix().rowwise() +
           target_mean.transpose();
  }

  Matrix<Scalar> invert_features(const Matrix<Scalar>& x) const {
    check_cols(x.cols(), feature_mean.size(), "feature");
    return (x.array().rowwise() * feature_scale.transpose().array()).matrix().rowwise() +
           feature_mean.transpose();
  }

 private:
  static void check_cols(Index got, Index expected, const char* what) {
    if (got != expected) {
      std::ostringstream msg;
      msg << what << " column count " << got << " does not match fitted standardizer (" << expected
          << ")";
      throw InvalidInputError(msg.str());
    }
  }
};

namespace detail {

template <typename Scalar>
void fit_columns(const Matrix<Scalar>& m, Vector<Scalar>& mean, Vector<Scalar>& scale) {
  const Index n = m.rows();
  mean = m.colwise().mean().transpose();
  Matrix<Scalar> centered = m.rowwise() - mean.transpose();
  Vector<Scalar> var =
      (centered.array().square().colwise().sum() / Scalar(n)).matrix().transpose();
  scale = var.array().sqrt().matrix();
  for (Index j = 0; j < scale.size(); ++j) {
    if (!(scale[j] > Scalar(0))) scale[j] = Scalar(1);  // degenerate column: pass through centered
  }
}

}  // namespace detail

template <typename Scalar>
Standardizer<Scalar> standardize_fit(const Dataset<Scalar>& data) {
  data.validate();
  if (data.n_samples() < 2) {
    throw InvalidInputError("standardize_fit needs at least 2 samples");
  }
  Standardizer<Scalar> s;
  detail::fit_columns(data.X, s.feature_mean, s.feature_scale);
  detail::fit_columns(data.Y, s.target_mean, s.target_scale);
  return s;
}

/// Standardizes X and Y. Synthetic metadata is transformed consistently:
/// y_std = x_std' theta_std + noise_std holds whenever y = x' theta + noise
/// held (up to the intercept absorbed by centering).
template <typename Scalar>
Dataset<Scalar> standardize_apply(const Standardizer<Scalar>& s, const Dataset<Scalar>& data) {
  Dataset<Scalar> out;
  out.X = s.apply_features(data.X);
  out.Y = s.apply_targets(data.Y);
  if (data.has_true_theta()) {
    out.true_theta = ((data.true_theta.array().colwise() * s.feature_scale.array()).rowwise() /
                      s.target_scale.transpose().array())
                         .matrix();
  }
  if (data.has_noise()) {
    out.noise = (data.noise.array().rowwise() / s.target_scale.transpose().array()).matrix();
  }
  return out;
}

template <typename Scalar>
Dataset<Scalar> standardize_invert(const Standardizer<Scalar>& s, const Dataset<Scalar>& data) {
  Dataset<Scalar> out;
  out.X = s.invert_features(data.X);
  out.Y = s.invert_targets(data.Y);
  if (data.has_true_theta()) {
    out.true_theta = ((data.true_theta.array().rowwise() * s.target_scale.transpose().array())
                          .colwise() /
                      s.feature_scale.array())
                         .matrix();
  }
  if (data.has_noise()) {
    out.noise = (data.noise.array().rowwise() * s.target_scale.transpose().array()).matrix();
  }
  return out;
}

}  // namespace multiridge
