#pragma once

// Test-only proximal-gradient (FISTA) oracle for the elastic-net family.
// Kept independent of the coordinate-descent implementation it checks.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace multiridge_testing {

inline double enet_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd& theta, double alpha, double ratio) {
  const double n = double(x.rows());
  const double fit = (y - x * theta).squaredNorm() / (2.0 * n);
  return fit + alpha * ratio * theta.cwiseAbs().sum() +
         0.5 * alpha * (1.0 - ratio) * theta.squaredNorm();
}

inline Eigen::MatrixXd fista_oracle(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                    double alpha, double ratio, int iterations = 20000) {
  const double n = double(x.rows());
  const double l1 = alpha * ratio;
  const double l2 = alpha * (1.0 - ratio);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x / n);
  const double lipschitz = eig.eigenvalues().maxCoeff() + l2;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(x.cols(), y.cols());
  Eigen::MatrixXd momentum = theta;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd grad = -x.transpose() * (y - x * momentum) / n + l2 * momentum;
    Eigen::MatrixXd step = momentum - grad / lipschitz;
    Eigen::MatrixXd next(step.rows(), step.cols());
    const double thresh = l1 / lipschitz;
    for (Eigen::Index r = 0; r < step.rows(); ++r) {
      for (Eigen::Index c = 0; c < step.cols(); ++c) {
        const double v = step(r, c);
        next(r, c) = v > thresh ? v - thresh : (v < -thresh ? v + thresh : 0.0);
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    momentum = next + ((t - 1.0) / t_next) * (next - theta);
    theta = next;
    t = t_next;
  }
  return theta;
}

}  // namespace multiridge_testing
