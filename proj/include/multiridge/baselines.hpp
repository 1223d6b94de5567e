#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "multiridge/folds.hpp"
#include "multiridge/parallel.hpp"
#include "multiridge/solver.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Ordinary least squares; rank-deficient designs get the minimum-norm
/// solution through a pivoted orthogonal decomposition.
template <typename Scalar>
Matrix<Scalar> ols_fit(const Matrix<Scalar>& x, const Matrix<Scalar>& y) {
  if (x.rows() != y.rows()) throw InvalidInputError("ols_fit: X/Y row mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>> cod(x);
  return cod.solve(y);
}

/// Classical single-penalty ridge: minimizes ||Y - X theta||_F^2 + alpha ||theta||_F^2.
template <typename Scalar>
Matrix<Scalar> ridge_fit(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Scalar alpha) {
  if (x.rows() != y.rows()) throw InvalidInputError("ridge_fit: X/Y row mismatch");
  if (!(alpha > Scalar(0))) throw InvalidInputError("ridge_fit: alpha must be positive");
  Matrix<Scalar> reg = Matrix<Scalar>::Zero(x.cols(), x.cols());
  reg.template selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  reg.template triangularView<Eigen::StrictlyUpper>() = reg.transpose();
  reg.diagonal().array() += alpha;
  TikhonovFactor<Scalar> factor(std::move(reg), "ridge");
  return factor.solve(x.transpose() * y);
}

/// Coordinate-descent solution with its convergence diagnostics.
template <typename Scalar = double>
struct CdResult {
  Matrix<Scalar> theta;
  bool converged = true;  // every target column met the KKT tolerance
  int sweeps = 0;         // largest cycle count over target columns
};

/// Largest violation of the subgradient optimality conditions of
///   (1/(2N)) ||y - X theta||^2 + l1 ||theta||_1 + (l2/2) ||theta||^2
/// at theta, maximized over coordinates (and target columns).
template <typename Scalar>
Scalar kkt_violation(const Matrix<Scalar>& x, const Matrix<Scalar>& y,
                     const Matrix<Scalar>& theta, Scalar l1, Scalar l2) {
  const Scalar n = Scalar(x.rows());
  Matrix<Scalar> corr = x.transpose() * (y - x * theta) / n;  // D x M
  Scalar worst = 0;
  for (Index m = 0; m < theta.cols(); ++m) {
    for (Index j = 0; j < theta.rows(); ++j) {
      const Scalar g = corr(j, m) - l2 * theta(j, m);
      Scalar v;
      if (theta(j, m) != Scalar(0)) {
        v = std::abs(g - l1 * (theta(j, m) > Scalar(0) ? Scalar(1) : Scalar(-1)));
      } else {
        v = std::max(Scalar(0), std::abs(g) - l1);
      }
      worst = std::max(worst, v);
    }
  }
  return worst;
}

namespace detail {

template <typename Scalar>
Scalar soft_threshold(Scalar value, Scalar threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return Scalar(0);
}

/// Cyclic coordinate descent on one target column. Stops when the KKT
/// violation drops below tol after a full cycle. theta is updated in
/// place; the residual r = y - X theta is maintained incrementally.
template <typename Scalar>
int coordinate_descent_column(const Matrix<Scalar>& x, const Vector<Scalar>& col_sq_over_n,
                              Vector<Scalar>& theta, Vector<Scalar>& residual, Scalar l1,
                              Scalar l2, Scalar tol, int max_iter, bool* converged) {
  const Scalar n = Scalar(x.rows());
  const Index d = x.cols();
  int sweep = 0;
  *converged = false;
  for (; sweep < max_iter; ++sweep) {
    for (Index j = 0; j < d; ++j) {
      if (col_sq_over_n[j] == Scalar(0)) continue;
      const Scalar old = theta[j];
      const Scalar rho = x.col(j).dot(residual) / n + col_sq_over_n[j] * old;
      const Scalar updated = soft_threshold(rho, l1) / (col_sq_over_n[j] + l2);
      if (updated != old) {
        residual += x.col(j) * (old - updated);
        theta[j] = updated;
      }
    }
    Vector<Scalar> corr = x.transpose() * residual / n;
    Scalar violation = 0;
    for (Index j = 0; j < d; ++j) {
      const Scalar g = corr[j] - l2 * theta[j];
      if (theta[j] != Scalar(0)) {
        violation = std::max(
            violation, std::abs(g - l1 * (theta[j] > Scalar(0) ? Scalar(1) : Scalar(-1))));
      } else {
        violation = std::max(violation, std::max(Scalar(0), std::abs(g) - l1));
      }
    }
    if (violation <= tol) {
      *converged = true;
      return sweep + 1;
    }
  }
  return sweep;
}

}  // namespace detail

/// Coordinate descent on the elastic-net objective, one target column at a
/// time. `theta0` (optional) warm-starts the solve.
template <typename Scalar>
CdResult<Scalar> coordinate_descent(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Scalar l1,
                                    Scalar l2, Scalar tol, int max_iter,
                                    const Matrix<Scalar>* theta0 = nullptr) {
  if (x.rows() != y.rows()) throw InvalidInputError("coordinate_descent: X/Y row mismatch");
  if (max_iter < 1) throw InvalidInputError("coordinate_descent: max_iter must be positive");
  const Index d = x.cols();
  const Index m = y.cols();
  CdResult<Scalar> out;
  out.theta = theta0 != nullptr ? *theta0 : Matrix<Scalar>::Zero(d, m);
  if (out.theta.rows() != d || out.theta.cols() != m) {
    throw InvalidInputError("coordinate_descent: warm start has wrong shape");
  }
  Vector<Scalar> col_sq_over_n =
      (x.array().square().colwise().sum() / Scalar(x.rows())).matrix().transpose();
  for (Index target = 0; target < m; ++target) {
    Vector<Scalar> theta_col = out.theta.col(target);
    Vector<Scalar> residual = y.col(target) - x * theta_col;
    bool converged = false;
    int sweeps = detail::coordinate_descent_column(x, col_sq_over_n, theta_col, residual, l1, l2,
                                                   tol, max_iter, &converged);
    out.theta.col(target) = theta_col;
    out.converged = out.converged && converged;
    out.sweeps = std::max(out.sweeps, sweeps);
  }
  return out;
}

/// LASSO: (1/(2N)) ||y - X theta||^2 + alpha ||theta||_1 per target column.
template <typename Scalar>
CdResult<Scalar> lasso_fit(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Scalar alpha,
                           Scalar tol = Scalar(1e-4), int max_iter = 1000) {
  if (!(alpha > Scalar(0))) throw InvalidInputError("lasso_fit: alpha must be positive");
  return coordinate_descent(x, y, alpha, Scalar(0), tol, max_iter);
}

/// Elastic net: (1/(2N)) ||y - X theta||^2 + alpha rho ||theta||_1
/// + alpha (1 - rho)/2 ||theta||^2 per target column.
template <typename Scalar>
CdResult<Scalar> enet_fit(const Matrix<Scalar>& x, const Matrix<Scalar>& y, Scalar alpha,
                          Scalar l1_ratio, Scalar tol = Scalar(1e-4), int max_iter = 1000) {
  if (!(alpha > Scalar(0))) throw InvalidInputError("enet_fit: alpha must be positive");
  if (!(l1_ratio >= Scalar(0) && l1_ratio <= Scalar(1))) {
    throw InvalidInputError("enet_fit: l1_ratio must lie in [0, 1]");
  }
  return coordinate_descent(x, y, alpha * l1_ratio, alpha * (Scalar(1) - l1_ratio), tol, max_iter);
}

/// Logarithmically spaced grid with exact endpoints.
inline std::vector<double> logspace(double lo, double hi, int num_points) {
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidInputError("logspace needs 0 < lo < hi");
  if (num_points < 1) throw InvalidInputError("logspace needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(num_points));
  if (num_points == 1) {
    out[0] = lo;
    return out;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < num_points; ++i) {
    out[static_cast<std::size_t>(i)] =
        std::pow(10.0, llo + (lhi - llo) * double(i) / double(num_points - 1));
  }
  out.front() = std::pow(10.0, llo);
  out.back() = std::pow(10.0, lhi);
  return out;
}

/// Hyperparameter-search protocol for a baseline regressor.
struct SearchSpec {
  enum class Kind { RidgeGrid, LassoGrid, EnetRandom };

  Kind kind = Kind::RidgeGrid;
  double strength_lo = 1e-3;
  double strength_hi = 1e6;
  int num_points = 1000;
  double l1_ratio_lo = 0.0;  // EnetRandom only
  double l1_ratio_hi = 1.0;
  std::uint64_t seed = 0;    // EnetRandom sampling
  double cd_tol = 1e-4;
  int cd_max_iter = 1000;

  void validate() const {
    if (!(strength_lo > 0.0) || !(strength_lo < strength_hi)) {
      throw InvalidInputError("search spec needs 0 < strength_lo < strength_hi");
    }
    if (num_points < 1) throw InvalidInputError("search spec needs at least one candidate");
    if (!(l1_ratio_lo >= 0.0 && l1_ratio_hi <= 1.0 && l1_ratio_lo <= l1_ratio_hi)) {
      throw InvalidInputError("l1_ratio bounds must satisfy 0 <= lo <= hi <= 1");
    }
  }

  static SearchSpec ridge_default() { return {Kind::RidgeGrid, 1e-3, 1e6, 1000}; }
  static SearchSpec lasso_default() { return {Kind::LassoGrid, 1e-5, 1e2, 1000}; }
  static SearchSpec enet_default(std::uint64_t seed = 0) {
    SearchSpec s{Kind::EnetRandom, 1e-5, 1e3, 1000};
    s.seed = seed;
    return s;
  }
};

struct CvCurvePoint {
  double strength = 0.0;
  double l1_ratio = 1.0;
  double loss = std::numeric_limits<double>::quiet_NaN();
};

template <typename Scalar = double>
struct SearchResult {
  double strength = 0.0;
  double l1_ratio = 1.0;            // meaningful for EnetRandom only
  double loss = 0.0;                // mean validation loss of the winner
  Matrix<Scalar> theta;             // refit on the full data
  bool refit_converged = true;
  std::vector<CvCurvePoint> curve;  // every candidate, in candidate order
};

namespace detail {

// Candidates for lasso/enet are processed in descending-strength chunks so
// warm starts carry over; fixed chunk boundaries keep the outcome
// independent of the thread count.
constexpr int kSearchChunk = 64;

template <typename Scalar>
struct SearchFold {
  Matrix<Scalar> x_train, y_train, x_val, y_val;
};

template <typename Scalar>
Matrix<Scalar> gather_rows(const Matrix<Scalar>& m, const std::vector<Index>& rows) {
  Matrix<Scalar> out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace detail

/// K-fold grid/random search for the baseline regressors. Every candidate
/// is scored by the mean validation loss (1/(2 N_V)) ||Y_k - X_k theta||^2
/// averaged over folds; the best candidate (ties going to the larger
/// strength) is refit on the full data.
template <typename Scalar>
SearchResult<Scalar> search_cv(const Dataset<Scalar>& data, const FoldPlan& plan,
                               const SearchSpec& spec, int threads = 1) {
  spec.validate();
  data.validate();
  const int k_folds = plan.fold_count();

  std::vector<detail::SearchFold<Scalar>> folds(static_cast<std::size_t>(k_folds));
  for (int k = 0; k < k_folds; ++k) {
    folds[k].x_train = detail::gather_rows(data.X, plan.train_indices(k));
    folds[k].y_train = detail::gather_rows(data.Y, plan.train_indices(k));
    folds[k].x_val = detail::gather_rows(data.X, plan.validation_indices(k));
    folds[k].y_val = detail::gather_rows(data.Y, plan.validation_indices(k));
  }

  // Candidate list in presentation order.
  std::vector<CvCurvePoint> candidates;
  if (spec.kind == SearchSpec::Kind::EnetRandom) {
    candidates.resize(static_cast<std::size_t>(spec.num_points));
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double llo = std::log10(spec.strength_lo), lhi = std::log10(spec.strength_hi);
    for (auto& c : candidates) {
      c.strength = std::pow(10.0, llo + (lhi - llo) * unit(rng));
      c.l1_ratio = spec.l1_ratio_lo + (spec.l1_ratio_hi - spec.l1_ratio_lo) * unit(rng);
    }
  } else {
    auto grid = logspace(spec.strength_lo, spec.strength_hi, spec.num_points);
    candidates.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) candidates[i].strength = grid[i];
  }
  const std::size_t n_cand = candidates.size();

  // losses[k][i] = validation loss of candidate i on fold k.
  std::vector<std::vector<double>> losses(static_cast<std::size_t>(k_folds),
                                          std::vector<double>(n_cand, 0.0));

  if (spec.kind == SearchSpec::Kind::RidgeGrid) {
    // One symmetric eigendecomposition per fold makes the 10^3-point grid
    // cheap: theta(alpha) = V diag(1/(w + alpha)) V' X'y.
    parallel_for(static_cast<std::size_t>(k_folds), threads, [&](std::size_t k) {
      const auto& f = folds[k];
      Matrix<Scalar> gram = Matrix<Scalar>::Zero(f.x_train.cols(), f.x_train.cols());
      gram.template selfadjointView<Eigen::Lower>().rankUpdate(f.x_train.transpose());
      gram.template triangularView<Eigen::StrictlyUpper>() = gram.transpose();
      Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
      if (eig.info() != Eigen::Success) {
        throw SingularSystemError("ridge search: eigendecomposition failed");
      }
      Matrix<Scalar> projected = eig.eigenvectors().transpose() * (f.x_train.transpose() * f.y_train);
      Matrix<Scalar> val_basis = f.x_val * eig.eigenvectors();
      const Scalar denom = Scalar(2) * Scalar(f.x_val.rows());
      for (std::size_t i = 0; i < n_cand; ++i) {
        Vector<Scalar> shrink =
            (eig.eigenvalues().array() + Scalar(candidates[i].strength)).inverse().matrix();
        Matrix<Scalar> scaled = shrink.asDiagonal() * projected;
        losses[k][i] = static_cast<double>((val_basis * scaled - f.y_val).squaredNorm() / denom);
      }
    });
  } else {
    // Descending-strength processing order with warm starts inside chunks.
    std::vector<std::size_t> order(n_cand);
    for (std::size_t i = 0; i < n_cand; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (candidates[a].strength != candidates[b].strength) {
        return candidates[a].strength > candidates[b].strength;
      }
      return a < b;
    });
    const std::size_t n_chunks = (n_cand + detail::kSearchChunk - 1) / detail::kSearchChunk;
    parallel_for(n_chunks * static_cast<std::size_t>(k_folds), threads, [&](std::size_t item) {
      const std::size_t k = item / n_chunks;
      const std::size_t chunk = item % n_chunks;
      const auto& f = folds[k];
      const Scalar denom = Scalar(2) * Scalar(f.x_val.rows());
      Matrix<Scalar> warm = Matrix<Scalar>::Zero(f.x_train.cols(), f.y_train.cols());
      const std::size_t begin = chunk * detail::kSearchChunk;
      const std::size_t end = std::min(n_cand, begin + detail::kSearchChunk);
      for (std::size_t pos = begin; pos < end; ++pos) {
        const auto& cand = candidates[order[pos]];
        const Scalar l1 = Scalar(cand.strength * cand.l1_ratio);
        const Scalar l2 = Scalar(cand.strength * (1.0 - cand.l1_ratio));
        auto fit = coordinate_descent(f.x_train, f.y_train, l1, l2, Scalar(spec.cd_tol),
                                      spec.cd_max_iter, &warm);
        warm = fit.theta;
        losses[k][order[pos]] =
            static_cast<double>((f.x_val * fit.theta - f.y_val).squaredNorm() / denom);
      }
    });
  }

  SearchResult<Scalar> result;
  result.curve = std::move(candidates);
  bool found = false;
  for (std::size_t i = 0; i < n_cand; ++i) {
    double mean_loss = 0.0;
    for (int k = 0; k < k_folds; ++k) mean_loss += losses[k][i];
    mean_loss /= double(k_folds);
    result.curve[i].loss = mean_loss;
    if (!std::isfinite(mean_loss)) continue;
    const bool better = !found || mean_loss < result.loss ||
                        (mean_loss == result.loss && result.curve[i].strength > result.strength);
    if (better) {
      found = true;
      result.loss = mean_loss;
      result.strength = result.curve[i].strength;
      result.l1_ratio = spec.kind == SearchSpec::Kind::EnetRandom ? result.curve[i].l1_ratio : 1.0;
    }
  }
  if (!found) throw SearchFailureError("hyperparameter search: every candidate failed");

  switch (spec.kind) {
    case SearchSpec::Kind::RidgeGrid:
      result.theta = ridge_fit(data.X, data.Y, Scalar(result.strength));
      break;
    case SearchSpec::Kind::LassoGrid: {
      auto fit = lasso_fit(data.X, data.Y, Scalar(result.strength), Scalar(spec.cd_tol),
                           spec.cd_max_iter);
      result.theta = fit.theta;
      result.refit_converged = fit.converged;
      break;
    }
    case SearchSpec::Kind::EnetRandom: {
      auto fit = enet_fit(data.X, data.Y, Scalar(result.strength), Scalar(result.l1_ratio),
                          Scalar(spec.cd_tol), spec.cd_max_iter);
      result.theta = fit.theta;
      result.refit_converged = fit.converged;
      break;
    }
  }
  return result;
}

}  // namespace multiridge
