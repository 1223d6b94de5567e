#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "multiridge/errors.hpp"
#include "multiridge/metrics.hpp"
#include "multiridge/types.hpp"

namespace multiridge {

/// Sparse linear regression generator: x ~ N(0, I_D), y = x' theta + e with
/// a floor(D * informative_fraction)-sparse coefficient vector drawn
/// uniformly from [coef_lo, coef_hi] on a random support.
struct SparseLinearSpec {
  Index d = 100;
  Index n_train = 1000;
  Index n_test = 10000;
  double informative_fraction = 0.5;
  double coef_lo = -50.0;
  double coef_hi = 50.0;
  double snr_db = 20.0;  // +infinity disables noise
  std::uint64_t seed = 0;

  void validate() const {
    if (d < 1 || n_train < 1 || n_test < 1) {
      throw InvalidInputError("sparse generator: dimensions must be positive");
    }
    if (!(informative_fraction > 0.0 && informative_fraction <= 1.0)) {
      throw InvalidInputError("informative_fraction must lie in (0, 1]");
    }
    if (static_cast<Index>(double(d) * informative_fraction) < 1) {
      throw InvalidInputError("informative_fraction leaves no informative feature");
    }
    if (!(coef_lo < coef_hi)) throw InvalidInputError("coefficient bounds must satisfy lo < hi");
  }
};

/// LPV-ARX generator configuration. The regressor has n_alpha * (n_a + n_b)
/// columns; the scheduling signal is N(0, p_variance).
struct LpvSpec {
  Index n = 50;
  Index n_test = 3000;
  int n_a = 30;
  int n_b = 30;
  int n_alpha = 8;
  double snr_db = 14.0;
  double p_variance = std::numbers::pi;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || n_test < 1) throw InvalidInputError("lpv generator: dataset lengths must be positive");
    if (n_a < 1 || n_b < 1) throw InvalidInputError("lpv generator: lag orders must be positive");
    if (n_alpha < 1 || n_alpha > 8) {
      throw InvalidInputError("lpv generator: n_alpha must lie in [1, 8]");
    }
    if (!(p_variance > 0.0)) throw InvalidInputError("lpv generator: p_variance must be positive");
  }
};

namespace detail {

template <typename Rng>
MatrixXd gaussian_matrix(Index rows, Index cols, Rng& rng, double stddev = 1.0) {
  std::normal_distribution<double> gauss(0.0, stddev);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

inline double noise_sigma(const MatrixXd& signal, double snr_db) {
  const double power = signal.squaredNorm() / double(signal.size());
  if (!(power > 0.0)) throw InvalidInputError("noise calibration: signal is identically zero");
  return std::sqrt(power / std::pow(10.0, snr_db / 10.0));
}

}  // namespace detail

/// Zero-mean Gaussian noise sized like `signal`, with variance
/// sigma^2 = ||signal||^2 / (count * 10^(snr_db/10)) so the realized SNR
/// hits the target in expectation. An infinite target disables noise.
inline MatrixXd calibrate_noise(const MatrixXd& signal, double snr_db, std::uint64_t seed) {
  if (signal.size() == 0) throw InvalidInputError("noise calibration: empty signal");
  if (std::isinf(snr_db) && snr_db > 0.0) return MatrixXd::Zero(signal.rows(), signal.cols());
  const double sigma = detail::noise_sigma(signal, snr_db);
  std::mt19937_64 rng(seed);
  return sigma * detail::gaussian_matrix(signal.rows(), signal.cols(), rng);
}

inline std::pair<Dataset<double>, Dataset<double>> gen_sparse_linear(const SparseLinearSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::uniform_real_distribution<double> coef(spec.coef_lo, spec.coef_hi);
  MatrixXd theta_dense(spec.d, 1);
  for (Index j = 0; j < spec.d; ++j) theta_dense(j, 0) = coef(rng);

  // Informative support: partial Fisher-Yates draw without replacement.
  const Index n_informative = static_cast<Index>(double(spec.d) * spec.informative_fraction);
  std::vector<Index> pool(static_cast<std::size_t>(spec.d));
  for (Index j = 0; j < spec.d; ++j) pool[static_cast<std::size_t>(j)] = j;
  std::vector<bool> informative(static_cast<std::size_t>(spec.d), false);
  for (Index i = 0; i < n_informative; ++i) {
    const Index pick = i + static_cast<Index>(rng() % static_cast<std::uint64_t>(spec.d - i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick)]);
    informative[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])] = true;
  }
  MatrixXd theta = theta_dense;
  for (Index j = 0; j < spec.d; ++j) {
    if (!informative[static_cast<std::size_t>(j)]) theta(j, 0) = 0.0;
  }

  Dataset<double> train;
  train.X = detail::gaussian_matrix(spec.n_train, spec.d, rng);
  MatrixXd signal_train = train.X * theta;

  Dataset<double> test;
  test.X = detail::gaussian_matrix(spec.n_test, spec.d, rng);
  MatrixXd signal_test = test.X * theta;

  const bool noiseless = std::isinf(spec.snr_db) && spec.snr_db > 0.0;
  if (noiseless) {
    train.noise = MatrixXd::Zero(spec.n_train, 1);
    test.noise = MatrixXd::Zero(spec.n_test, 1);
  } else {
    // One noise level per generated system, calibrated on the train signal.
    const double sigma = detail::noise_sigma(signal_train, spec.snr_db);
    train.noise = sigma * detail::gaussian_matrix(spec.n_train, 1, rng);
    test.noise = sigma * detail::gaussian_matrix(spec.n_test, 1, rng);
  }
  train.Y = signal_train + train.noise;
  train.true_theta = theta;
  test.Y = signal_test + test.noise;
  test.true_theta = theta;
  return {std::move(train), std::move(test)};
}

/// The eight fixed basis functions evaluated at a scheduling value:
/// [1, p, p^2, p^3, sin p, cos p, sin^2 p, cos^2 p].
inline Eigen::Matrix<double, 8, 1> lpv_basis(double p) {
  Eigen::Matrix<double, 8, 1> psi;
  const double s = std::sin(p), c = std::cos(p);
  psi << 1.0, p, p * p, p * p * p, s, c, s * s, c * c;
  return psi;
}

/// Row of the basis-expanded LPV regressor. `y_lags[j-1]` holds y(k-j) and
/// `u_lags[j-1]` holds u(k-j); entries come out ordered as the a-block
/// (j = 1..n_a, s = 1..n_alpha) followed by the b-block (j = 1..n_b,
/// same s order). The ordering is part of the stable interface.
inline Eigen::RowVectorXd build_lpv_regressor(const VectorXd& y_lags, const VectorXd& u_lags,
                                              double p_now, int n_a, int n_b, int n_alpha = 8) {
  if (n_alpha < 1 || n_alpha > 8) throw InvalidInputError("build_lpv_regressor: n_alpha in [1, 8]");
  if (y_lags.size() < n_a || u_lags.size() < n_b) {
    throw InvalidInputError("build_lpv_regressor: insufficient lag history");
  }
  const auto psi = lpv_basis(p_now);
  Eigen::RowVectorXd row(static_cast<Index>(n_alpha) * (n_a + n_b));
  Index col = 0;
  for (int j = 1; j <= n_a; ++j)
    for (int s = 0; s < n_alpha; ++s) row[col++] = y_lags[j - 1] * psi[s];
  for (int j = 1; j <= n_b; ++j)
    for (int s = 0; s < n_alpha; ++s) row[col++] = u_lags[j - 1] * psi[s];
  return row;
}

/// One step of the simulated system:
/// y(k) = 0.5 cos(p) y(k-2) - 0.1 sin^2(p) y(k-3)
///        + (cos(p) - sin(p)) u(k-2) + 3 sin(p) u(k-3) + e(k).
/// Runs the recursion over full input/scheduling/noise sequences with zero
/// initial conditions.
inline VectorXd simulate_lpv_response(const VectorXd& u, const VectorXd& p, const VectorXd& e,
                                      std::uint64_t seed_echo = 0) {
  const Index n = u.size();
  if (p.size() != n || e.size() != n) {
    throw InvalidInputError("simulate_lpv_response: sequence lengths differ");
  }
  VectorXd y = VectorXd::Zero(n);
  auto lag = [&](Index k, int j) { return k - j >= 0 ? y[k - j] : 0.0; };
  auto ulag = [&](Index k, int j) { return k - j >= 0 ? u[k - j] : 0.0; };
  for (Index k = 0; k < n; ++k) {
    const double s = std::sin(p[k]), c = std::cos(p[k]);
    y[k] = 0.5 * c * lag(k, 2) - 0.1 * s * s * lag(k, 3) + (c - s) * ulag(k, 2) +
           3.0 * s * ulag(k, 3) + e[k];
    if (!(std::abs(y[k]) < 1e8)) {
      std::ostringstream msg;
      msg << "lpv simulation diverged at step " << k << " (seed " << seed_echo << ")";
      throw SimulationDivergenceError(msg.str(), seed_echo);
    }
  }
  return y;
}

namespace detail {

inline Dataset<double> lpv_dataset_from_trajectory(const VectorXd& y, const VectorXd& u,
                                                   const VectorXd& p, const VectorXd& e,
                                                   Index warmup, Index rows, const LpvSpec& spec) {
  Dataset<double> ds;
  ds.X = MatrixXd(rows, static_cast<Index>(spec.n_alpha) * (spec.n_a + spec.n_b));
  ds.Y = MatrixXd(rows, 1);
  ds.noise = MatrixXd(rows, 1);
  const int max_lag = std::max(spec.n_a, spec.n_b);
  VectorXd y_lags(max_lag), u_lags(max_lag);
  for (Index r = 0; r < rows; ++r) {
    const Index k = warmup + r;
    for (int j = 1; j <= max_lag; ++j) {
      y_lags[j - 1] = k - j >= 0 ? y[k - j] : 0.0;
      u_lags[j - 1] = k - j >= 0 ? u[k - j] : 0.0;
    }
    ds.X.row(r) = build_lpv_regressor(y_lags, u_lags, p[k], spec.n_a, spec.n_b, spec.n_alpha);
    ds.Y(r, 0) = y[k];
    ds.noise(r, 0) = e[k];
  }
  return ds;
}

/// The simulated system expressed in the basis-expanded coefficient
/// vector, or empty when the model class cannot represent it.
inline MatrixXd lpv_true_theta(const LpvSpec& spec) {
  if (spec.n_a < 3 || spec.n_b < 3 || spec.n_alpha != 8) return {};
  MatrixXd theta = MatrixXd::Zero(static_cast<Index>(spec.n_alpha) * (spec.n_a + spec.n_b), 1);
  auto a_index = [&](int j, int s) { return static_cast<Index>(j - 1) * spec.n_alpha + (s - 1); };
  auto b_index = [&](int j, int s) {
    return static_cast<Index>(spec.n_a) * spec.n_alpha + static_cast<Index>(j - 1) * spec.n_alpha +
           (s - 1);
  };
  // Basis order: [1, p, p^2, p^3, sin, cos, sin^2, cos^2] (1-based s).
  theta(a_index(2, 6), 0) = 0.5;   // 0.5 cos(p) y(k-2)
  theta(a_index(3, 7), 0) = -0.1;  // -0.1 sin^2(p) y(k-3)
  theta(b_index(2, 5), 0) = -1.0;  // (cos(p) - sin(p)) u(k-2)
  theta(b_index(2, 6), 0) = 1.0;
  theta(b_index(3, 5), 0) = 3.0;   // 3 sin(p) u(k-3)
  return theta;
}

}  // namespace detail

/// Simulates the LPV-ARX benchmark system and returns basis-expanded
/// train/test regression sets. Each recorded window is preceded by
/// max(n_a, n_b) warm-up steps so exactly `n` (resp. `n_test`) regression
/// rows exist. The noise level is calibrated on the noise-free train
/// window to hit `snr_db` and reused for the test trajectory.
inline std::pair<Dataset<double>, Dataset<double>> simulate_lpv(const LpvSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index warmup = std::max(spec.n_a, spec.n_b);
  const Index len_train = warmup + spec.n;
  const Index len_test = warmup + spec.n_test;
  const double p_std = std::sqrt(spec.p_variance);

  VectorXd u_train = detail::gaussian_matrix(len_train, 1, rng).col(0);
  VectorXd p_train = detail::gaussian_matrix(len_train, 1, rng, p_std).col(0);
  VectorXd u_test = detail::gaussian_matrix(len_test, 1, rng).col(0);
  VectorXd p_test = detail::gaussian_matrix(len_test, 1, rng, p_std).col(0);

  // Noise-free pass fixes the noise level for the requested SNR.
  VectorXd clean_train =
      simulate_lpv_response(u_train, p_train, VectorXd::Zero(len_train), spec.seed);
  const bool noiseless = std::isinf(spec.snr_db) && spec.snr_db > 0.0;
  double sigma = 0.0;
  if (!noiseless) {
    MatrixXd window = clean_train.tail(spec.n);
    sigma = detail::noise_sigma(window, spec.snr_db);
  }
  VectorXd e_train = sigma * detail::gaussian_matrix(len_train, 1, rng).col(0);
  VectorXd e_test = sigma * detail::gaussian_matrix(len_test, 1, rng).col(0);

  VectorXd y_train = simulate_lpv_response(u_train, p_train, e_train, spec.seed);
  VectorXd y_test = simulate_lpv_response(u_test, p_test, e_test, spec.seed);

  Dataset<double> train =
      detail::lpv_dataset_from_trajectory(y_train, u_train, p_train, e_train, warmup, spec.n, spec);
  Dataset<double> test = detail::lpv_dataset_from_trajectory(y_test, u_test, p_test, e_test,
                                                             warmup, spec.n_test, spec);
  train.true_theta = detail::lpv_true_theta(spec);
  test.true_theta = train.true_theta;
  return {std::move(train), std::move(test)};
}

/// Plain CSV dump (header x_1..x_D, y_1..y_M) for external inspection.
inline void write_dataset_csv(std::ostream& out, const Dataset<double>& data) {
  data.validate();
  for (Index j = 0; j < data.n_features(); ++j) out << "x_" << (j + 1) << ",";
  for (Index m = 0; m < data.n_targets(); ++m) {
    out << "y_" << (m + 1) << (m + 1 < data.n_targets() ? "," : "");
  }
  out << "\n";
  std::ostringstream line;
  line.precision(17);
  for (Index i = 0; i < data.n_samples(); ++i) {
    line.str("");
    for (Index j = 0; j < data.n_features(); ++j) line << data.X(i, j) << ",";
    for (Index m = 0; m < data.n_targets(); ++m) {
      line << data.Y(i, m);
      if (m + 1 < data.n_targets()) line << ",";
    }
    out << line.str() << "\n";
  }
}

inline void write_dataset_csv(const std::string& path, const Dataset<double>& data) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot open " + path + " for writing");
  write_dataset_csv(out, data);
}

}  // namespace multiridge
