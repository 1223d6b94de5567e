#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "multiridge/criterion.hpp"
#include "multiridge/optimizer.hpp"

namespace mr = multiridge;
using mr::MatrixXd;
using mr::VectorXd;

namespace {

mr::Dataset<double> shrinkage_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
  // Weak coefficients under heavy noise so the CV-optimal penalty is
  // strictly interior.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  mr::Dataset<double> ds;
  ds.X = MatrixXd(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) ds.X(i, j) = gauss(rng);
  ds.Y = MatrixXd(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double signal = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) signal += 1.0 * ds.X(i, j);
    ds.Y(i, 0) = signal + 2.0 * gauss(rng);
  }
  return ds;
}

}  // namespace

TEST(InitLambda, IdentityGivesOnes) {
  VectorXd lam = mr::init_lambda<double>(mr::InitSpec::identity(), 3);
  EXPECT_EQ(lam, VectorXd::Ones(3));
}

TEST(InitLambda, LassoInformedSplitsByZeroRows) {
  MatrixXd lasso_theta{{0.0}, {0.7}, {0.0}};
  VectorXd lam = mr::init_lambda<double>(mr::InitSpec::lasso_informed(), 3, &lasso_theta);
  EXPECT_DOUBLE_EQ(lam[0], 10.0);
  EXPECT_DOUBLE_EQ(lam[1], 1.0);
  EXPECT_DOUBLE_EQ(lam[2], 10.0);
}

TEST(InitLambda, ConstantAndErrors) {
  VectorXd lam = mr::init_lambda<double>(mr::InitSpec::constant(0.5), 2);
  EXPECT_EQ(lam, VectorXd::Constant(2, 0.5));
  EXPECT_THROW(mr::init_lambda<double>(mr::InitSpec::lasso_informed(), 3), mr::InvalidInputError);
  MatrixXd wrong_rows{{0.0}, {1.0}};
  EXPECT_THROW(mr::init_lambda<double>(mr::InitSpec::lasso_informed(), 3, &wrong_rows),
               mr::InvalidInputError);
}

TEST(Optimize, RejectsZeroEpochs) {
  mr::OptimConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), mr::InvalidInputError);
}

TEST(Optimize, NoOpStepKeepsInitialLambda) {
  auto data = shrinkage_instance(3, 40, 2);
  auto plan = mr::partition_folds(40, 5, 3);
  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Constant(2, 0.7);
  mr::OptimConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  auto result = mr::optimize(data, plan, hp, cfg);
  EXPECT_EQ(result.lambda_star, hp.lambda);
  ASSERT_EQ(result.history.size(), 1u);
  EXPECT_EQ(result.epochs_run, 1);
}

TEST(Optimize, ScalarProblemReachesGridScanMinimum) {
  auto data = shrinkage_instance(3, 60, 1);
  auto plan = mr::partition_folds(60, 5, 3);
  mr::CvEngine<double> engine(data, plan);

  // Dense scan of E over lambda in [0, 5].
  double best_lambda = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  mr::HyperParams<double> probe;
  probe.lambda = VectorXd::Zero(1);
  for (int i = 0; i <= 5000; ++i) {
    probe.lambda[0] = 5.0 * double(i) / 5000.0;
    const double value = engine.evaluate(probe).value;
    if (value < best_value) {
      best_value = value;
      best_lambda = probe.lambda[0];
    }
  }
  ASSERT_GT(best_lambda, 0.01) << "grid minimum is not interior";
  ASSERT_LT(best_lambda, 4.99) << "grid minimum is not interior";

  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Ones(1);
  mr::OptimConfig cfg;
  cfg.learning_rate = 2.0;
  cfg.decay = 1.0;
  cfg.epochs = 4000;
  auto result = mr::optimize(data, plan, hp, cfg);
  EXPECT_NEAR(std::abs(result.lambda_star[0]), best_lambda, 1e-3);
}

TEST(Optimize, HistoryFollowsDecaySchedule) {
  auto data = shrinkage_instance(11, 50, 3);
  auto plan = mr::partition_folds(50, 5, 11);
  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Ones(3);
  mr::OptimConfig cfg;
  cfg.learning_rate = 5.0;
  cfg.decay = 0.95;
  cfg.epochs = 40;
  auto result = mr::optimize(data, plan, hp, cfg);
  ASSERT_EQ(result.history.size(), 40u);
  for (int t = 0; t < 40; ++t) {
    EXPECT_EQ(result.history[t].lr, 5.0 * std::pow(0.95, t));
    EXPECT_TRUE(std::isfinite(result.history[t].value));
  }
  // Descent sanity at a tame learning rate.
  EXPECT_LE(result.history.back().value, result.history.front().value);

  cfg.record_history = false;
  auto quiet = mr::optimize(data, plan, hp, cfg);
  EXPECT_TRUE(quiet.history.empty());
  EXPECT_EQ(quiet.lambda_star, result.lambda_star);
}

TEST(Optimize, DeterministicAcrossRuns) {
  auto data = shrinkage_instance(13, 60, 4);
  auto plan = mr::partition_folds(60, 5, 13);
  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Ones(4);
  hp.gamma_set = {0.5, 1.0, 2.0};
  mr::OptimConfig cfg;
  cfg.learning_rate = 3.0;
  cfg.epochs = 50;
  auto a = mr::optimize(data, plan, hp, cfg);
  auto b = mr::optimize(data, plan, hp, cfg);
  EXPECT_EQ(a.lambda_star, b.lambda_star);
  EXPECT_EQ(a.theta_final, b.theta_final);
}

TEST(Optimize, FinalRefitSatisfiesNormalEquations) {
  auto data = shrinkage_instance(17, 50, 3);
  auto plan = mr::partition_folds(50, 5, 17);
  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Ones(3);
  mr::OptimConfig cfg;
  cfg.learning_rate = 1.0;
  cfg.epochs = 20;
  auto result = mr::optimize(data, plan, hp, cfg);
  MatrixXd w = data.X.transpose() * data.X;
  w.diagonal() += 50.0 * result.lambda_star.array().square().matrix();
  MatrixXd xty = data.X.transpose() * data.Y;
  EXPECT_LE((w * result.theta_final - xty).norm(), 1e-8 * xty.norm());
}

TEST(Optimize, DivergenceRaisesWithEpochAndLastIterate) {
  auto data = shrinkage_instance(19, 40, 2);
  auto plan = mr::partition_folds(40, 5, 19);
  mr::HyperParams<double> hp;
  hp.lambda = VectorXd::Ones(2);
  mr::OptimConfig cfg;
  cfg.learning_rate = 1e308;  // overflows the first update
  cfg.epochs = 5;
  try {
    mr::optimize(data, plan, hp, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const mr::DivergenceError& err) {
    EXPECT_GE(err.epoch, 1);
    ASSERT_EQ(err.last_finite_lambda.size(), 2u);
    for (double v : err.last_finite_lambda) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(Optimize, DerivesInitialLambdaFromConfig) {
  auto data = shrinkage_instance(23, 40, 3);
  auto plan = mr::partition_folds(40, 5, 23);
  mr::HyperParams<double> hp;  // empty lambda: derived from cfg.init
  mr::OptimConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  cfg.init = mr::InitSpec::constant(2.5);
  auto result = mr::optimize(data, plan, hp, cfg);
  EXPECT_EQ(result.lambda_star, VectorXd::Constant(3, 2.5));

  cfg.init = mr::InitSpec::lasso_informed();
  EXPECT_THROW(mr::optimize(data, plan, hp, cfg), mr::InvalidInputError);
}
