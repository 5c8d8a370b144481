#include "layerprobe/ridge.hpp"

#include <limits>
#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "layerprobe/errors.hpp"

namespace layerprobe {
namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& gen, int n, int p, double offset = 0.0) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = z(gen) * (1.0 + j) + offset;
  return X;
}

TEST(Ridge, ScalarCaseMatchesHandComputation) {
  // x = {0, 2}, y = {4, 7}: Sxx = 2, Sxy = 3, alpha = 4 -> w = 3 / 6 = 0.5,
  // intercept = 5.5 - 1 * 0.5 = 5.
  Eigen::MatrixXd X(2, 1);
  X << 0, 2;
  Eigen::VectorXd y(2);
  y << 4, 7;
  const auto fit = ridge_solve(X, y, 4.0);
  EXPECT_DOUBLE_EQ(fit.weights(0), 0.5);
  EXPECT_DOUBLE_EQ(fit.intercept, 5.0);
  EXPECT_DOUBLE_EQ(fit.predict(X)(1), 6.0);
}

// SVD oracle on centered data: w = V diag(s / (s^2 + alpha)) U' yc.
Eigen::VectorXd svd_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double alpha) {
  const Eigen::MatrixXd xc = X.rowwise() - X.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd f = s.array() / (s.array().square() + alpha);
  return svd.matrixV() * f.asDiagonal() * svd.matrixU().transpose() * yc;
}

TEST(Ridge, PrimalAndDualAgreeWithSvdOracle) {
  std::mt19937_64 gen(4);
  for (auto [n, p] : {std::pair{30, 5}, std::pair{6, 25}, std::pair{12, 12}}) {
    const auto X = random_matrix(gen, n, p, 2.0);
    const Eigen::VectorXd y = random_matrix(gen, n, 1).col(0);
    const RidgeProblem problem(X, y);
    EXPECT_EQ(problem.uses_dual(), n < p);
    for (double alpha : {0.01, 1.0, 1000.0}) {
      const auto fit = problem.solve(alpha);
      const auto ref = svd_ridge(X, y, alpha);
      EXPECT_LT((fit.weights - ref).norm(), 1e-10 * (1.0 + ref.norm())) << n << "x" << p;
      EXPECT_NEAR(fit.intercept, y.mean() - X.colwise().mean().dot(ref), 1e-10);
    }
  }
}

TEST(Ridge, ReusedProblemMatchesFreshSolve) {
  std::mt19937_64 gen(8);
  const auto X = random_matrix(gen, 40, 6);
  const Eigen::VectorXd y = random_matrix(gen, 40, 1).col(0);
  const RidgeProblem problem(X, y);
  for (double alpha : {1000.0, 1778.0, 10000.0}) {
    const auto a = problem.solve(alpha);
    const auto b = ridge_solve(X, y, alpha);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.intercept, b.intercept);
  }
}

TEST(Ridge, StandardizedFitEqualsFitOnZScores) {
  std::mt19937_64 gen(15);
  const auto X = random_matrix(gen, 50, 4, 3.0);
  const Eigen::VectorXd y = random_matrix(gen, 50, 1).col(0);
  const Eigen::RowVectorXd mean = X.colwise().mean();
  Eigen::MatrixXd Z = X.rowwise() - mean;
  const Eigen::RowVectorXd sd = (Z.colwise().squaredNorm() / 50.0).array().sqrt();
  for (int j = 0; j < 4; ++j) Z.col(j) /= sd(j);
  const auto fz = ridge_solve(Z, y, 5.0);
  const auto fx = RidgeProblem(X, y, true).solve(5.0);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(fx.weights(j) * sd(j), fz.weights(j), 1e-12);
  EXPECT_LT((fx.predict(X) - fz.predict(Z)).norm(), 1e-10);
}

TEST(Ridge, WeightNormShrinksWithAlpha) {
  std::mt19937_64 gen(16);
  const auto X = random_matrix(gen, 25, 8);
  const Eigen::VectorXd y = random_matrix(gen, 25, 1).col(0);
  const RidgeProblem problem(X, y);
  double prev = 1e300;
  for (double alpha = 0.01; alpha < 1e6; alpha *= 3) {
    const double norm = problem.solve(alpha).weights.norm();
    EXPECT_LE(norm, prev);
    prev = norm;
  }
}

TEST(Ridge, RejectsBadInput) {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
  EXPECT_THROW(ridge_solve(X, y, 0.0), DataError);
  EXPECT_THROW(ridge_solve(X, y, -1.0), DataError);
  EXPECT_THROW(ridge_solve(X, Eigen::VectorXd::Ones(2), 1.0), DataError);
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(ridge_solve(X, y, 1.0), DataError);
}

TEST(Ridge, ConstantColumnsGetZeroWeight) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 7, 2, 7, 3, 7, 4, 7;
  Eigen::VectorXd y(4);
  y << 1, 2, 3, 4;
  for (bool standardize : {false, true}) {
    const auto fit = RidgeProblem(X, y, standardize).solve(1.0);
    EXPECT_EQ(fit.weights(1), 0.0);
  }
}

}  // namespace
}  // namespace layerprobe
