#include "layerprobe/ridge.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "layerprobe/csv.hpp"
#include "layerprobe/errors.hpp"

namespace layerprobe {

RidgeProblem::RidgeProblem(const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y, bool standardize)
    : n_(X.rows()), p_(X.cols()) {
  if (n_ < 1) throw DataError("ridge: need at least one training row");
  if (y.size() != n_)
    throw DataError("ridge: X has " + std::to_string(n_) + " rows but y has " +
                    std::to_string(y.size()) + " entries");
  if (!X.allFinite() || !y.allFinite()) throw DataError("ridge: non-finite input");

  y_mean_ = y.mean();
  x_mean_ = X.colwise().mean();
  Eigen::MatrixXd xc = X.rowwise() - x_mean_;
  x_scale_ = Eigen::RowVectorXd::Ones(p_);
  if (standardize) {
    for (Eigen::Index j = 0; j < p_; ++j) {
      const double sd = std::sqrt(xc.col(j).squaredNorm() / static_cast<double>(n_));
      if (sd > 0.0) {
        x_scale_(j) = sd;
        xc.col(j) /= sd;
      }
    }
  }
  const Eigen::VectorXd yc = y.array() - y_mean_;

  dual_ = n_ < p_;
  if (dual_) {
    gram_ = Eigen::MatrixXd::Zero(n_, n_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(xc);
    rhs_ = yc;
    xc_ = std::move(xc);
  } else {
    gram_ = Eigen::MatrixXd::Zero(p_, p_);
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    rhs_ = xc.transpose() * yc;
  }
}

RidgeFit RidgeProblem::solve(double alpha) const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw DataError("ridge: alpha must be positive and finite, got " + text::format_double(alpha));

  Eigen::MatrixXd system = gram_;
  system.diagonal().array() += alpha;
  Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(system);
  if (llt.info() != Eigen::Success) {
    const auto diag = gram_.diagonal();
    throw NumericError("ridge: Cholesky factorization failed (alpha=" +
                       text::format_double(alpha) + ", gram diagonal range [" +
                       text::format_double(diag.minCoeff()) + ", " +
                       text::format_double(diag.maxCoeff()) + "])");
  }
  const Eigen::VectorXd sol = llt.solve(rhs_);
  Eigen::VectorXd w = dual_ ? Eigen::VectorXd(xc_.transpose() * sol) : sol;
  if (!w.allFinite())
    throw NumericError("ridge: non-finite weights (alpha=" + text::format_double(alpha) + ")");

  RidgeFit fit;
  fit.weights = w.array() / x_scale_.transpose().array();
  fit.intercept = y_mean_ - x_mean_.dot(fit.weights);
  return fit;
}

RidgeFit ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y, double alpha) {
  return RidgeProblem(X, y).solve(alpha);
}

}  // namespace layerprobe
