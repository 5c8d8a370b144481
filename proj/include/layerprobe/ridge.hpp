#pragma once

#include <Eigen/Core>

namespace layerprobe {

struct RidgeFit {
  Eigen::VectorXd weights;  // in the units of the original predictors
  double intercept = 0.0;

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    return (X * weights).array() + intercept;
  }
};

// Centered ridge problem on fixed training data, solvable for many alphas.
//
// Columns of X and y are centered on the training rows (optionally X is also
// scaled to unit variance). For n >= p the primal system
//   (Xc'Xc + alpha I) w = Xc'yc
// is factored with Cholesky; for n < p the dual system
//   (Xc Xc' + alpha I) c = yc,  w = Xc'c
// is used instead. Both give the same w. The Gram matrix is formed once in
// the constructor.
class RidgeProblem {
 public:
  RidgeProblem(const Eigen::Ref<const Eigen::MatrixXd>& X,
               const Eigen::Ref<const Eigen::VectorXd>& y, bool standardize = false);

  RidgeFit solve(double alpha) const;

  bool uses_dual() const { return dual_; }
  Eigen::Index rows() const { return n_; }
  Eigen::Index cols() const { return p_; }

 private:
  Eigen::Index n_ = 0;
  Eigen::Index p_ = 0;
  bool dual_ = false;
  double y_mean_ = 0.0;
  Eigen::RowVectorXd x_mean_;
  Eigen::RowVectorXd x_scale_;  // all ones unless standardizing
  Eigen::MatrixXd xc_;          // kept only for the dual form
  Eigen::MatrixXd gram_;
  Eigen::VectorXd rhs_;
};

// One-shot convenience wrapper around RidgeProblem.
RidgeFit ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& X,
                     const Eigen::Ref<const Eigen::VectorXd>& y, double alpha);

}  // namespace layerprobe
