// Classical (non-robust) estimation for systems of regression blocks:
// per-block least squares, feasible GLS, and the fully iterated Gaussian
// MLE, plus the weighted GLS primitive shared with the robust estimators.
#pragma once

#include <Eigen/Dense>

#include "robsur/model.hpp"

namespace robsur {

// beta = (sum_i c_i x_i' A x_i)^{-1} sum_i c_i x_i' A ytil_i with A positive
// definite (an inverse covariance) and optional nonnegative per-observation
// multipliers c (robustness weights and/or resampling counts; empty = 1).
// Throws NumericError when the weighted normal equations are singular.
Eigen::VectorXd weighted_gls(const StackedDesign& d, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& c = Eigen::VectorXd());

struct OlsFit {
  Eigen::VectorXd beta;       // stacked p-vector
  Eigen::MatrixXd residuals;  // n x m
};

// Independent least squares per block (requires a block-diagonal design).
OlsFit ols_fit(const StackedDesign& d);

struct MleFit {
  Eigen::VectorXd beta;   // stacked coefficients
  Eigen::MatrixXd Sigma;  // error covariance, divisor n
  int iterations = 0;
};

// Iterated feasible GLS until the joint fixed point; with Gaussian errors
// this is the maximum likelihood estimate.  Starts from per-block OLS when
// the design is block diagonal, otherwise from an identity-covariance GLS.
MleFit mle_fit(const StackedDesign& d, double tol = 1e-9, int max_iter = 200);

// Gaussian MLE under the restriction that Sigma is diagonal.  For a
// block-diagonal design this reduces to per-block least squares with
// per-block residual variances (divisor n).
MleFit mle_fit_diagonal(const StackedDesign& d, double tol = 1e-9,
                        int max_iter = 200);

}  // namespace robsur
