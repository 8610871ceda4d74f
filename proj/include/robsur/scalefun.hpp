// Scale statistics re-evaluated at replicated point estimates.
//
// The bootstrap maps point estimates through a linear correction, but test
// statistics built from scales need the scale functionals recomputed at the
// replicated estimates under the resample weights:
//   s_tilde(B, S; w): the weighted M-scale of the distances
//       d_i = sqrt(e_i(B)' phi(S)^{-1} e_i(B)),    phi(S) = |S|^{-1/m} S,
//   sigma_hat(B, G, s; w) = s sqrt(sum_i w_i rho1(d_i / s) / (delta1 sum_i w_i)),
//       d_i = sqrt(e_i(B)' phi(G)^{-1} e_i(B)).
// At the fitted estimate with unit weights these reproduce the first-stage
// scale and the efficient M-scale exactly.
#pragma once

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/model.hpp"

namespace robsur {

// Weighted first-stage scale functional.  S is any positive-definite matrix
// proportional to the error shape.  Throws NumericError when S is not
// positive definite; returns 0 on an exact fit.
double s_scale_stat(const StackedDesign& d, const LossPair& loss,
                    const Eigen::VectorXd& beta, const Eigen::MatrixXd& S,
                    const Eigen::VectorXd& counts);

// Weighted efficient scale functional at first-stage scale s_tilde.
double mm_scale_stat(const StackedDesign& d, const LossPair& loss,
                     const Eigen::VectorXd& beta, const Eigen::MatrixXd& Gamma,
                     double s_tilde, const Eigen::VectorXd& counts);

// Both scales implied by a packed (replicated) estimate.
struct ScalePair {
  double s_tilde = 0.0;
  double sigma_hat = 0.0;
};

ScalePair replicate_scales(const StackedDesign& d, const LossPair& loss,
                           const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& counts,
                           bool diagonal = false);

}  // namespace robsur
