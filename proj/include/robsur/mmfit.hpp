// Efficiency-tuned MM-refinement of an S-fit.
//
// With the first-stage scale sigma_tilde = |Sigma_tilde|^(1/2m) held fixed,
// the refinement minimizes (1/n) sum_i rho1(d_i) over the coefficients and a
// determinant-one shape Gamma, where d_i^2 = e_i' Gamma^{-1} e_i /
// sigma_tilde^2.  The estimating equations are the weighted GLS step and
//   Gamma = |V|^{-1/m} V,   V = sum_i w1(d_i) e_i e_i',
// iterated from the S-fit.  The efficient M-scale reported alongside is
//   sigma_hat = sigma_tilde * sqrt((1/(n delta1)) sum_i rho1(d_i)).
#pragma once

#include "robsur/constants.hpp"
#include "robsur/model.hpp"
#include "robsur/sfit.hpp"

namespace robsur {

struct MMFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd Gamma;   // |Gamma| = 1
  Eigen::MatrixXd Sigma;   // sigma_tilde^2 Gamma
  double scale = 0.0;      // efficient M-scale sigma_hat
  double s_scale = 0.0;    // first-stage scale sigma_tilde
  double objective = 0.0;  // (1/n) sum rho1(d_i) at the solution
  int iterations = 0;
};

MMFit mm_refine(const StackedDesign& d, const LossPair& loss, const SFit& s,
                double tol = 1e-11, int max_iter = 500,
                bool diagonal = false);

// Convenience: S-fit followed by MM-refinement with shared options.
struct RobustFit {
  SFit s;
  MMFit mm;
};

RobustFit robust_fit(const StackedDesign& d, const LossPair& loss,
                     const SOptions& opt);

}  // namespace robsur
