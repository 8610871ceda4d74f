// High-breakdown S-estimation for the stacked regression model.
//
// The estimate minimizes |Sigma| subject to the M-scale constraint
// (1/n) sum_i rho0(d_i) = delta0 with d_i^2 = e_i(beta)' Sigma^{-1} e_i(beta).
// At the optimum the pair (beta, Sigma) solves the joint fixed point
//   beta  = (sum_i w_i x_i' Sigma^{-1} x_i)^{-1} sum_i w_i x_i' Sigma^{-1} y_i
//   Sigma = m sum_i w_i e_i e_i' / sum_i v0(d_i),
// with w_i = w0(d_i) and v0(u) = psi0(u) u - rho0(u) + delta0, which the
// bootstrap correction differentiates; the constraint is implied by the
// Sigma equation, so converging the fixed point enforces it.
//
// Computation follows the fast-S recipe: random elemental starts, a few
// concentration steps each, then full fixed-point refinement of the most
// promising starts.  Candidate streams are seeded independently, so results
// do not depend on the number of threads.
#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/model.hpp"

namespace robsur {

struct SOptions {
  int candidates = 500;     // random elemental starts
  int concentration = 2;    // concentration steps per start
  int refine_best = 5;      // starts kept for full refinement
  double tol = 1e-9;        // relative fixed-point tolerance
  int max_iter = 500;       // refinement iteration cap
  std::uint64_t seed = 1;   // master seed for candidate generation
  int threads = 1;
  bool diagonal = false;    // restrict Sigma to a diagonal matrix
};

struct SFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd Sigma;  // solves the joint fixed point; |Sigma|^(1/2m) below
  double scale = 0.0;     // the minimized M-scale |Sigma|^(1/2m)
  int iterations = 0;     // refinement iterations of the winning start
};

SFit s_fit(const StackedDesign& d, const LossPair& loss, const SOptions& opt);

// Full fixed-point refinement from an explicit start; exposed for restricted
// refits that reuse a neighbouring solution.  Throws NumericError when no
// positive-definite step can be made.
SFit s_refine(const StackedDesign& d, const LossPair& loss,
              const Eigen::VectorXd& beta0, const Eigen::MatrixXd& Sigma0,
              double tol = 1e-11, int max_iter = 500, bool diagonal = false);

}  // namespace robsur
