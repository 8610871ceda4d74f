// M-scale of a vector of nonnegative distances: the root s > 0 of
//   (1/n) sum_i rho(d_i / s) = delta.
#pragma once

#include <Eigen/Dense>

#include "robsur/bisquare.hpp"

namespace robsur {

// Solves the M-scale equation by bracketing and TOMS 748.  The left side is
// nonincreasing in s with limits rho_max * #{d_i > 0}/n at 0+ and 0 at
// infinity, so a positive root exists iff delta < rho_max * #{d_i > 0}/n;
// otherwise (an "exact fit": too many zero distances) the result is 0.
// Requires 0 < delta < rho_max and all d_i >= 0.
double mscale(const Eigen::VectorXd& d, const Bisquare& rho, double delta);

// Weighted variant: the root of sum_i w_i rho(d_i / s) = delta * sum_i w_i,
// used when resample multiplicities stand in for repeated observations.
// Requires nonnegative weights with a positive sum.
double mscale(const Eigen::VectorXd& d, const Eigen::VectorXd& w,
              const Bisquare& rho, double delta);

}  // namespace robsur
