// Tuning constants and moment functionals of the bisquare family under the
// m-variate standard normal model.
//
// Every expectation here is of the form E[f(d)] with d = ||e||, e ~ N_m(0, I),
// i.e. d follows a chi distribution with m degrees of freedom.  They are
// evaluated by adaptive Gauss-Kronrod quadrature on [0, c] plus the exact
// tail mass where the integrand is constant (rho) or zero (psi, w, ...).
//
// Two root finders turn targets into tuning constants:
//   tune_breakdown(bdp, m)    c0 with  E[rho_c0(d)] = bdp * rho_max(c0),
//                             giving an S-estimator with breakdown point bdp;
//   tune_efficiency(eff, m)   c1 with  shape efficiency m eta^2 / alpha = eff,
//                             the asymptotic efficiency of the coefficient
//                             estimator relative to the Gaussian MLE.
#pragma once

#include <functional>

#include "robsur/bisquare.hpp"

namespace robsur {

// E[f(d)], d ~ chi_m, for f that vanishes beyond the integration limit
// `upper` (pass the bisquare tuning constant) plus an optional constant tail
// value f(x) = tail for x > upper.
double chi_moment(int m, double upper, const std::function<double(double)>& f,
                  double tail = 0.0);

// E[rho(d)] under N_m(0, I); the consistency constant delta for the M-scale.
double consistency_delta(const Bisquare& rho, int m);

// Asymptotic efficiency of the coefficient estimate for tuning constant c.
double shape_efficiency(double c, int m);

double tune_breakdown(double bdp, int m);
double tune_efficiency(double eff, int m);

// Moment functionals entering the asymptotic distributions.  All are
// expectations at the m-variate standard normal model.
struct AsymptoticConstants {
  double c = 0.0;       // tuning constant these were computed for
  double delta = 0.0;   // E rho(d)
  double eta = 0.0;     // E[(1 - 1/m) w(d) + (1/m) psi'(d)]
  double gamma = 0.0;   // E[psi(d) d]
  double alpha = 0.0;   // E[psi(d)^2]
  double beta2 = 0.0;   // E[psi(d)^2 d^2]
  double are = 0.0;     // m eta^2 / alpha
  double asv_factor = 0.0;  // alpha / (m eta^2): coefficient ASV multiplier
  double lr_kappa = 0.0;    // alpha / (eta gamma): LR-type test scaling
  double lm_kappa = 0.0;    // m beta2 / ((m+2) gamma^2): score-type scaling
};

AsymptoticConstants normal_constants(const Bisquare& rho, int m);

// The pair of loss functions used by the two-stage estimator, with their
// consistency constants.  Results are cached per (m, bdp, eff).
struct LossPair {
  int m = 0;
  double bdp = 0.5;       // breakdown point of the first stage
  double eff = 0.9;       // shape efficiency of the second stage
  Bisquare rho0;          // first stage (high breakdown)
  Bisquare rho1;          // second stage (high efficiency)
  double delta0 = 0.0;    // E rho0(d)
  double delta1 = 0.0;    // E rho1(d)
};

LossPair make_loss_pair(int m, double bdp = 0.5, double eff = 0.9);

}  // namespace robsur
