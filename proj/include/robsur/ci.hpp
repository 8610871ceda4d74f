// Confidence intervals for the stacked coefficient vector.
//
// Three constructions are provided:
//
//   * asymptotic (AS): beta_hat_k +/- z_{1-a/2} sqrt(ASV_kk / n), with the
//     coefficient asymptotic variance alpha1 / (m eta1^2) E[X' S^-1 X]^{-1}
//     estimated by plugging the fitted standardized distances into the
//     psi-moment expectations and averaging X' S^-1 X over the sample;
//   * basic percentile (BP): interpolated order statistics of the bootstrap
//     replicates at levels a/2 and 1 - a/2;
//   * bias-corrected and accelerated (BCa): percentile levels shifted by the
//     bias correction z0 (normal quantile of the fraction of replicates
//     below the estimate) and the acceleration (jackknife skewness computed
//     from leave-one-out one-step approximations, so no refits are needed).
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/frb.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"

namespace robsur {

enum class CiMethod { asymptotic, percentile, bca };

struct CiResult {
  int parameter = 0;  // index into the stacked coefficient vector
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  CiMethod method = CiMethod::asymptotic;
  double level = 0.95;
};

// Empirical coefficient asymptotic variance matrix (p x p) at an MM fit;
// pass loss.rho0 moments by fitting with rho1 = rho0 for the S version.
Eigen::MatrixXd asv_beta(const StackedDesign& d, const LossPair& loss,
                         const MMFit& fit);

std::vector<CiResult> ci_asymptotic(const StackedDesign& d,
                                    const LossPair& loss, const MMFit& fit,
                                    double level = 0.95);

// Leave-one-out one-step coefficient approximations (n x p), row i holding
// the corrected estimate with observation i removed.  Input for the BCa
// acceleration.
Eigen::MatrixXd jackknife_betas(const StackedDesign& d, const LossPair& loss,
                                const FrbCorrection& corr);

// Percentile intervals from bootstrap draws whose leading p columns carry
// the coefficient replicates.  `jackknife` enables the acceleration term
// for the BCa method; when absent the acceleration is zero.
std::vector<CiResult> ci_percentile(const FrbDraws& draws,
                                    const Eigen::VectorXd& estimate,
                                    double level, CiMethod method,
                                    const Eigen::MatrixXd* jackknife = nullptr);

}  // namespace robsur
