// Outlier diagnostics for a fitted system.
//
// Two distances are attached to every observation:
//
//   * the residual distance d_i = sqrt(e_i' Sigma^-1 e_i) at the fitted
//     coefficients, measuring vertical outlyingness;
//   * the robust predictor distance RD_i, a Mahalanobis distance of the
//     pooled non-intercept predictor columns with respect to a robust
//     location/scatter estimate.  The location/scatter reuses the system
//     estimator itself: each predictor column becomes the response of an
//     intercept-only block, so the fitted intercepts are the multivariate
//     location and the fitted covariance is the scatter.
//
// Crossing the chi-square cutoffs classifies each row: large d alone is a
// vertical outlier, large RD alone good leverage, both large bad leverage.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/sfit.hpp"

namespace robsur {

enum class OutlierClass { regular, vertical_outlier, good_leverage, bad_leverage };

struct DiagnosticRecord {
  int index = 0;
  double residual_distance = 0.0;
  double robust_distance = 0.0;
  OutlierClass label = OutlierClass::regular;
};

struct DiagnosticReport {
  std::vector<DiagnosticRecord> records;
  double residual_cutoff = 0.0;   // sqrt of the chi-square quantile, m dof
  double predictor_cutoff = 0.0;  // same with predictor_dim dof
  int predictor_dim = 0;          // pooled non-intercept predictor columns
};

// Residual distances under a covariance matrix.
Eigen::VectorXd residual_distances(const StackedDesign& d,
                                   const Eigen::VectorXd& beta,
                                   const Eigen::MatrixXd& Sigma);

// Pooled non-intercept predictor columns (n x p'), by block order.
Eigen::MatrixXd predictor_matrix(const SurData& data);

// Robust location/scatter distances of the predictor rows; `bdp`/`eff`
// follow the same tuning rules as the regression estimator.
Eigen::VectorXd predictor_robust_distances(const SurData& data,
                                           const SOptions& opt,
                                           double bdp = 0.5, double eff = 0.9);

std::vector<DiagnosticRecord> classify_outliers(const Eigen::VectorXd& d,
                                                const Eigen::VectorXd& rd,
                                                double residual_cutoff,
                                                double predictor_cutoff);

// Full pipeline at an MM fit; `quantile` sets both cutoffs.
DiagnosticReport diagnose(const SurData& data, const StackedDesign& d,
                          const MMFit& fit, const SOptions& opt,
                          double quantile = 0.975, double bdp = 0.5,
                          double eff = 0.9);

}  // namespace robsur
