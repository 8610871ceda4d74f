// Smooth fixed-point representation of the two-stage estimator, used by the
// fast bootstrap.
//
// The estimate is packed into a single vector
//   theta = [beta_hat; vec Gamma_hat; vec Sigma_tilde; beta_tilde]
// of dimension 2p + 2m^2 (vec is column-major).  The map g sends theta to one
// sweep of the weighted estimating equations:
//   g1 = GLS coefficients with weights w1(d_i) and scatter Gamma_hat,
//        d_i^2 = e_i(beta_hat)' Gamma_hat^{-1} e_i(beta_hat) / sigma_tilde^2,
//        sigma_tilde^2 = |Sigma_tilde|^{1/m},
//   g2 = vec phi(V),  V = sum_i w1(d_i) e_i e_i',  phi(A) = |A|^{-1/m} A,
//   g3 = vec(m Vt / sv),  Vt = sum_i w0(dt_i) et_i et_i',
//        sv = sum_i v0(dt_i),  dt_i^2 = et_i(beta_tilde)' Sigma_tilde^{-1} et_i,
//   g4 = GLS coefficients with weights w0(dt_i) and scatter Sigma_tilde.
// The fitted estimate is a fixed point of g.  A resampled estimate is
// approximated by the linear correction
//   theta* = theta + (I - grad g(theta))^{-1} (g_w(theta) - theta),
// where g_w reweights every observation sum by the resample multiplicities.
// Recomputing only g_w per resample is what makes the bootstrap fast.
//
// The diagonal variant restricts Gamma_hat and Sigma_tilde to diagonal
// matrices: off-diagonal coordinates are ignored on input, mapped to zero on
// output, and carry identically zero gradient rows and columns.
#pragma once

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"

namespace robsur {

inline int theta_dim(int m, int p) { return 2 * p + 2 * m * m; }

Eigen::VectorXd theta_pack(const RobustFit& fit);

// Inverse of theta_pack.  In diagonal mode the off-diagonal entries of the
// two matrices are dropped.
void theta_unpack(const Eigen::VectorXd& theta, int m, int p,
                  Eigen::VectorXd& beta_mm, Eigen::MatrixXd& Gamma,
                  Eigen::MatrixXd& Sigma_s, Eigen::VectorXd& beta_s,
                  bool diagonal = false);

// One sweep of the weighted estimating equations.  counts holds one
// multiplicity per observation (all ones recovers the plain map); it is not
// required to be integral, which leave-one-out weights rely on.  Matrix
// inverses are general (not symmetry-aware), so directional derivatives along
// arbitrary coordinate perturbations match finite differences.  Throws
// NumericError when a weighted system is singular or a determinant is not
// positive.
Eigen::VectorXd g_eval(const StackedDesign& d, const LossPair& loss,
                       const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& counts, bool diagonal = false);

// Jacobian of the unweighted map at theta, assembled from the closed-form
// derivatives of the four components.
Eigen::MatrixXd grad_g(const StackedDesign& d, const LossPair& loss,
                       const Eigen::VectorXd& theta, bool diagonal = false);

// Alternative packing used by the bootstrap for scale-ratio test statistics:
//   theta = [beta_hat; vec Gamma_hat; vec Gamma_tilde; beta_tilde]
// where Gamma_tilde = |Sigma_tilde|^{-1/m} Sigma_tilde is the unit-determinant
// first-stage shape.  The first-stage scale is not a coordinate of theta:
// every evaluation re-solves the M-scale equation
//   sum_i c_i rho0(dt_i / s) = delta0 sum_i c_i,
//   dt_i^2 = et_i(beta_tilde)' Gamma_tilde^{-1} et_i(beta_tilde),
// exactly for the resample at hand, and the map mirrors g with distances
// standardized by that scale:
//   g1 = GLS coefficients with weights w1(d_i) and scatter Gamma_hat,
//        d_i = sqrt(e_i(beta_hat)' Gamma_hat^{-1} e_i(beta_hat)) / s,
//   g2 = vec phi(V),   V  = sum_i c_i w1(d_i) e_i e_i',
//   g3 = vec phi(Vt),  Vt = sum_i c_i w0(dt_i / s) et_i et_i',
//   g4 = GLS coefficients with weights w0(dt_i / s) and scatter Gamma_tilde.
// Re-solving the scale instead of linearizing it keeps each replicate's scale
// exactly consistent with its shape, which stabilizes scale functionals in
// small samples where linearized covariance replicates often lose positive
// definiteness.  grad_g_shape differentiates through the implicit scale, so
// the Gamma_tilde and beta_tilde columns carry rank-one terms proportional to
// the scale gradient.

Eigen::VectorXd theta_pack_shape(const RobustFit& fit);

Eigen::VectorXd g_eval_shape(const StackedDesign& d, const LossPair& loss,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& counts,
                             bool diagonal = false);

Eigen::MatrixXd grad_g_shape(const StackedDesign& d, const LossPair& loss,
                             const Eigen::VectorXd& theta,
                             bool diagonal = false);

// Which fixed-point representation a correction linearizes.
enum class ThetaPacking { covariance, shape };

// Linear bootstrap correction factor (I - grad g)^{-1}, stored factored.
class FrbCorrection {
 public:
  FrbCorrection(const StackedDesign& d, const LossPair& loss,
                const Eigen::VectorXd& theta, bool diagonal = false,
                ThetaPacking packing = ThetaPacking::covariance);

  // theta + (I - grad g)^{-1} (g_w - theta) for the weighted sweep g_w.
  Eigen::VectorXd replicate(const Eigen::VectorXd& g_w) const;

  const Eigen::VectorXd& theta() const { return theta_; }
  ThetaPacking packing() const { return packing_; }

 private:
  Eigen::VectorXd theta_;
  ThetaPacking packing_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;  // factors I - grad g
};

}  // namespace robsur
