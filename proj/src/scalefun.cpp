#include "robsur/scalefun.hpp"

#include <cmath>

#include "robsur/errors.hpp"
#include "robsur/gfun.hpp"
#include "robsur/mscale.hpp"

namespace robsur {
namespace {

// Distances d_i = sqrt(e_i(beta)' phi(S)^{-1} e_i(beta)).
Eigen::VectorXd shape_distances(const StackedDesign& d,
                                const Eigen::VectorXd& beta,
                                const Eigen::MatrixXd& S) {
  const int m = d.m;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericError("scale statistic: shape matrix is not positive definite");
  double logdet = 0.0;
  const Eigen::MatrixXd L = llt.matrixL();
  for (int j = 0; j < m; ++j) logdet += std::log(L(j, j));
  // e' phi(S)^{-1} e = |S|^{1/m} e'S^{-1}e: scale the distance by |S|^{1/2m}.
  const double root = std::exp(logdet / m);  // |S|^{1/(2m)}
  Eigen::VectorXd dist(d.n);
  for (int i = 0; i < d.n; ++i) {
    const Eigen::VectorXd e = d.residual(i, beta);
    dist[i] = root * std::sqrt(std::max(0.0, e.dot(llt.solve(e))));
  }
  return dist;
}

}  // namespace

double s_scale_stat(const StackedDesign& d, const LossPair& loss,
                    const Eigen::VectorXd& beta, const Eigen::MatrixXd& S,
                    const Eigen::VectorXd& counts) {
  return mscale(shape_distances(d, beta, S), counts, loss.rho0, loss.delta0);
}

double mm_scale_stat(const StackedDesign& d, const LossPair& loss,
                     const Eigen::VectorXd& beta, const Eigen::MatrixXd& Gamma,
                     double s_tilde, const Eigen::VectorXd& counts) {
  if (!(s_tilde > 0.0))
    throw NumericError("scale statistic: nonpositive first-stage scale");
  const Eigen::VectorXd dist = shape_distances(d, beta, Gamma);
  double acc = 0.0, wsum = 0.0;
  for (int i = 0; i < d.n; ++i) {
    acc += counts[i] * loss.rho1.rho(dist[i] / s_tilde);
    wsum += counts[i];
  }
  if (!(wsum > 0.0)) throw NumericError("scale statistic: zero resample mass");
  return s_tilde * std::sqrt(acc / (loss.delta1 * wsum));
}

ScalePair replicate_scales(const StackedDesign& d, const LossPair& loss,
                           const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& counts, bool diagonal) {
  Eigen::VectorXd bmm, bs;
  Eigen::MatrixXd Gam, Sig;
  theta_unpack(theta, d.m, d.p, bmm, Gam, Sig, bs, diagonal);
  ScalePair out;
  out.s_tilde = s_scale_stat(d, loss, bs, Sig, counts);
  if (out.s_tilde > 0.0)
    out.sigma_hat = mm_scale_stat(d, loss, bmm, Gam, out.s_tilde, counts);
  return out;
}

}  // namespace robsur
