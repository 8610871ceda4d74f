#include "robsur/classical.hpp"

#include "robsur/errors.hpp"

namespace robsur {

Eigen::VectorXd weighted_gls(const StackedDesign& d, const Eigen::MatrixXd& A,
                             const Eigen::VectorXd& c) {
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(d.p, d.p);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(d.p);
  for (int i = 0; i < d.n; ++i) {
    const double ci = c.size() ? c[i] : 1.0;
    if (ci == 0.0) continue;
    const auto& xi = d.x[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd Axi = A * xi;                    // m x p
    U.noalias() += ci * xi.transpose() * Axi;
    W.noalias() += ci * Axi.transpose() * d.Y.row(i).transpose();
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(U);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("weighted_gls: normal equations not factorizable");
  const Eigen::VectorXd beta = ldlt.solve(W);
  const double resid = (U * beta - W).norm();
  if (!beta.allFinite() || resid > 1e-8 * (1.0 + W.norm()))
    throw NumericError("weighted_gls: weighted design is singular");
  return beta;
}

OlsFit ols_fit(const StackedDesign& d) {
  if (!d.block_diagonal())
    throw ConfigError("ols_fit: requires a block-diagonal design");
  OlsFit fit;
  fit.beta.resize(d.p);
  // Solve each block separately; assemble the n x p_j block design from the
  // per-observation rows.
  for (std::size_t jj = 0; jj < d.block_cols.size(); ++jj) {
    const int j = static_cast<int>(jj);
    const auto [b, e] = d.block_cols[jj];
    const int pj = e - b;
    Eigen::MatrixXd Xj(d.n, pj);
    for (int i = 0; i < d.n; ++i)
      Xj.row(i) = d.x[static_cast<std::size_t>(i)].block(j, b, 1, pj);
    const Eigen::VectorXd yj = d.Y.col(j);
    const Eigen::VectorXd bj =
        Xj.colPivHouseholderQr().solve(yj);
    if (!bj.allFinite() || (Xj.transpose() * (Xj * bj - yj)).norm() >
                               1e-8 * (1.0 + (Xj.transpose() * yj).norm()))
      throw NumericError("ols_fit: singular block design");
    fit.beta.segment(b, pj) = bj;
  }
  fit.residuals = d.residual_matrix(fit.beta);
  return fit;
}

namespace {

// One covariance update with divisor n; throws when singular.
Eigen::MatrixXd covariance_step(const StackedDesign& d, const Eigen::VectorXd& beta) {
  const Eigen::MatrixXd E = d.residual_matrix(beta);
  Eigen::MatrixXd S = E.transpose() * E / static_cast<double>(d.n);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw DegenerateDataError("mle_fit: singular error covariance");
  return S;
}

MleFit iterate_gls(const StackedDesign& d, Eigen::VectorXd beta, bool diagonal,
                   double tol, int max_iter) {
  MleFit fit;
  const auto drop_offdiag = [](Eigen::MatrixXd& S) {
    const Eigen::VectorXd dg = S.diagonal();
    S = dg.asDiagonal();
  };
  Eigen::MatrixXd Sigma = covariance_step(d, beta);
  if (diagonal) drop_offdiag(Sigma);
  for (int it = 1; it <= max_iter; ++it) {
    const Eigen::MatrixXd Sinv =
        Sigma.llt().solve(Eigen::MatrixXd::Identity(d.m, d.m));
    const Eigen::VectorXd beta_new = weighted_gls(d, Sinv);
    Eigen::MatrixXd Sigma_new = covariance_step(d, beta_new);
    if (diagonal) drop_offdiag(Sigma_new);
    const double db = (beta_new - beta).cwiseAbs().maxCoeff() /
                      (1.0 + beta.cwiseAbs().maxCoeff());
    const double ds = (Sigma_new - Sigma).cwiseAbs().maxCoeff() /
                      (1.0 + Sigma.cwiseAbs().maxCoeff());
    beta = beta_new;
    Sigma = Sigma_new;
    fit.iterations = it;
    if (db < tol && ds < tol) break;
  }
  fit.beta = beta;
  fit.Sigma = Sigma;
  return fit;
}

}  // namespace

MleFit mle_fit(const StackedDesign& d, double tol, int max_iter) {
  if (d.m >= d.n)
    throw DegenerateDataError(
        "mle_fit: error covariance is singular when the number of blocks "
        "reaches the number of observations");
  Eigen::VectorXd beta0;
  if (d.block_diagonal()) {
    beta0 = ols_fit(d).beta;
  } else {
    beta0 = weighted_gls(d, Eigen::MatrixXd::Identity(d.m, d.m));
  }
  return iterate_gls(d, beta0, /*diagonal=*/false, tol, max_iter);
}

MleFit mle_fit_diagonal(const StackedDesign& d, double tol, int max_iter) {
  if (d.m >= d.n)
    throw DegenerateDataError(
        "mle_fit_diagonal: error covariance is singular when the number of "
        "blocks reaches the number of observations");
  Eigen::VectorXd beta0;
  if (d.block_diagonal()) {
    beta0 = ols_fit(d).beta;
  } else {
    beta0 = weighted_gls(d, Eigen::MatrixXd::Identity(d.m, d.m));
  }
  return iterate_gls(d, beta0, /*diagonal=*/true, tol, max_iter);
}

}  // namespace robsur
