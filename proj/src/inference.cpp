#include "robsur/inference.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "robsur/classical.hpp"
#include "robsur/errors.hpp"
#include "robsur/frb.hpp"
#include "robsur/gfun.hpp"
#include "robsur/mscale.hpp"
#include "robsur/parallel.hpp"
#include "robsur/prob.hpp"
#include "robsur/scalefun.hpp"
#include "robsur/sfit.hpp"

namespace robsur {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Distances d_i = sqrt(e_i(beta)' S^{-1} e_i(beta)) under a covariance S.
Eigen::VectorXd cov_distances(const StackedDesign& d,
                              const Eigen::VectorXd& beta,
                              const Eigen::MatrixXd& S) {
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericError("covariance is not positive definite");
  Eigen::VectorXd dist(d.n);
  for (int i = 0; i < d.n; ++i) {
    const Eigen::VectorXd e = d.residual(i, beta);
    dist[i] = std::sqrt(std::max(0.0, e.dot(llt.solve(e))));
  }
  return dist;
}

// Empirical scaling for LR-type tests: alpha / (eta gamma) with the psi
// moments evaluated at the fitted standardized distances.
double lr_kappa_hat(const Eigen::VectorXd& dist, const Bisquare& rho, int m) {
  double alpha = 0.0, eta = 0.0, gam = 0.0;
  const int n = static_cast<int>(dist.size());
  for (int i = 0; i < n; ++i) {
    const double u = dist[i];
    const double psi = rho.psi(u);
    alpha += psi * psi;
    gam += psi * u;
    eta += (1.0 - 1.0 / m) * rho.w(u) + (1.0 / m) * rho.dpsi(u);
  }
  if (!(gam > 0.0) || !(eta > 0.0))
    throw NumericError("degenerate psi moments in test scaling");
  return (alpha / n) / ((eta / n) * (gam / n));
}

// Empirical scaling for score-type tests: m beta2 / ((m+2) gamma^2).
double lm_kappa_hat(const Eigen::VectorXd& dist, const Bisquare& rho, int m) {
  double beta2 = 0.0, gam = 0.0;
  const int n = static_cast<int>(dist.size());
  for (int i = 0; i < n; ++i) {
    const double psi = rho.psi(dist[i]);
    beta2 += psi * psi * dist[i] * dist[i];
    gam += psi * dist[i];
  }
  if (!(gam > 0.0)) throw NumericError("degenerate psi moments in test scaling");
  return m * (beta2 / n) / ((m + 2) * (gam / n) * (gam / n));
}

// Gaussian-score version of the same scaling, psi(d) = d.
double lm_kappa_hat_mle(const Eigen::VectorXd& dist, int m) {
  double m2 = 0.0, m4 = 0.0;
  const int n = static_cast<int>(dist.size());
  for (int i = 0; i < n; ++i) {
    const double q = dist[i] * dist[i];
    m2 += q;
    m4 += q * q;
  }
  m2 /= n;
  m4 /= n;
  return m * m4 / ((m + 2) * m2 * m2);
}

// Weighted diagonality statistic: (sum_i c_i) sum_{j<k} r_jk^2 with
// r_jk = S_jk / sqrt(S_jj S_kk), S = sum_i c_i w_i e_i e_i'.
double lm_stat(const Eigen::MatrixXd& E, const Eigen::VectorXd& w,
               const Eigen::VectorXd& counts) {
  const int m = static_cast<int>(E.cols());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (int i = 0; i < E.rows(); ++i) {
    const double cw = counts[i] * w[i];
    total += counts[i];
    if (cw != 0.0)
      S.noalias() += cw * (E.row(i).transpose() * E.row(i));
  }
  double acc = 0.0;
  for (int j = 0; j < m; ++j) {
    if (!(S(j, j) > 0.0)) throw NumericError("degenerate block in diagonality statistic");
    for (int k = j + 1; k < m; ++k)
      acc += S(j, k) * S(j, k) / (S(j, j) * S(k, k));
  }
  return total * acc;
}

StackedDesign with_response(const StackedDesign& d, const Eigen::MatrixXd& Y0) {
  StackedDesign out = d;
  out.Y = Y0;
  return out;
}

// Reduced design carrying a new full-coordinate response Y0.
StackedDesign reduced_with_response(const StackedDesign& d,
                                    const ReducedModel& red,
                                    const Eigen::MatrixXd& Y0) {
  StackedDesign out = red.design;
  for (int i = 0; i < d.n; ++i)
    out.Y.row(i) =
        Y0.row(i) - (d.x[static_cast<std::size_t>(i)] * red.beta0).transpose();
  return out;
}

// Row expansion by integral resample counts, for refitting bootstraps.
StackedDesign expand_rows(const StackedDesign& d, const Eigen::VectorXd& counts) {
  StackedDesign out;
  out.m = d.m;
  out.p = d.p;
  out.block_cols = d.block_cols;
  int total = 0;
  for (int i = 0; i < d.n; ++i) total += static_cast<int>(counts[i]);
  out.n = total;
  out.Y.resize(total, d.m);
  out.x.reserve(static_cast<std::size_t>(total));
  int row = 0;
  for (int i = 0; i < d.n; ++i)
    for (int k = 0; k < static_cast<int>(counts[i]); ++k) {
      out.x.push_back(d.x[static_cast<std::size_t>(i)]);
      out.Y.row(row++) = d.Y.row(i);
    }
  return out;
}

// Restricted refit: full refinement from a warm start plus a fresh random
// search, keeping whichever reaches the lower scale.
RobustFit restricted_robust_fit(const StackedDesign& dred, const LossPair& loss,
                                const SOptions& fresh, const SFit* warm,
                                bool diagonal) {
  SOptions opt = fresh;
  opt.diagonal = diagonal;
  bool have = false;
  SFit best;
  if (warm != nullptr) {
    try {
      best = s_refine(dred, loss, warm->beta, warm->Sigma, 1e-13, 2000, diagonal);
      have = true;
    } catch (const NumericError&) {
      // fall through to the fresh search
    }
  }
  try {
    const SFit cand = s_fit(dred, loss, opt);
    if (!have || cand.scale < best.scale) best = cand;
    have = true;
  } catch (const DegenerateDataError&) {
    if (!have) throw;
  }
  RobustFit out;
  out.s = best;
  out.mm = mm_refine(dred, loss, best, 1e-13, 2000, diagonal);
  return out;
}

void finish_boot(TestResult& out, std::vector<double> stars) {
  int ok = 0, above = 0;
  for (const double v : stars) {
    if (std::isnan(v)) continue;
    ++ok;
    if (v > out.statistic) ++above;
  }
  out.replicates_used = ok;
  out.replicates_skipped = static_cast<int>(stars.size()) - ok;
  out.p_bootstrap = (above + 1.0) / (ok + 2.0);
  out.degenerate_bootstrap =
      out.replicates_skipped > 0.05 * static_cast<double>(stars.size());
  out.replicate_stats = std::move(stars);
}

}  // namespace

TestResult lr_test_mle(const StackedDesign& d, const Restriction& rest,
                       const TestOptions& opt) {
  const auto full = mle_fit(d, 1e-12, 500);
  const ReducedModel red = reduce_model(d, rest);
  const auto restr = mle_fit(red.design, 1e-12, 500);

  TestResult out;
  out.df = rest.count();
  out.kappa = 1.0;
  out.statistic =
      d.n * (std::log(restr.Sigma.determinant()) - std::log(full.Sigma.determinant()));
  out.p_asymptotic = chisq_upper(out.statistic, out.df);
  if (opt.replicates <= 0) return out;

  // Null data: fitted restricted mean plus full-model residuals.
  const Eigen::VectorXd beta_r = red.full_beta(restr.beta);
  Eigen::MatrixXd Y0(d.n, d.m);
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    Y0.row(i) = (x * beta_r).transpose() +
                (d.Y.row(i).transpose() - x * full.beta).transpose();
  }
  const StackedDesign d0 = with_response(d, Y0);
  const StackedDesign red0 = reduced_with_response(d, red, Y0);

  std::vector<double> stars(static_cast<std::size_t>(opt.replicates), kNan);
  parallel_for(opt.replicates, opt.threads, [&](int r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, opt.seed, r);
    try {
      const auto f = mle_fit(expand_rows(d0, counts), 1e-10, 500);
      const auto g = mle_fit(expand_rows(red0, counts), 1e-10, 500);
      stars[static_cast<std::size_t>(r)] =
          d.n * (std::log(g.Sigma.determinant()) -
                 std::log(f.Sigma.determinant()));
    } catch (const Error&) {
      // degenerate resample: dropped
    }
  });
  finish_boot(out, std::move(stars));
  return out;
}

LrRobustTests lr_test_robust(const StackedDesign& d, const LossPair& loss,
                             const RobustFit& full, const Restriction& rest,
                             const TestOptions& opt) {
  const int n = d.n, m = d.m;
  const ReducedModel red = reduce_model(d, rest);

  // Restricted fit on the observed data, warm-started from the projection of
  // the unrestricted first-stage fit onto the restriction manifold.
  SFit warm;
  warm.beta = red.Z.transpose() * (full.s.beta - red.beta0);
  warm.Sigma = full.s.Sigma;
  const RobustFit rfit =
      restricted_robust_fit(red.design, loss, opt.refit, &warm, false);

  LrRobustTests out;
  out.s.df = out.mm.df = rest.count();
  out.s.statistic = 2.0 * n * m * std::log(rfit.s.scale / full.s.scale);
  out.mm.statistic = 2.0 * n * m * std::log(rfit.mm.scale / full.mm.scale);
  out.s.kappa = lr_kappa_hat(cov_distances(d, full.s.beta, full.s.Sigma),
                             loss.rho0, m);
  const double sig_hat2 = full.mm.scale * full.mm.scale;
  out.mm.kappa = lr_kappa_hat(
      cov_distances(d, full.mm.beta, sig_hat2 * full.mm.Gamma), loss.rho1, m);
  out.s.p_asymptotic = chisq_upper(out.s.statistic / out.s.kappa, out.s.df);
  out.mm.p_asymptotic = chisq_upper(out.mm.statistic / out.mm.kappa, out.mm.df);
  if (opt.replicates <= 0) return out;

  // Null data and the shifted full-model estimate on it.
  const Eigen::VectorXd beta_r = red.full_beta(rfit.mm.beta);
  Eigen::MatrixXd Y0(n, m);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    Y0.row(i) = (x * beta_r + (d.Y.row(i).transpose() - x * full.mm.beta))
                    .transpose();
  }
  const StackedDesign d0 = with_response(d, Y0);
  Eigen::VectorXd theta0 = theta_pack_shape(full);
  theta0.head(d.p) = beta_r;
  theta0.tail(d.p) += beta_r - full.mm.beta;

  // Fresh restricted fit on the null data, warm-started from the observed
  // restricted fit.
  const StackedDesign red0 = reduced_with_response(d, red, Y0);
  const RobustFit rfit0 =
      restricted_robust_fit(red0, loss, opt.refit, &rfit.s, false);

  const FrbCorrection corr_f(d0, loss, theta0, false, ThetaPacking::shape);
  const FrbCorrection corr_r(red0, loss, theta_pack_shape(rfit0), false,
                             ThetaPacking::shape);

  std::vector<double> star_s(static_cast<std::size_t>(opt.replicates), kNan);
  std::vector<double> star_mm(star_s);
  parallel_for(opt.replicates, opt.threads, [&](int r) {
    const Eigen::VectorXd counts = multinomial_counts(n, opt.seed, r);
    try {
      const auto sc_f = replicate_scales(
          d0, loss, frb_replicate(d0, loss, corr_f, counts), counts);
      const auto sc_r = replicate_scales(
          red0, loss, frb_replicate(red0, loss, corr_r, counts), counts);
      if (sc_f.s_tilde > 0.0 && sc_r.s_tilde > 0.0)
        star_s[static_cast<std::size_t>(r)] =
            2.0 * n * m * std::log(sc_r.s_tilde / sc_f.s_tilde);
      if (sc_f.sigma_hat > 0.0 && sc_r.sigma_hat > 0.0)
        star_mm[static_cast<std::size_t>(r)] =
            2.0 * n * m * std::log(sc_r.sigma_hat / sc_f.sigma_hat);
    } catch (const Error&) {
      // degenerate resample: dropped
    }
  });
  finish_boot(out.s, std::move(star_s));
  finish_boot(out.mm, std::move(star_mm));
  return out;
}

TestResult lm_test_mle(const StackedDesign& d, const TestOptions& opt) {
  if (!d.block_diagonal())
    throw ConfigError("diagonality test requires a block design");
  const int n = d.n, m = d.m;
  const auto ols = ols_fit(d);

  TestResult out;
  out.df = m * (m - 1) / 2;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  out.statistic = lm_stat(ols.residuals, ones, ones);

  // Standardize by the per-block residual scales for the kappa moments.
  Eigen::VectorXd dist(n);
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) s2[j] = ols.residuals.col(j).squaredNorm() / n;
  for (int i = 0; i < n; ++i) {
    double q = 0.0;
    for (int j = 0; j < m; ++j)
      q += ols.residuals(i, j) * ols.residuals(i, j) / s2[j];
    dist[i] = std::sqrt(q);
  }
  out.kappa = lm_kappa_hat_mle(dist, m);
  out.p_asymptotic = chisq_upper(out.statistic / out.kappa, out.df);
  if (opt.replicates <= 0) return out;

  // Null data: full fitted means plus whitened residuals.
  const auto full = mle_fit(d, 1e-12, 500);
  const Eigen::MatrixXd E = d.residual_matrix(full.beta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full.Sigma);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericError("fitted covariance is not positive definite");
  const Eigen::MatrixXd Sroot_inv =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::MatrixXd Y0(n, m);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    Y0.row(i) = (x * full.beta).transpose() + E.row(i) * Sroot_inv;
  }
  const StackedDesign d0 = with_response(d, Y0);

  std::vector<double> stars(static_cast<std::size_t>(opt.replicates), kNan);
  parallel_for(opt.replicates, opt.threads, [&](int r) {
    const Eigen::VectorXd counts = multinomial_counts(n, opt.seed, r);
    try {
      const StackedDesign dr = expand_rows(d0, counts);
      const auto o = ols_fit(dr);
      const Eigen::VectorXd w = Eigen::VectorXd::Ones(dr.n);
      stars[static_cast<std::size_t>(r)] = lm_stat(o.residuals, w, w);
    } catch (const Error&) {
      // degenerate resample: dropped
    }
  });
  finish_boot(out, std::move(stars));
  return out;
}

LmRobustTests lm_test_robust(const StackedDesign& d, const LossPair& loss,
                             const RobustFit& full, const TestOptions& opt) {
  const int n = d.n, m = d.m;
  LmRobustTests out;
  out.s.df = out.mm.df = m * (m - 1) / 2;

  // Diagonally restricted fit on the observed data.
  SFit warm;
  warm.beta = full.s.beta;
  warm.Sigma = full.s.Sigma.diagonal().asDiagonal();
  const RobustFit dfit =
      restricted_robust_fit(d, loss, opt.refit, &warm, true);
  out.diagonal_fit = dfit;

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  // Second-stage statistic: weights from the restricted fit's estimating
  // equations (first-stage scale standardization).
  const Eigen::MatrixXd Emm = d.residual_matrix(dfit.mm.beta);
  const Eigen::VectorXd dist_mm = cov_distances(
      d, dfit.mm.beta, dfit.mm.s_scale * dfit.mm.s_scale * dfit.mm.Gamma);
  Eigen::VectorXd w_mm(n);
  for (int i = 0; i < n; ++i) w_mm[i] = loss.rho1.w(dist_mm[i]);
  out.mm.statistic = lm_stat(Emm, w_mm, ones);

  // First-stage statistic.
  const Eigen::MatrixXd Es = d.residual_matrix(dfit.s.beta);
  const Eigen::VectorXd dist_s = cov_distances(d, dfit.s.beta, dfit.s.Sigma);
  Eigen::VectorXd w_s(n);
  for (int i = 0; i < n; ++i) w_s[i] = loss.rho0.w(dist_s[i]);
  out.s.statistic = lm_stat(Es, w_s, ones);

  // Empirical chi-square scalings from model-consistent standardization.
  out.mm.kappa = lm_kappa_hat(
      cov_distances(d, dfit.mm.beta,
                    dfit.mm.scale * dfit.mm.scale * dfit.mm.Gamma),
      loss.rho1, m);
  out.s.kappa = lm_kappa_hat(dist_s, loss.rho0, m);
  out.s.p_asymptotic = chisq_upper(out.s.statistic / out.s.kappa, out.s.df);
  out.mm.p_asymptotic = chisq_upper(out.mm.statistic / out.mm.kappa, out.mm.df);
  if (opt.replicates <= 0) return out;

  // Null data: unrestricted fitted means plus whitened residuals.
  const Eigen::MatrixXd E = d.residual_matrix(full.mm.beta);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full.mm.Sigma);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericError("fitted covariance is not positive definite");
  const Eigen::MatrixXd Sroot_inv =
      es.eigenvectors() *
      es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::MatrixXd Y0(n, m);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    Y0.row(i) = (x * full.mm.beta).transpose() + E.row(i) * Sroot_inv;
  }
  const StackedDesign d0 = with_response(d, Y0);

  // Diagonally restricted refit on the null data.
  const RobustFit dfit0 =
      restricted_robust_fit(d0, loss, opt.refit, &dfit.s, true);
  const FrbCorrection corr(d0, loss, theta_pack_shape(dfit0), true,
                           ThetaPacking::shape);

  std::vector<double> star_s(static_cast<std::size_t>(opt.replicates), kNan);
  std::vector<double> star_mm(star_s);
  parallel_for(opt.replicates, opt.threads, [&](int r) {
    const Eigen::VectorXd counts = multinomial_counts(n, opt.seed, r);
    try {
      const Eigen::VectorXd th = frb_replicate(d0, loss, corr, counts, true);
      Eigen::VectorXd bmm, bs;
      Eigen::MatrixXd Gam, Gt;
      theta_unpack(th, m, d.p, bmm, Gam, Gt, bs, true);
      if (Gam.diagonal().minCoeff() <= 0.0 || Gt.diagonal().minCoeff() <= 0.0)
        return;  // leave as skipped

      // Re-solve the first-stage scale from the replicated shape.
      const double root_t = std::pow(Gt.diagonal().prod(), 1.0 / (2.0 * m));
      const Eigen::MatrixXd Ers = d0.residual_matrix(bs);
      Eigen::VectorXd dist_t(n);
      for (int i = 0; i < n; ++i) {
        double q = 0.0;
        for (int j = 0; j < m; ++j) q += Ers(i, j) * Ers(i, j) / Gt(j, j);
        dist_t[i] = root_t * std::sqrt(q);
      }
      const double st = mscale(dist_t, counts, loss.rho0, loss.delta0);
      if (!(st > 0.0)) return;

      Eigen::VectorXd ws(n);
      for (int i = 0; i < n; ++i) ws[i] = loss.rho0.w(dist_t[i] / st);
      star_s[static_cast<std::size_t>(r)] = lm_stat(Ers, ws, counts);

      const double root_g = std::pow(Gam.diagonal().prod(), 1.0 / (2.0 * m));
      const Eigen::MatrixXd Er = d0.residual_matrix(bmm);
      Eigen::VectorXd wr(n);
      for (int i = 0; i < n; ++i) {
        double q = 0.0;
        for (int j = 0; j < m; ++j) q += Er(i, j) * Er(i, j) / Gam(j, j);
        wr[i] = loss.rho1.w(root_g * std::sqrt(q) / st);
      }
      star_mm[static_cast<std::size_t>(r)] = lm_stat(Er, wr, counts);
    } catch (const Error&) {
      // degenerate resample: dropped
    }
  });
  finish_boot(out.s, std::move(star_s));
  finish_boot(out.mm, std::move(star_mm));
  return out;
}

}  // namespace robsur
