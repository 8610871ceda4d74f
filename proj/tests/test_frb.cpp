#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "robsur/constants.hpp"
#include "robsur/frb.hpp"
#include "robsur/gfun.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/mscale.hpp"
#include "robsur/rng.hpp"
#include "robsur/scalefun.hpp"
#include "robsur/sfit.hpp"

using namespace robsur;

namespace {

// Random block-diagonal system with correlated errors.  The population
// (error covariance and true coefficients) is fixed by struct_seed; the
// regressors and errors redraw with noise_seed, so fresh-sample Monte Carlo
// runs share one population.
StackedDesign random_design(std::uint64_t struct_seed, std::uint64_t noise_seed,
                            int n, const std::vector<int>& widths) {
  Rng srng(struct_seed);
  Rng rng(noise_seed);
  const int m = static_cast<int>(widths.size());
  Eigen::MatrixXd A(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) A(r, c) = srng.normal();
  Eigen::MatrixXd Sig =
      A * A.transpose() / m + 0.3 * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd L = Sig.llt().matrixL();

  std::vector<Block> blocks;
  std::vector<Eigen::VectorXd> betas;
  for (int j = 0; j < m; ++j) {
    Block b;
    b.name = "b" + std::to_string(j + 1);
    b.X.resize(n, widths[j]);
    b.X.col(0).setOnes();
    for (int c = 1; c < widths[j]; ++c)
      for (int i = 0; i < n; ++i) b.X(i, c) = rng.normal() * 2.0;
    b.y.resize(n);
    for (int c = 0; c < widths[j]; ++c)
      b.coef_names.push_back("c" + std::to_string(c));
    Eigen::VectorXd beta(widths[j]);
    for (int c = 0; c < widths[j]; ++c) beta[c] = srng.uniform(-2.0, 2.0);
    betas.push_back(beta);
    blocks.push_back(std::move(b));
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    const Eigen::VectorXd eps = L * z;
    for (int j = 0; j < m; ++j)
      blocks[static_cast<std::size_t>(j)].y[i] =
          blocks[static_cast<std::size_t>(j)].X.row(i) *
              betas[static_cast<std::size_t>(j)] +
          eps[j];
  }
  return make_stacked(SurData(std::move(blocks)));
}

RobustFit tight_fit(const StackedDesign& d, const LossPair& loss,
                    std::uint64_t seed, int candidates = 60) {
  SOptions opt;
  opt.candidates = candidates;
  opt.seed = seed;
  opt.tol = 1e-13;
  opt.max_iter = 2000;
  return robust_fit(d, loss, opt);
}

}  // namespace

TEST_CASE("multinomial counts are a deterministic resample of size n") {
  const auto c1 = multinomial_counts(37, 5, 12);
  const auto c2 = multinomial_counts(37, 5, 12);
  const auto c3 = multinomial_counts(37, 5, 13);
  REQUIRE(c1.size() == 37);
  CHECK(c1.sum() == doctest::Approx(37.0));
  CHECK((c1 - c2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((c1 - c3).cwiseAbs().maxCoeff() > 0.0);
  CHECK(c1.minCoeff() >= 0.0);
}

TEST_CASE("weighted M-scale equals the unweighted scale of expanded data") {
  Rng rng(7);
  const int n = 23;
  Eigen::VectorXd dist(n), w(n);
  for (int i = 0; i < n; ++i) {
    dist[i] = std::fabs(rng.normal()) + 0.1;
    w[i] = static_cast<double>(rng.integer(4));  // counts 0..3
  }
  w[0] = 2.0;  // ensure positive mass
  std::vector<double> expanded;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < static_cast<int>(w[i]); ++k) expanded.push_back(dist[i]);
  Eigen::VectorXd de = Eigen::Map<Eigen::VectorXd>(
      expanded.data(), static_cast<int>(expanded.size()));
  const Bisquare rho(1.547645);
  const double delta = 0.5 * rho.rho_max() * 0.9;
  CHECK(mscale(dist, w, rho, delta) ==
        doctest::Approx(mscale(de, rho, delta)).epsilon(1e-12));
}

TEST_CASE("scale functionals reproduce the fitted scales at unit weights") {
  const auto d = random_design(3, 4, 60, {2, 2});
  const auto loss = make_loss_pair(2);
  const auto fit = tight_fit(d, loss, 11);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n);
  const auto sc = replicate_scales(d, loss, theta_pack(fit), ones);
  CHECK(sc.s_tilde == doctest::Approx(fit.s.scale).epsilon(1e-10));
  CHECK(sc.sigma_hat == doctest::Approx(fit.mm.scale).epsilon(1e-10));
}

TEST_CASE("draws are deterministic and independent of the thread count") {
  const auto d = random_design(19, 20, 45, {2, 2});
  const auto loss = make_loss_pair(2);
  const auto fit = tight_fit(d, loss, 5);
  const FrbCorrection corr(d, loss, theta_pack(fit));

  const auto a = frb_draws(d, loss, corr, 64, 77, 1);
  const auto b = frb_draws(d, loss, corr, 64, 77, 3);
  const auto c = frb_draws(d, loss, corr, 64, 78, 1);
  REQUIRE(a.thetas.rows() == b.thetas.rows());
  CHECK(a.skipped == 0);
  CHECK((a.thetas - b.thetas).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.thetas.row(0) - c.thetas.row(0)).cwiseAbs().maxCoeff() > 0.0);

  // Replicates actually move away from the estimate.
  const Eigen::VectorXd theta = theta_pack(fit);
  double maxdev = 0.0;
  for (int r = 0; r < a.thetas.rows(); ++r)
    maxdev = std::max(
        maxdev, (a.thetas.row(r).transpose() - theta).cwiseAbs().maxCoeff());
  CHECK(maxdev > 1e-3);
}

TEST_CASE("replicate spread matches the asymptotic coefficient variance") {
  const auto d = random_design(23, 24, 150, {2, 2});
  const auto loss = make_loss_pair(2);
  const auto fit = tight_fit(d, loss, 9);
  const Eigen::VectorXd theta = theta_pack(fit);
  const FrbCorrection corr(d, loss, theta);
  const auto draws = frb_draws(d, loss, corr, 800, 31, 1);
  REQUIRE(draws.thetas.rows() > 780);

  // Asymptotic covariance of the coefficients:
  //   asv_factor * (mean_i x_i' Sigma^{-1} x_i)^{-1} / n.
  const auto cons = normal_constants(loss.rho1, d.m);
  const Eigen::MatrixXd Si = fit.mm.Sigma.inverse();
  Eigen::MatrixXd Ainfo = Eigen::MatrixXd::Zero(d.p, d.p);
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    Ainfo += x.transpose() * Si * x;
  }
  Ainfo /= d.n;
  const Eigen::MatrixXd Acov = cons.asv_factor * Ainfo.inverse() / d.n;

  for (int k = 0; k < d.p; ++k) {
    const Eigen::VectorXd col = draws.thetas.col(k);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                (col.size() - 1.0));
    const double ratio = sd / std::sqrt(Acov(k, k));
    CAPTURE(k);
    CHECK(ratio > 0.75);
    CHECK(ratio < 1.35);
  }
}

TEST_CASE("replicate spread matches a fresh-sample Monte Carlo") {
  const auto loss = make_loss_pair(2);
  const int n = 120, reps = 120;
  const auto d0 = random_design(900, 7000, n, {2, 2});
  const auto fit0 = tight_fit(d0, loss, 41, 40);
  const FrbCorrection corr(d0, loss, theta_pack(fit0));
  const auto draws = frb_draws(d0, loss, corr, 600, 13, 1);
  REQUIRE(draws.thetas.rows() > 580);

  Eigen::MatrixXd mc(reps, d0.p);
  for (int r = 0; r < reps; ++r) {
    const auto dr = random_design(900, 7001 + static_cast<std::uint64_t>(r), n, {2, 2});
    SOptions opt;
    opt.candidates = 24;
    opt.seed = 1000 + static_cast<std::uint64_t>(r);
    opt.tol = 1e-10;
    mc.row(r) = robust_fit(dr, loss, opt).mm.beta.transpose();
  }

  double ratio_sum = 0.0;
  for (int k = 0; k < d0.p; ++k) {
    const Eigen::VectorXd bk = draws.thetas.col(k);
    const Eigen::VectorXd mk = mc.col(k);
    const double sd_frb = std::sqrt(
        (bk.array() - bk.mean()).square().sum() / (bk.size() - 1.0));
    const double sd_mc =
        std::sqrt((mk.array() - mk.mean()).square().sum() / (mk.size() - 1.0));
    const double ratio = sd_frb / sd_mc;
    CAPTURE(k);
    CHECK(ratio > 0.65);
    CHECK(ratio < 1.5);
    ratio_sum += ratio;
  }
  CHECK(ratio_sum / d0.p > 0.8);
  CHECK(ratio_sum / d0.p < 1.25);
}
