// FD validation of the shape-packed map.
#include <cstdio>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/gfun.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/rng.hpp"
#include "robsur/sfit.hpp"

using namespace robsur;

static StackedDesign random_design(std::uint64_t seed, int n,
                                   const std::vector<int>& widths) {
  Rng rng(seed);
  const int m = static_cast<int>(widths.size());
  Eigen::MatrixXd A(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) A(r, c) = rng.normal();
  Eigen::MatrixXd Sig = A * A.transpose() / m + 0.3 * Eigen::MatrixXd::Identity(m, m);
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
    for (int c = 0; c < widths[j]; ++c) b.coef_names.push_back("c" + std::to_string(c));
    Eigen::VectorXd beta(widths[j]);
    for (int c = 0; c < widths[j]; ++c) beta[c] = rng.uniform(-2.0, 2.0);
    betas.push_back(beta);
    blocks.push_back(std::move(b));
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    const Eigen::VectorXd eps = L * z;
    for (int j = 0; j < m; ++j)
      blocks[(std::size_t)j].y[i] =
          blocks[(std::size_t)j].X.row(i) * betas[(std::size_t)j] + eps[j];
  }
  return make_stacked(SurData(std::move(blocks)));
}

int main() {
  for (int m : {1, 2, 3}) {
    std::vector<int> widths((std::size_t)m, 2);
    StackedDesign d = random_design(42 + m, 60, widths);
    LossPair loss = make_loss_pair(m);
    SOptions opt;
    opt.candidates = 60;
    opt.tol = 1e-13;
    opt.max_iter = 2000;
    RobustFit fit = robust_fit(d, loss, opt);
    Eigen::VectorXd th = theta_pack_shape(fit);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n);
    const int dim = (int)th.size();

    Eigen::VectorXd g0 = g_eval_shape(d, loss, th, ones);
    printf("m=%d fixed-point gap %.3e\n", m, (g0 - th).cwiseAbs().maxCoeff());

    Eigen::MatrixXd J = grad_g_shape(d, loss, th);
    Eigen::MatrixXd Jfd(dim, dim);
    for (int k = 0; k < dim; ++k) {
      double h = 1e-6 * std::max(1.0, std::fabs(th[k]));
      Eigen::VectorXd tp = th, tm = th;
      tp[k] += h;
      tm[k] -= h;
      Jfd.col(k) = (g_eval_shape(d, loss, tp, ones) - g_eval_shape(d, loss, tm, ones)) / (2 * h);
    }
    printf("m=%d fitted J err %.3e (|J|max %.3f)\n", m,
           (J - Jfd).cwiseAbs().maxCoeff(), J.cwiseAbs().maxCoeff());

    Rng rng(7);
    Eigen::VectorXd th2 = th;
    for (int k = 0; k < d.p; ++k) {
      th2[k] *= (1.0 + 0.05 * rng.normal());
      th2[dim - d.p + k] *= (1.0 + 0.05 * rng.normal());
    }
    for (int blk = 0; blk < 2; ++blk) {
      Eigen::Map<Eigen::MatrixXd> M(th2.data() + d.p + blk * m * m, m, m);
      Eigen::MatrixXd E(m, m);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) E(r, c) = rng.normal();
      M += 0.03 * (E + E.transpose());
    }
    Eigen::MatrixXd J2 = grad_g_shape(d, loss, th2);
    Eigen::MatrixXd J2fd(dim, dim);
    for (int k = 0; k < dim; ++k) {
      double h = 1e-6 * std::max(1.0, std::fabs(th2[k]));
      Eigen::VectorXd tp = th2, tm = th2;
      tp[k] += h;
      tm[k] -= h;
      J2fd.col(k) = (g_eval_shape(d, loss, tp, ones) - g_eval_shape(d, loss, tm, ones)) / (2 * h);
    }
    printf("m=%d jitter J err %.3e (|J|max %.3f)\n", m,
           (J2 - J2fd).cwiseAbs().maxCoeff(), J2.cwiseAbs().maxCoeff());

    FrbCorrection corr(d, loss, th, false, ThetaPacking::shape);
    Eigen::VectorXd rep = corr.replicate(g_eval_shape(d, loss, th, ones));
    printf("m=%d identity replicate gap %.3e\n", m, (rep - th).cwiseAbs().maxCoeff());

    if (m > 1) {
      SOptions dopt = opt;
      dopt.diagonal = true;
      RobustFit dfit = robust_fit(d, loss, dopt);
      Eigen::VectorXd thd = theta_pack_shape(dfit);
      Eigen::VectorXd gd = g_eval_shape(d, loss, thd, ones, true);
      printf("m=%d diag fixed-point gap %.3e\n", m, (gd - thd).cwiseAbs().maxCoeff());
      Eigen::MatrixXd Jd = grad_g_shape(d, loss, thd, true);
      Eigen::MatrixXd Jdfd(dim, dim);
      for (int k = 0; k < dim; ++k) {
        double h = 1e-6 * std::max(1.0, std::fabs(thd[k]));
        Eigen::VectorXd tp = thd, tm = thd;
        tp[k] += h;
        tm[k] -= h;
        Jdfd.col(k) = (g_eval_shape(d, loss, tp, ones, true) -
                       g_eval_shape(d, loss, tm, ones, true)) /
                      (2 * h);
      }
      printf("m=%d diag J err %.3e\n", m, (Jd - Jdfd).cwiseAbs().maxCoeff());
    }
  }
  return 0;
}
