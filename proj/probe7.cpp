// Classify replicate failures for the shape-packed LR bootstrap on Grunfeld.
#include <cstdio>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/csvio.hpp"
#include "robsur/errors.hpp"
#include "robsur/frb.hpp"
#include "robsur/gfun.hpp"
#include "robsur/inference.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/restrict.hpp"
#include "robsur/scalefun.hpp"
#include "robsur/sfit.hpp"

using namespace robsur;

int main() {
  const CsvTable t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  std::vector<BlockSpec> specs;
  for (const std::string f : {"ge", "w", "dm"})
    specs.push_back({f, "invest_" + f, {"value_" + f, "capital_" + f}, true});
  const SurData data = make_sur_data(t, specs);
  const StackedDesign d = make_stacked(data);
  const LossPair loss = make_loss_pair(d.m, 0.5, 0.9);

  SOptions sopt;
  sopt.candidates = 1000;
  sopt.tol = 1e-12;
  sopt.max_iter = 2000;
  sopt.seed = 20260819;
  const RobustFit full = robust_fit(d, loss, sopt);

  // Reproduce the null-data construction of lr_test_robust.
  const Restriction rest = parse_restrictions(
      {"equal ge:value_ge w:value_w", "equal ge:capital_ge w:capital_w"}, data);
  const ReducedModel red = reduce_model(d, rest);
  SFit warm;
  warm.beta = red.Z.transpose() * (full.s.beta - red.beta0);
  warm.Sigma = full.s.Sigma;
  SOptions ropt;
  ropt.candidates = 200;
  ropt.tol = 1e-12;
  ropt.max_iter = 2000;
  RobustFit rfit = robust_fit(red.design, loss, ropt);

  const Eigen::VectorXd beta_r = red.full_beta(rfit.mm.beta);
  Eigen::MatrixXd Y0(d.n, d.m);
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[(std::size_t)i];
    Y0.row(i) =
        (x * beta_r + (d.Y.row(i).transpose() - x * full.mm.beta)).transpose();
  }
  StackedDesign d0 = d;
  d0.Y = Y0;

  Eigen::VectorXd theta0 = theta_pack_shape(full);
  theta0.head(d.p) = beta_r;
  theta0.tail(d.p) += beta_r - full.mm.beta;

  const FrbCorrection corr_f(d0, loss, theta0, false, ThetaPacking::shape);

  // Spectral radius of grad at theta0.
  Eigen::MatrixXd J = grad_g_shape(d0, loss, theta0);
  Eigen::EigenSolver<Eigen::MatrixXd> es(J);
  printf("spectral radius of grad g' (full side): %.4f\n",
         es.eigenvalues().cwiseAbs().maxCoeff());

  std::map<std::string, int> fails;
  int ok = 0, nonpd_gamma = 0, nonpd_gtilde = 0;
  for (int r = 0; r < 1000; ++r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
    try {
      const Eigen::VectorXd th = frb_replicate(d0, loss, corr_f, counts);
      // check PD-ness of both shape blocks of the corrected replicate
      Eigen::VectorXd bmm, bs;
      Eigen::MatrixXd Gam, Gt;
      theta_unpack(th, d.m, d.p, bmm, Gam, Gt, bs);
      Eigen::LLT<Eigen::MatrixXd> l1(Gam), l2(Gt);
      if (l1.info() != Eigen::Success) ++nonpd_gamma;
      if (l2.info() != Eigen::Success) ++nonpd_gtilde;
      const auto sc = replicate_scales(d0, loss, th, counts);
      if (sc.s_tilde > 0.0 && sc.sigma_hat > 0.0) ++ok;
    } catch (const Error& e) {
      fails[e.what()]++;
    }
  }
  printf("ok=%d nonpd_gamma=%d nonpd_gtilde=%d\n", ok, nonpd_gamma, nonpd_gtilde);
  for (auto& kv : fails) printf("fail %3d x %s\n", kv.second, kv.first.c_str());
  return 0;
}
