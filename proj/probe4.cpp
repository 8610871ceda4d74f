#include <cstdio>
#include "robsur/csvio.hpp"
#include "robsur/model.hpp"
#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/restrict.hpp"
#include "robsur/gfun.hpp"
#include "robsur/frb.hpp"
#include "robsur/sfit.hpp"
#include "robsur/errors.hpp"

using namespace robsur;

int main() {
  const CsvTable t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  std::vector<BlockSpec> specs;
  for (const std::string f : {"ge", "w", "dm"})
    specs.push_back({f, "invest_" + f, {"value_" + f, "capital_" + f}, true});
  const SurData data = make_sur_data(t, specs);
  const StackedDesign d = make_stacked(data);
  const LossPair loss = make_loss_pair(d.m, 0.5, 0.9);
  const int m = d.m;

  SOptions sopt;
  sopt.candidates = 1000; sopt.tol = 1e-12; sopt.max_iter = 2000; sopt.seed = 20260819;
  const RobustFit full = robust_fit(d, loss, sopt);
  const Restriction rest = parse_restrictions(
      {"equal ge:value_ge w:value_w", "equal ge:capital_ge w:capital_w"}, data);
  const ReducedModel red = reduce_model(d, rest);
  SOptions ropt; ropt.candidates = 1000; ropt.tol = 1e-12; ropt.max_iter = 2000;
  SFit rs;
  {
    SFit a = s_refine(red.design, loss, red.Z.transpose() * (full.s.beta - red.beta0),
                      full.s.Sigma, 1e-13, 2000);
    SFit b = s_fit(red.design, loss, ropt);
    rs = a.scale < b.scale ? a : b;
  }
  MMFit rmm = mm_refine(red.design, loss, rs, 1e-13, 2000);

  const Eigen::VectorXd beta_r = red.full_beta(rmm.beta);
  StackedDesign d0 = d;
  for (int i = 0; i < d.n; ++i)
    d0.Y.row(i) = (d.x[(std::size_t)i] * beta_r +
                   (d.Y.row(i).transpose() - d.x[(std::size_t)i] * full.mm.beta))
                      .transpose();

  Eigen::VectorXd theta0(theta_dim(m, d.p));
  theta0.head(d.p) = beta_r;
  theta0.segment(d.p, 9) = Eigen::Map<const Eigen::VectorXd>(full.mm.Gamma.data(), 9);
  theta0.segment(d.p + 9, 9) = Eigen::Map<const Eigen::VectorXd>(full.s.Sigma.data(), 9);
  theta0.tail(d.p) = full.s.beta + beta_r - full.mm.beta;
  const FrbCorrection corr(d0, loss, theta0);

  const Eigen::MatrixXd Sig = full.s.Sigma;
  const double sig2 = std::pow(Sig.determinant(), 1.0 / m);
  const Eigen::MatrixXd Gam_t = Sig / sig2;
  const Eigen::MatrixXd Sinv = Sig.inverse();

  int bad_sig = 0, bad_gamhat = 0, bad_proj = 0, nrep = 2000, evalfail = 0;
  double worst_proj = 1e9;
  for (int r = 0; r < nrep; ++r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
    Eigen::VectorXd th;
    try {
      th = frb_replicate(d0, loss, corr, counts);
    } catch (const Error&) { ++evalfail; continue; }
    Eigen::VectorXd bmm, bs;
    Eigen::MatrixXd Gh, Ss;
    theta_unpack(th, m, d.p, bmm, Gh, Ss, bs);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(Ss), e2(Gh);
    if (e1.eigenvalues().minCoeff() <= 0) ++bad_sig;
    if (e2.eigenvalues().minCoeff() <= 0) ++bad_gamhat;
    const Eigen::MatrixXd D = Ss - Sig;
    const Eigen::MatrixXd Gproj =
        Gam_t + (D - ((Sinv * D).trace() / m) * Sig) / sig2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e3(Gproj);
    const double me = e3.eigenvalues().minCoeff();
    if (me <= 0) ++bad_proj;
    worst_proj = std::min(worst_proj, me);
  }
  std::printf("evalfail=%d  bad Sigma*=%d  bad Gammahat*=%d  bad proj-shape*=%d (of %d)\n",
              evalfail, bad_sig, bad_gamhat, bad_proj, nrep);
  std::printf("worst proj mineig=%.4f\n", worst_proj);
  return 0;
}
