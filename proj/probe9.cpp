// Decompose the Grunfeld LR replicate overdispersion: corrected vs
// uncorrected (g_w only) replicates, full vs restricted side.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/csvio.hpp"
#include "robsur/errors.hpp"
#include "robsur/frb.hpp"
#include "robsur/gfun.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/restrict.hpp"
#include "robsur/scalefun.hpp"
#include "robsur/sfit.hpp"

using namespace robsur;

static void summary(const char* tag, std::vector<double> v) {
  std::vector<double> ok;
  for (double x : v)
    if (x == x) ok.push_back(x);
  std::sort(ok.begin(), ok.end());
  double mean = 0, sd = 0;
  for (double x : ok) mean += x;
  mean /= ok.size();
  for (double x : ok) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / ok.size());
  printf("%-14s n=%4zu mean=%8.4f sd=%7.4f q50=%8.4f q90=%8.4f q95=%8.4f\n",
         tag, ok.size(), mean, sd, ok[ok.size() / 2], ok[(9 * ok.size()) / 10],
         ok[(19 * ok.size()) / 20]);
}

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

  const Restriction rest = parse_restrictions(
      {"equal ge:value_ge w:value_w", "equal ge:capital_ge w:capital_w"}, data);
  const ReducedModel red = reduce_model(d, rest);
  SOptions ropt;
  ropt.candidates = 400;
  ropt.tol = 1e-12;
  ropt.max_iter = 2000;
  const RobustFit rfit = robust_fit(red.design, loss, ropt);

  const Eigen::VectorXd beta_r = red.full_beta(rfit.mm.beta);
  Eigen::MatrixXd Y0(d.n, d.m);
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[(std::size_t)i];
    Y0.row(i) =
        (x * beta_r + (d.Y.row(i).transpose() - x * full.mm.beta)).transpose();
  }
  StackedDesign d0 = d;
  d0.Y = Y0;
  StackedDesign red0 = red.design;
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[(std::size_t)i];
    red0.Y.row(i) = Y0.row(i) - (x * red.beta0).transpose();
  }

  Eigen::VectorXd theta0 = theta_pack_shape(full);
  theta0.head(d.p) = beta_r;
  theta0.tail(d.p) += beta_r - full.mm.beta;

  SFit rwarm = rfit.s;
  SOptions fresh;
  fresh.candidates = 400;
  fresh.tol = 1e-12;
  fresh.max_iter = 2000;
  RobustFit rfit0 = robust_fit(red0, loss, fresh);

  // fixed-point gaps on null data
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(d.n);
  printf("theta0 fixed-point gap (full): %.3e\n",
         (g_eval_shape(d0, loss, theta0, ones) - theta0).cwiseAbs().maxCoeff());
  Eigen::VectorXd thr0 = theta_pack_shape(rfit0);
  printf("thr0   fixed-point gap (restr): %.3e\n",
         (g_eval_shape(red0, loss, thr0, ones) - thr0).cwiseAbs().maxCoeff());
  printf("scales: full s=%.5f restr s=%.5f  (observed s=%.5f r=%.5f)\n",
         theta0.size() ? s_scale_stat(d0, loss, theta0.tail(d.p),
                                      Eigen::Map<Eigen::MatrixXd>(
                                          theta0.data() + d.p + d.m * d.m, d.m,
                                          d.m),
                                      ones)
                       : 0.0,
         rfit0.s.scale, full.s.scale, rfit.s.scale);

  const FrbCorrection corr_f(d0, loss, theta0, false, ThetaPacking::shape);
  const FrbCorrection corr_r(red0, loss, thr0, false, ThetaPacking::shape);

  const int N = 1000;
  std::vector<double> lam_s(N, NAN), lam_mm(N, NAN), lam_s_unc(N, NAN),
      lnf(N, NAN), lnr(N, NAN), lam_mm_unc(N, NAN);
  int fail_f = 0, fail_r = 0;
  for (int r = 0; r < N; ++r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
    // corrected
    bool okf = false, okr = false;
    ScalePair sf{}, sr{};
    try {
      sf = replicate_scales(d0, loss,
                            frb_replicate(d0, loss, corr_f, counts), counts);
      okf = sf.s_tilde > 0 && sf.sigma_hat > 0;
    } catch (const Error&) {
      ++fail_f;
    }
    try {
      sr = replicate_scales(red0, loss,
                            frb_replicate(red0, loss, corr_r, counts), counts);
      okr = sr.s_tilde > 0 && sr.sigma_hat > 0;
    } catch (const Error&) {
      ++fail_r;
    }
    if (okf) lnf[r] = std::log(sf.s_tilde);
    if (okr) lnr[r] = std::log(sr.s_tilde);
    if (okf && okr) {
      lam_s[r] = 2.0 * d.n * d.m * std::log(sr.s_tilde / sf.s_tilde);
      lam_mm[r] = 2.0 * d.n * d.m * std::log(sr.sigma_hat / sf.sigma_hat);
    }
    // uncorrected (plain weighted one-step, no linear correction)
    try {
      const auto uf = replicate_scales(
          d0, loss, g_eval_shape(d0, loss, theta0, counts), counts);
      const auto ur = replicate_scales(
          red0, loss, g_eval_shape(red0, loss, thr0, counts), counts);
      if (uf.s_tilde > 0 && ur.s_tilde > 0) {
        lam_s_unc[r] = 2.0 * d.n * d.m * std::log(ur.s_tilde / uf.s_tilde);
        lam_mm_unc[r] = 2.0 * d.n * d.m * std::log(ur.sigma_hat / uf.sigma_hat);
      }
    } catch (const Error&) {
    }
  }
  printf("fail_f=%d fail_r=%d\n", fail_f, fail_r);
  summary("ln s_f*", lnf);
  summary("ln s_r*", lnr);
  summary("Lam_S*", lam_s);
  summary("Lam_MM*", lam_mm);
  summary("Lam_S* unc", lam_s_unc);
  summary("Lam_MM* unc", lam_mm_unc);
  printf("observed Lam_S=%.4f Lam_MM=%.4f\n",
         2.0 * d.n * d.m * std::log(rfit.s.scale / full.s.scale),
         2.0 * d.n * d.m * std::log(rfit.mm.scale / full.mm.scale));
  return 0;
}
