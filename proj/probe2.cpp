#include <cstdio>
#include <map>
#include <string>
#include "robsur/csvio.hpp"
#include "robsur/model.hpp"
#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/restrict.hpp"
#include "robsur/gfun.hpp"
#include "robsur/frb.hpp"
#include "robsur/scalefun.hpp"
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
  ropt.candidates = 2000;
  ropt.tol = 1e-12;
  ropt.max_iter = 2000;
  SFit warm;
  warm.beta = red.Z.transpose() * (full.s.beta - red.beta0);
  warm.Sigma = full.s.Sigma;
  SFit rw = s_refine(red.design, loss, warm.beta, warm.Sigma, 1e-13, 2000);
  SFit rf = s_fit(red.design, loss, ropt);
  std::printf("restricted scales: warm-refine=%.6f fresh(2000 cand)=%.6f\n",
              rw.scale, rf.scale);
  const SFit& rbest = rf.scale < rw.scale ? rf : rw;
  MMFit rmm = mm_refine(red.design, loss, rbest, 1e-13, 2000);
  std::printf("full: s=%.6f mm=%.6f | restricted: s=%.6f mm=%.6f\n",
              full.s.scale, full.mm.scale, rbest.scale, rmm.scale);
  const double n = d.n, m = d.m;
  std::printf("LR_S=%.4f LR_MM=%.4f\n",
              2 * n * m * std::log(rbest.scale / full.s.scale),
              2 * n * m * std::log(rmm.scale / full.mm.scale));

  // Null data + replicate failure census.
  const Eigen::VectorXd beta_r = red.full_beta(rmm.beta);
  Eigen::MatrixXd Y0(d.n, d.m);
  for (int i = 0; i < d.n; ++i) {
    const auto& x = d.x[(std::size_t)i];
    Y0.row(i) =
        (x * beta_r + (d.Y.row(i).transpose() - x * full.mm.beta)).transpose();
  }
  StackedDesign d0 = d;
  d0.Y = Y0;
  StackedDesign red0 = red.design;
  for (int i = 0; i < d.n; ++i)
    red0.Y.row(i) = Y0.row(i) - (d.x[(std::size_t)i] * red.beta0).transpose();

  Eigen::VectorXd theta0(theta_dim(d.m, d.p));
  theta0.head(d.p) = beta_r;
  theta0.segment(d.p, 9) = Eigen::Map<const Eigen::VectorXd>(full.mm.Gamma.data(), 9);
  theta0.segment(d.p + 9, 9) = Eigen::Map<const Eigen::VectorXd>(full.s.Sigma.data(), 9);
  theta0.tail(d.p) = full.s.beta + beta_r - full.mm.beta;

  RobustFit rfit0;
  {
    SFit a = s_refine(red0, loss, rbest.beta, rbest.Sigma, 1e-13, 2000);
    SFit b = s_fit(red0, loss, ropt);
    rfit0.s = a.scale < b.scale ? a : b;
    rfit0.mm = mm_refine(red0, loss, rfit0.s, 1e-13, 2000);
  }
  const FrbCorrection corr_f(d0, loss, theta0);
  const FrbCorrection corr_r(red0, loss, theta_pack(rfit0));

  std::map<std::string, int> why;
  int ok = 0;
  for (int r = 0; r < 1000; ++r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
    try {
      const auto thf = frb_replicate(d0, loss, corr_f, counts);
      try {
        const auto sf = replicate_scales(d0, loss, thf, counts);
        (void)sf;
      } catch (const Error& e) {
        why[std::string("full scales: ") + e.what()]++;
        continue;
      }
      const auto thr = frb_replicate(red0, loss, corr_r, counts);
      try {
        const auto sr = replicate_scales(red0, loss, thr, counts);
        (void)sr;
        ++ok;
      } catch (const Error& e) {
        why[std::string("restricted scales: ") + e.what()]++;
      }
    } catch (const Error& e) {
      why[std::string("replicate: ") + e.what()]++;
    }
  }
  std::printf("ok=%d\n", ok);
  for (const auto& [k, v] : why) std::printf("%5d  %s\n", v, k.c_str());
  return 0;
}
