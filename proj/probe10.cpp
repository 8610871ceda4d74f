// Ground truth for the Grunfeld LR bootstrap: refit both models on
// count-expanded null data (slow bootstrap) and compare Lambda* with FRB.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/csvio.hpp"
#include "robsur/errors.hpp"
#include "robsur/frb.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/restrict.hpp"
#include "robsur/sfit.hpp"

using namespace robsur;

static StackedDesign expand(const StackedDesign& d,
                            const Eigen::VectorXd& counts) {
  StackedDesign out = d;
  out.x.clear();
  std::vector<Eigen::VectorXd> rows;
  for (int i = 0; i < d.n; ++i) {
    for (int k = 0; k < (int)counts[i]; ++k) {
      out.x.push_back(d.x[(std::size_t)i]);
      rows.push_back(d.Y.row(i).transpose());
    }
  }
  out.n = (int)rows.size();
  out.Y.resize(out.n, d.m);
  for (int i = 0; i < out.n; ++i) out.Y.row(i) = rows[(std::size_t)i];
  return out;
}

static void summary(const char* tag, const std::vector<double>& v) {
  std::vector<double> ok;
  for (double x : v)
    if (x == x) ok.push_back(x);
  if (ok.empty()) {
    printf("%-12s none\n", tag);
    return;
  }
  std::sort(ok.begin(), ok.end());
  double mean = 0;
  for (double x : ok) mean += x;
  mean /= ok.size();
  double sd = 0;
  for (double x : ok) sd += (x - mean) * (x - mean);
  sd = std::sqrt(sd / ok.size());
  printf("%-12s n=%3zu mean=%7.3f sd=%7.3f q50=%7.3f q90=%7.3f q95=%7.3f\n",
         tag, ok.size(), mean, sd, ok[ok.size() / 2],
         ok[(9 * ok.size()) / 10], ok[(19 * ok.size()) / 20]);
}

int main(int argc, char** argv) {
  const int N = argc > 1 ? std::atoi(argv[1]) : 200;
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
  SOptions ropt = sopt;
  ropt.candidates = 400;
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
  for (int i = 0; i < d.n; ++i)
    red0.Y.row(i) = Y0.row(i) - (d.x[(std::size_t)i] * red.beta0).transpose();

  // Null-data fits for warm starts.
  SOptions fopt = sopt;
  fopt.candidates = 400;
  const RobustFit f0 = robust_fit(d0, loss, fopt);
  const RobustFit r0 = robust_fit(red0, loss, fopt);
  printf("null-data scales: full s=%.5f mm=%.5f | restr s=%.5f mm=%.5f\n",
         f0.s.scale, f0.mm.scale, r0.s.scale, r0.mm.scale);

  std::vector<double> lam_s(N, NAN), lam_mm(N, NAN);
  std::vector<double> lnf(N, NAN), lnr(N, NAN);
  int fail_f = 0, fail_r = 0;
  for (int r = 0; r < N; ++r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
    const StackedDesign df = expand(d0, counts);
    const StackedDesign dr = expand(red0, counts);
    double sf = NAN, sr = NAN, mf = NAN, mr = NAN;
    try {
      // Warm-started refits only: track the basin of the null-data fits.
      const SFit s = s_refine(df, loss, f0.s.beta, f0.s.Sigma, 1e-10, 2000);
      sf = s.scale;
      mf = mm_refine(df, loss, s, 1e-10, 2000).scale;
    } catch (const Error&) {
      ++fail_f;
    }
    try {
      const SFit s = s_refine(dr, loss, r0.s.beta, r0.s.Sigma, 1e-10, 2000);
      sr = s.scale;
      mr = mm_refine(dr, loss, s, 1e-10, 2000).scale;
    } catch (const Error&) {
      ++fail_r;
    }
    lnf[r] = std::log(sf);
    lnr[r] = std::log(sr);
    lam_s[r] = 2.0 * d.n * d.m * (std::log(sr) - std::log(sf));
    lam_mm[r] = 2.0 * d.n * d.m * (std::log(mr) - std::log(mf));
  }
  printf("slow bootstrap failures: full=%d restr=%d / %d\n", fail_f, fail_r,
         N);
  summary("slow ln s_f*", lnf);
  summary("slow ln s_r*", lnr);
  // Correlation of the two log-scales among pairwise survivors.
  {
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    int k = 0;
    for (int r = 0; r < N; ++r)
      if (lnf[r] == lnf[r] && lnr[r] == lnr[r]) {
        ++k;
        sx += lnf[r];
        sy += lnr[r];
        sxx += lnf[r] * lnf[r];
        syy += lnr[r] * lnr[r];
        sxy += lnf[r] * lnr[r];
      }
    if (k > 2) {
      const double vx = sxx / k - (sx / k) * (sx / k);
      const double vy = syy / k - (sy / k) * (sy / k);
      printf("corr(ln s_f*, ln s_r*) = %.4f (k=%d)\n",
             (sxy / k - (sx / k) * (sy / k)) / std::sqrt(vx * vy), k);
    }
  }
  summary("slow Lam_S*", lam_s);
  summary("slow Lam_MM*", lam_mm);

  // Reference: the observed statistics.
  printf("observed Lam_S=%.4f Lam_MM=%.4f\n",
         2.0 * d.n * d.m * std::log(rfit.s.scale / full.s.scale),
         2.0 * d.n * d.m * std::log(rfit.mm.scale / full.mm.scale));
  int above_s = 0, okn = 0, above_mm = 0;
  const double Ls = 2.0 * d.n * d.m * std::log(rfit.s.scale / full.s.scale);
  const double Lmm = 2.0 * d.n * d.m * std::log(rfit.mm.scale / full.mm.scale);
  for (int r = 0; r < N; ++r)
    if (lam_s[r] == lam_s[r]) {
      ++okn;
      if (lam_s[r] > Ls) ++above_s;
      if (lam_mm[r] > Lmm) ++above_mm;
    }
  printf("slow p_S=%.4f p_MM=%.4f (ok=%d)\n", (above_s + 1.0) / (okn + 2.0),
         (above_mm + 1.0) / (okn + 2.0), okn);
  return 0;
}
