#include <cstdio>
#include <algorithm>
#include <vector>
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

StackedDesign expand(const StackedDesign& d, const Eigen::VectorXd& counts) {
  StackedDesign out;
  out.m = d.m; out.p = d.p; out.block_cols = d.block_cols;
  int total = 0;
  for (int i = 0; i < d.n; ++i) total += (int)counts[i];
  out.n = total;
  out.Y.resize(total, d.m);
  int row = 0;
  for (int i = 0; i < d.n; ++i)
    for (int k = 0; k < (int)counts[i]; ++k) {
      out.x.push_back(d.x[(std::size_t)i]);
      out.Y.row(row++) = d.Y.row(i);
    }
  return out;
}

int main(int argc, char** argv) {
  const int nrep = argc > 1 ? std::atoi(argv[1]) : 300;
  const CsvTable t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  std::vector<BlockSpec> specs;
  for (const std::string f : {"ge", "w", "dm"})
    specs.push_back({f, "invest_" + f, {"value_" + f, "capital_" + f}, true});
  const SurData data = make_sur_data(t, specs);
  const StackedDesign d = make_stacked(data);
  const LossPair loss = make_loss_pair(d.m, 0.5, 0.9);

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
  const double n = d.n, m = d.m;
  const double LS = 2 * n * m * std::log(rs.scale / full.s.scale);
  const double LM = 2 * n * m * std::log(rmm.scale / full.mm.scale);
  std::printf("observed: LR_S=%.4f LR_MM=%.4f\n", LS, LM);

  // null data
  const Eigen::VectorXd beta_r = red.full_beta(rmm.beta);
  StackedDesign d0 = d;
  for (int i = 0; i < d.n; ++i)
    d0.Y.row(i) = (d.x[(std::size_t)i] * beta_r +
                   (d.Y.row(i).transpose() - d.x[(std::size_t)i] * full.mm.beta))
                      .transpose();
  StackedDesign red0 = red.design;
  for (int i = 0; i < d.n; ++i)
    red0.Y.row(i) = d0.Y.row(i) - (d.x[(std::size_t)i] * red.beta0).transpose();

  Eigen::VectorXd theta0(theta_dim(d.m, d.p));
  theta0.head(d.p) = beta_r;
  theta0.segment(d.p, 9) = Eigen::Map<const Eigen::VectorXd>(full.mm.Gamma.data(), 9);
  theta0.segment(d.p + 9, 9) = Eigen::Map<const Eigen::VectorXd>(full.s.Sigma.data(), 9);
  theta0.tail(d.p) = full.s.beta + beta_r - full.mm.beta;

  // spectral radius of grad_g on both sides
  {
    const Eigen::MatrixXd Jf = grad_g(d0, loss, theta0);
    RobustFit rf0;
    SFit a = s_refine(red0, loss, rs.beta, rs.Sigma, 1e-13, 2000);
    SFit b = s_fit(red0, loss, ropt);
    rf0.s = a.scale < b.scale ? a : b;
    rf0.mm = mm_refine(red0, loss, rf0.s, 1e-13, 2000);
    const Eigen::MatrixXd Jr = grad_g(red0, loss, theta_pack(rf0));
    std::printf("spec radius: full=%.4f reduced=%.4f\n",
                Jf.eigenvalues().cwiseAbs().maxCoeff(),
                Jr.eigenvalues().cwiseAbs().maxCoeff());

    // Full-refit ("slow") bootstrap on the same null data / same counts.
    SOptions bopt; bopt.candidates = 100; bopt.tol = 1e-10; bopt.max_iter = 1000;
    std::vector<double> ls, lm;
    int fail = 0;
    for (int r = 0; r < nrep; ++r) {
      const Eigen::VectorXd counts = multinomial_counts(d.n, 7, r);
      try {
        const StackedDesign bf = expand(d0, counts);
        const StackedDesign br = expand(red0, counts);
        SFit sf = s_fit(bf, loss, bopt);
        {  // warm start from the fitted null point as well
          SFit w = s_refine(bf, loss, theta0.head(d.p),
                            full.s.Sigma, 1e-11, 1000);
          if (w.scale < sf.scale) sf = w;
        }
        MMFit mf = mm_refine(bf, loss, sf, 1e-11, 1000);
        SFit sr = s_fit(br, loss, bopt);
        {
          SFit w = s_refine(br, loss, rf0.s.beta, rf0.s.Sigma, 1e-11, 1000);
          if (w.scale < sr.scale) sr = w;
        }
        MMFit mr = mm_refine(br, loss, sr, 1e-11, 1000);
        ls.push_back(2 * n * m * std::log(sr.scale / sf.scale));
        lm.push_back(2 * n * m * std::log(mr.scale / mf.scale));
      } catch (const Error&) { ++fail; }
    }
    auto pv = [&](std::vector<double>& v, double obs) {
      int above = 0;
      for (double x : v) if (x > obs) ++above;
      return (above + 1.0) / (v.size() + 2.0);
    };
    std::sort(ls.begin(), ls.end());
    std::sort(lm.begin(), lm.end());
    std::printf("slow boot (%zu ok, %d fail): p_S=%.4f p_MM=%.4f\n",
                ls.size(), fail, pv(ls, LS), pv(lm, LM));
    auto q = [](const std::vector<double>& v, double a) {
      return v[(std::size_t)(a * (v.size() - 1))];
    };
    std::printf("  LS* quartiles: %.3f %.3f %.3f  p90=%.3f\n",
                q(ls, .25), q(ls, .5), q(ls, .75), q(ls, .9));
    std::printf("  LM* quartiles: %.3f %.3f %.3f  p90=%.3f\n",
                q(lm, .25), q(lm, .5), q(lm, .75), q(lm, .9));
  }
  return 0;
}
