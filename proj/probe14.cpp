// Scenario sanity + small level run to calibrate acceptance timings.
#include <chrono>
#include <cstdio>

#include "robsur/simulate.hpp"

using namespace robsur;

int main() {
  ScenarioSpec spec;
  spec.n = 1000;
  spec.seed = 5;
  const SurData big = generate_scenario(spec, 0);
  const StackedDesign bd = make_stacked(big);
  // Empirical error correlation vs tau at the true beta.
  const Eigen::MatrixXd E = bd.residual_matrix(scenario_beta(spec));
  const Eigen::MatrixXd C = E.transpose() * E / bd.n;
  printf("corr(1,2)=%.3f corr(1,3)=%.3f corr(2,3)=%.3f (target 0.5)\n",
         C(0, 1) / std::sqrt(C(0, 0) * C(1, 1)),
         C(0, 2) / std::sqrt(C(0, 0) * C(2, 2)),
         C(1, 2) / std::sqrt(C(1, 1) * C(2, 2)));

  ScenarioSpec cont = spec;
  cont.n = 100;
  cont.contamination = 0.10;
  const SurData cd = generate_scenario(cont, 3);
  int bad = 0;
  for (int i = 0; i < cd.n(); ++i) {
    bool all = true;
    for (int j = 0; j < cd.m(); ++j)
      for (int c = 1; c < cd.block(j).X.cols(); ++c)
        all = all && cd.block(j).X(i, c) >= -10.0 && cd.block(j).X(i, c) <= -5.0;
    bad += all;
  }
  printf("contaminated rows with uniform regressors: %d (want 10)\n", bad);

  // Timing: one rep of each robust runner at n=100.
  ScenarioSpec lev;
  lev.n = 100;
  lev.last_slope = 0.0;
  ExperimentOptions opt;
  opt.repetitions = 4;
  opt.bootstrap = 500;
  opt.candidates = 80;
  opt.seed = 11;
  auto t0 = std::chrono::steady_clock::now();
  CellResult lr = run_level_power(lev, TestKind::lr_mm, opt);
  auto t1 = std::chrono::steady_clock::now();
  ScenarioSpec diag = lev;
  diag.sigma = SigmaKind::identity;
  diag.last_slope = 1.0;
  CellResult lm = run_level_power(diag, TestKind::lm_mm, opt);
  auto t2 = std::chrono::steady_clock::now();
  ScenarioSpec cov = lev;
  CellResult cv = run_coverage(cov, CiMethod::percentile, opt);
  auto t3 = std::chrono::steady_clock::now();
  const double slr = std::chrono::duration<double>(t1 - t0).count() / 4;
  const double slm = std::chrono::duration<double>(t2 - t1).count() / 4;
  const double scv = std::chrono::duration<double>(t3 - t2).count() / 4;
  printf("per-rep: lr_mm %.2fs lm_mm %.2fs coverage-BP %.2fs\n", slr, slm, scv);
  printf("lr fails=%d lm fails=%d cov fails=%d cov_len=%.3f\n", lr.failures,
         lm.failures, cv.failures, cv.mean_length);
  printf("300 reps estimate: lr %.0fs lm %.0fs cov %.0fs\n", 300 * slr,
         300 * slm, 300 * scv);
  return 0;
}
