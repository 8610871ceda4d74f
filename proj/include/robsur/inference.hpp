// Hypothesis tests for the stacked regression system.
//
// Two families are provided, each in a Gaussian (MLE) version and in robust
// S and MM versions:
//
//   * likelihood-ratio-type tests of linear coefficient restrictions
//     R beta = q, built from the change in the fitted scale (robust) or in
//     the fitted generalized variance (MLE);
//   * score-type tests of error diagonality ("no contemporaneous
//     correlation"), built from weighted residual correlations of the
//     diagonally restricted fit.
//
// Asymptotic p-values use a scaled chi-square reference; the scaling kappa
// is estimated from the fitted standardized distances.  Bootstrap p-values
// resample the estimating equations on constructed null data: the robust
// versions use the fast linear-correction bootstrap, the MLE versions refit
// on resampled rows.  Bootstrap p-values are computed as
// (#{T* > T} + 1) / (N + 2).
#pragma once

#include <cstdint>
#include <vector>

#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/restrict.hpp"

namespace robsur {

struct TestOptions {
  int replicates = 1000;   // bootstrap replicates; 0 disables the bootstrap
  std::uint64_t seed = 1;
  int threads = 1;
  SOptions refit;          // options for restricted (null-data) refits

  TestOptions() {
    refit.candidates = 200;
    refit.tol = 1e-12;
    refit.max_iter = 2000;
  }
};

struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double kappa = 1.0;        // empirical scaling of the chi-square reference
  double p_asymptotic = 0.0;
  double p_bootstrap = -1.0;  // -1 when the bootstrap was not run
  int replicates_used = 0;
  int replicates_skipped = 0;
  // Set when more than 5% of the attempted replicates were skipped; the
  // bootstrap p-value is then based on a thinned tail and should be read
  // with care.
  bool degenerate_bootstrap = false;
  // One entry per attempted replicate, NaN for the skipped ones.
  std::vector<double> replicate_stats;
};

// Coefficient restriction tests.  The robust pair shares one bootstrap run
// with paired resamples; `full` must be fitted on `d` at tight tolerance.
TestResult lr_test_mle(const StackedDesign& d, const Restriction& rest,
                       const TestOptions& opt);

struct LrRobustTests {
  TestResult s;
  TestResult mm;
};

LrRobustTests lr_test_robust(const StackedDesign& d, const LossPair& loss,
                             const RobustFit& full, const Restriction& rest,
                             const TestOptions& opt);

// Diagonality tests.  The robust pair shares one diagonally restricted fit
// and one bootstrap run; `full` is the unrestricted fit used to build the
// null data.
TestResult lm_test_mle(const StackedDesign& d, const TestOptions& opt);

struct LmRobustTests {
  TestResult s;
  TestResult mm;
  RobustFit diagonal_fit;  // the restricted fit the statistics are built from
};

LmRobustTests lm_test_robust(const StackedDesign& d, const LossPair& loss,
                             const RobustFit& full, const TestOptions& opt);

}  // namespace robsur
