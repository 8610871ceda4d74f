// Simulation harness: scenario generators and desk-scale experiment
// runners for test levels, power, and confidence-interval coverage.
//
// Scenarios follow one template: m blocks sharing n rows, each block an
// intercept plus `predictors` standard normal regressors, coefficients all
// one except the final slope (`last_slope`), and errors drawn from a normal
// or elliptical t3 distribution with a configurable correlation structure.
// Contaminated rows are bad leverage points: the leading ceil(fraction * n)
// rows get all regressors replaced by uniform draws on [-10, -5] while
// their responses keep the clean model value plus an N(20, 1) shift.
//
// Every dataset is a pure function of (spec, rep): generation never shares
// state across repetitions, so grid cells can be re-run or resumed in any
// order with identical results.
#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "robsur/ci.hpp"
#include "robsur/inference.hpp"
#include "robsur/model.hpp"
#include "robsur/sfit.hpp"

namespace robsur {

enum class ErrorFamily { normal, t3 };
enum class SigmaKind { identity, equicorrelation, single_pair };

struct ScenarioSpec {
  int n = 100;
  int m = 3;
  int predictors = 2;       // slopes per block; an intercept is always added
  double last_slope = 1.0;  // final slope of the final block
  SigmaKind sigma = SigmaKind::equicorrelation;
  double tau = 0.5;         // correlation parameter for non-identity kinds
  ErrorFamily family = ErrorFamily::normal;
  double contamination = 0.0;  // leading fraction of bad-leverage rows
  std::uint64_t seed = 1;
};

Eigen::MatrixXd scenario_sigma(const ScenarioSpec& spec);
Eigen::VectorXd scenario_beta(const ScenarioSpec& spec);  // stacked truth

// Deterministic in (spec.seed, rep); draws X, then errors, then the
// contamination stream.
SurData generate_scenario(const ScenarioSpec& spec, int rep);

// The restriction tested in the level/power experiments: last slope = 0.
Restriction last_slope_restriction(const ScenarioSpec& spec);

enum class TestKind { lr_s, lr_mm, lr_mle, lm_s, lm_mm, lm_mle };

struct ExperimentOptions {
  int repetitions = 300;
  int bootstrap = 500;   // replicates per test or interval
  double level = 0.05;   // test size (coverage runs use 1 - level)
  int candidates = 80;   // subsample candidates per fit
  std::uint64_t seed = 1;
  int threads = 1;
};

struct CellResult {
  int repetitions = 0;  // successful repetitions
  int failures = 0;     // repetitions lost to fit or test failures
  double rate = 0.0;    // rejection rate, or coverage for interval runs
  double se = 0.0;      // binomial standard error of `rate`
  double mean_length = 0.0;  // interval runs only
};

// Rejection rate of one test at `opt.level` under the scenario; the pair
// variants (lr_s/lr_mm and lm_s/lm_mm) share fits per repetition, so asking
// for either member costs the same.
CellResult run_level_power(const ScenarioSpec& spec, TestKind kind,
                           const ExperimentOptions& opt);

// Coverage and mean length of confidence intervals for the slope
// coefficients (true value known from the scenario), averaged over slopes.
CellResult run_coverage(const ScenarioSpec& spec, CiMethod method,
                        const ExperimentOptions& opt);

}  // namespace robsur
