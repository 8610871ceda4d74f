#include "robsur/simulate.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "robsur/errors.hpp"
#include "robsur/frb.hpp"
#include "robsur/gfun.hpp"
#include "robsur/rng.hpp"

namespace robsur {

Eigen::MatrixXd scenario_sigma(const ScenarioSpec& spec) {
  const int m = spec.m;
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(m, m);
  switch (spec.sigma) {
    case SigmaKind::identity:
      break;
    case SigmaKind::equicorrelation:
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
          if (j != k) S(j, k) = spec.tau;
      break;
    case SigmaKind::single_pair:
      if (m < 2) throw ConfigError("single_pair needs at least two blocks");
      S(0, 1) = S(1, 0) = spec.tau;
      break;
  }
  return S;
}

Eigen::VectorXd scenario_beta(const ScenarioSpec& spec) {
  const int p = spec.m * (spec.predictors + 1);
  Eigen::VectorXd beta = Eigen::VectorXd::Ones(p);
  beta[p - 1] = spec.last_slope;
  return beta;
}

SurData generate_scenario(const ScenarioSpec& spec, int rep) {
  if (spec.m < 1 || spec.n < 1 || spec.predictors < 1)
    throw ConfigError("scenario: n, m, predictors must be positive");
  if (!(spec.contamination >= 0.0 && spec.contamination < 0.5))
    throw ConfigError("scenario: contamination fraction must lie in [0, 0.5)");
  const int n = spec.n, m = spec.m, q = spec.predictors;
  Rng rng(spec.seed, static_cast<std::uint64_t>(rep));

  std::vector<Block> blocks(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Block& b = blocks[static_cast<std::size_t>(j)];
    b.name = "b" + std::to_string(j + 1);
    b.X.resize(n, q + 1);
    b.X.col(0).setOnes();
    b.coef_names.push_back("intercept");
    for (int c = 0; c < q; ++c)
      b.coef_names.push_back("x" + std::to_string(c + 1));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < q; ++c) b.X(i, c + 1) = rng.normal();
  }

  const Eigen::MatrixXd S = scenario_sigma(spec);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw ConfigError("scenario: correlation matrix is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();

  Eigen::MatrixXd eps(n, m);
  Eigen::VectorXd z(m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) z[j] = rng.normal();
    eps.row(i) = (L * z).transpose();
    if (spec.family == ErrorFamily::t3)
      eps.row(i) /= std::sqrt(rng.chisq(3) / 3.0);
  }

  const Eigen::VectorXd beta = scenario_beta(spec);
  for (int j = 0; j < m; ++j) {
    Block& b = blocks[static_cast<std::size_t>(j)];
    b.y = b.X * beta.segment(j * (q + 1), q + 1) + eps.col(j);
  }

  // Bad leverage rows: remote regressors with responses kept at the clean
  // model value plus a vertical shift.
  const int bad = static_cast<int>(std::ceil(spec.contamination * n));
  for (int i = 0; i < bad; ++i)
    for (int j = 0; j < m; ++j) {
      Block& b = blocks[static_cast<std::size_t>(j)];
      for (int c = 0; c < q; ++c) b.X(i, c + 1) = rng.uniform(-10.0, -5.0);
      b.y[i] += 20.0 + rng.normal();
    }

  return SurData(std::move(blocks));
}

Restriction last_slope_restriction(const ScenarioSpec& spec) {
  const int p = spec.m * (spec.predictors + 1);
  Restriction rest;
  rest.R = Eigen::MatrixXd::Zero(1, p);
  rest.R(0, p - 1) = 1.0;
  rest.q = Eigen::VectorXd::Zero(1);
  return rest;
}

namespace {

bool is_lr(TestKind kind) {
  return kind == TestKind::lr_s || kind == TestKind::lr_mm ||
         kind == TestKind::lr_mle;
}

bool is_robust(TestKind kind) { return kind != TestKind::lr_mle && kind != TestKind::lm_mle; }

double run_one_test(const ScenarioSpec& spec, TestKind kind,
                    const ExperimentOptions& opt, int rep) {
  const SurData data = generate_scenario(spec, rep);
  const StackedDesign d = make_stacked(data);

  TestOptions topt;
  topt.replicates = opt.bootstrap;
  topt.seed = derive_seed(opt.seed, 2 * static_cast<std::uint64_t>(rep) + 1);
  topt.threads = opt.threads;
  topt.refit.candidates = opt.candidates;
  topt.refit.seed = derive_seed(opt.seed, 2 * static_cast<std::uint64_t>(rep));

  if (!is_robust(kind)) {
    const TestResult res = is_lr(kind)
                               ? lr_test_mle(d, last_slope_restriction(spec), topt)
                               : lm_test_mle(d, topt);
    return res.p_bootstrap;
  }

  const LossPair loss = make_loss_pair(d.m);
  SOptions sopt = topt.refit;
  const RobustFit fit = robust_fit(d, loss, sopt);
  if (is_lr(kind)) {
    const LrRobustTests res =
        lr_test_robust(d, loss, fit, last_slope_restriction(spec), topt);
    return kind == TestKind::lr_s ? res.s.p_bootstrap : res.mm.p_bootstrap;
  }
  const LmRobustTests res = lm_test_robust(d, loss, fit, topt);
  return kind == TestKind::lm_s ? res.s.p_bootstrap : res.mm.p_bootstrap;
}

}  // namespace

CellResult run_level_power(const ScenarioSpec& spec, TestKind kind,
                           const ExperimentOptions& opt) {
  CellResult cell;
  int reject = 0;
  for (int rep = 0; rep < opt.repetitions; ++rep) {
    try {
      const double p = run_one_test(spec, kind, opt, rep);
      if (p <= opt.level + 1e-12) ++reject;
      ++cell.repetitions;
    } catch (const Error&) {
      ++cell.failures;
    }
  }
  if (cell.repetitions > 0) {
    cell.rate = static_cast<double>(reject) / cell.repetitions;
    cell.se = std::sqrt(cell.rate * (1.0 - cell.rate) / cell.repetitions);
  }
  return cell;
}

CellResult run_coverage(const ScenarioSpec& spec, CiMethod method,
                        const ExperimentOptions& opt) {
  const double level = 1.0 - opt.level;
  CellResult cell;
  long covered = 0, total = 0;
  double length = 0.0;
  for (int rep = 0; rep < opt.repetitions; ++rep) {
    try {
      const SurData data = generate_scenario(spec, rep);
      const StackedDesign d = make_stacked(data);
      const LossPair loss = make_loss_pair(d.m);
      SOptions sopt;
      sopt.candidates = opt.candidates;
      sopt.seed = derive_seed(opt.seed, 2 * static_cast<std::uint64_t>(rep));
      const RobustFit fit = robust_fit(d, loss, sopt);

      std::vector<CiResult> cis;
      if (method == CiMethod::asymptotic) {
        cis = ci_asymptotic(d, loss, fit.mm, level);
      } else {
        const FrbCorrection corr(d, loss, theta_pack(fit));
        const FrbDraws draws = frb_draws(
            d, loss, corr, opt.bootstrap,
            derive_seed(opt.seed, 2 * static_cast<std::uint64_t>(rep) + 1),
            opt.threads);
        if (method == CiMethod::bca) {
          const Eigen::MatrixXd jk = jackknife_betas(d, loss, corr);
          cis = ci_percentile(draws, fit.mm.beta, level, method, &jk);
        } else {
          cis = ci_percentile(draws, fit.mm.beta, level, method);
        }
      }

      const Eigen::VectorXd beta = scenario_beta(spec);
      for (int j = 0; j < data.m(); ++j)
        for (int c = 1; c <= spec.predictors; ++c) {
          const int k = data.coef_offset(j) + c;
          covered += (cis[static_cast<std::size_t>(k)].lower <= beta[k] &&
                      beta[k] <= cis[static_cast<std::size_t>(k)].upper);
          length += cis[static_cast<std::size_t>(k)].upper -
                    cis[static_cast<std::size_t>(k)].lower;
          ++total;
        }
      ++cell.repetitions;
    } catch (const Error&) {
      ++cell.failures;
    }
  }
  if (total > 0) {
    cell.rate = static_cast<double>(covered) / total;
    cell.se = std::sqrt(cell.rate * (1.0 - cell.rate) / cell.repetitions);
    cell.mean_length = length / total;
  }
  return cell;
}

}  // namespace robsur
