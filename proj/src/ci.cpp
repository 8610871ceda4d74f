#include "robsur/ci.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "robsur/errors.hpp"
#include "robsur/prob.hpp"

namespace robsur {

namespace {

// Interpolated order statistic at 1-based fractional rank h.
double order_stat(const std::vector<double>& sorted, double h) {
  const int n = static_cast<int>(sorted.size());
  if (h <= 1.0) return sorted.front();
  if (h >= n) return sorted.back();
  const int k = static_cast<int>(h);
  const double frac = h - k;
  return sorted[static_cast<std::size_t>(k - 1)] +
         frac * (sorted[static_cast<std::size_t>(k)] -
                 sorted[static_cast<std::size_t>(k - 1)]);
}

}  // namespace

Eigen::MatrixXd asv_beta(const StackedDesign& d, const LossPair& loss,
                         const MMFit& fit) {
  const int n = d.n, m = d.m;
  const Eigen::MatrixXd Si = fit.Sigma.inverse();
  const Bisquare& rho = loss.rho1;

  double alpha = 0.0, eta = 0.0;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(d.p, d.p);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = d.residual(i, fit.beta);
    const double di = std::sqrt(std::max(0.0, e.dot(Si * e)));
    const double psi = rho.psi(di);
    alpha += psi * psi;
    eta += (1.0 - 1.0 / m) * rho.w(di) + (1.0 / m) * rho.dpsi(di);
    const auto& x = d.x[static_cast<std::size_t>(i)];
    info.noalias() += x.transpose() * Si * x;
  }
  alpha /= n;
  eta /= n;
  info /= n;
  if (!(eta > 0.0))
    throw NumericError("coefficient variance: eta moment is not positive");

  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("coefficient variance: singular empirical information");
  return (alpha / (m * eta * eta)) *
         ldlt.solve(Eigen::MatrixXd::Identity(d.p, d.p));
}

std::vector<CiResult> ci_asymptotic(const StackedDesign& d,
                                    const LossPair& loss, const MMFit& fit,
                                    double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("confidence level must lie in (0, 1)");
  const Eigen::MatrixXd asv = asv_beta(d, loss, fit);
  const double z = normal_quantile(0.5 + 0.5 * level);

  std::vector<CiResult> out;
  out.reserve(static_cast<std::size_t>(d.p));
  for (int k = 0; k < d.p; ++k) {
    const double half = z * std::sqrt(std::max(0.0, asv(k, k)) / d.n);
    CiResult ci;
    ci.parameter = k;
    ci.estimate = fit.beta[k];
    ci.lower = fit.beta[k] - half;
    ci.upper = fit.beta[k] + half;
    ci.method = CiMethod::asymptotic;
    ci.level = level;
    out.push_back(ci);
  }
  return out;
}

Eigen::MatrixXd jackknife_betas(const StackedDesign& d, const LossPair& loss,
                                const FrbCorrection& corr) {
  const int n = d.n;
  const int p = d.p;
  Eigen::MatrixXd out(n, p);
  Eigen::VectorXd counts = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    counts[i] = 0.0;
    try {
      out.row(i) = frb_replicate(d, loss, corr, counts).head(p).transpose();
    } catch (const Error&) {
      out.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
    counts[i] = 1.0;
  }
  return out;
}

std::vector<CiResult> ci_percentile(const FrbDraws& draws,
                                    const Eigen::VectorXd& estimate,
                                    double level, CiMethod method,
                                    const Eigen::MatrixXd* jackknife) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("confidence level must lie in (0, 1)");
  if (method == CiMethod::asymptotic)
    throw ConfigError("percentile construction needs a percentile method");
  const int N = static_cast<int>(draws.thetas.rows());
  if (N < 10)
    throw DegenerateDataError("too few bootstrap replicates for percentiles");
  if (draws.thetas.cols() < estimate.size())
    throw ConfigError("replicate matrix narrower than the estimate");

  const double alpha = 1.0 - level;
  std::vector<CiResult> out;
  out.reserve(static_cast<std::size_t>(estimate.size()));
  std::vector<double> col(static_cast<std::size_t>(N));
  for (int k = 0; k < estimate.size(); ++k) {
    for (int r = 0; r < N; ++r) col[static_cast<std::size_t>(r)] = draws.thetas(r, k);
    std::sort(col.begin(), col.end());

    double a_lo = 0.5 * alpha, a_hi = 1.0 - 0.5 * alpha;
    if (method == CiMethod::bca) {
      int below = 0;
      for (const double v : col)
        if (v < estimate[k]) ++below;
      // Clamp so z0 stays finite when the estimate falls outside the draws.
      const double frac =
          std::min(std::max((below + 0.0) / N, 0.5 / (N + 1.0)),
                   1.0 - 0.5 / (N + 1.0));
      const double z0 = normal_quantile(frac);

      double accel = 0.0;
      if (jackknife != nullptr) {
        double mean = 0.0;
        int cnt = 0;
        for (int i = 0; i < jackknife->rows(); ++i)
          if (std::isfinite((*jackknife)(i, k))) {
            mean += (*jackknife)(i, k);
            ++cnt;
          }
        if (cnt >= 3) {
          mean /= cnt;
          double s2 = 0.0, s3 = 0.0;
          for (int i = 0; i < jackknife->rows(); ++i)
            if (std::isfinite((*jackknife)(i, k))) {
              const double u = mean - (*jackknife)(i, k);
              s2 += u * u;
              s3 += u * u * u;
            }
          if (s2 > 0.0) accel = s3 / (6.0 * std::pow(s2, 1.5));
        }
      }

      const double zl = z0 + normal_quantile(0.5 * alpha);
      const double zr = z0 + normal_quantile(1.0 - 0.5 * alpha);
      a_lo = normal_cdf(z0 + zl / (1.0 - accel * zl));
      a_hi = normal_cdf(z0 + zr / (1.0 - accel * zr));
    }

    CiResult ci;
    ci.parameter = k;
    ci.estimate = estimate[k];
    ci.lower = order_stat(col, (N + 1.0) * a_lo);
    ci.upper = order_stat(col, (N + 1.0) * a_hi);
    ci.method = method;
    ci.level = level;
    out.push_back(ci);
  }
  return out;
}

}  // namespace robsur
