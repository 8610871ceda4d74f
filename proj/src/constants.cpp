#include "robsur/constants.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "robsur/errors.hpp"
#include "robsur/prob.hpp"

namespace robsur {

// ------------------------------------------------------------------ prob --

double normal_cdf(double z) {
  static const boost::math::normal_distribution<double> N(0.0, 1.0);
  return boost::math::cdf(N, z);
}

double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> N(0.0, 1.0);
  return boost::math::quantile(N, p);
}

double chisq_cdf(double x, double df) {
  boost::math::chi_squared_distribution<double> d(df);
  return boost::math::cdf(d, x);
}

double chisq_upper(double x, double df) {
  boost::math::chi_squared_distribution<double> d(df);
  return boost::math::cdf(boost::math::complement(d, x));
}

double chisq_quantile(double p, double df) {
  boost::math::chi_squared_distribution<double> d(df);
  return boost::math::quantile(d, p);
}

double chi_cdf(double x, int m) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(0.5 * m, 0.5 * x * x);
}

double chi_pdf(double x, int m) {
  if (x <= 0.0) return 0.0;
  // x^{m-1} exp(-x^2/2) / (2^{m/2 - 1} Gamma(m/2))
  const double log_norm =
      (0.5 * m - 1.0) * std::log(2.0) + std::lgamma(0.5 * m);
  return std::exp((m - 1) * std::log(x) - 0.5 * x * x - log_norm);
}

// ------------------------------------------------------------- quadrature --

double chi_moment(int m, double upper, const std::function<double(double)>& f,
                  double tail) {
  if (m < 1) throw ConfigError("chi_moment: dimension must be >= 1");
  if (upper <= 0.0) throw ConfigError("chi_moment: upper limit must be > 0");
  auto integrand = [&](double x) { return f(x) * chi_pdf(x, m); };
  double err = 0.0;
  const double core = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, upper, 12, 1e-13, &err);
  const double tail_mass = tail == 0.0 ? 0.0 : tail * (1.0 - chi_cdf(upper, m));
  return core + tail_mass;
}

double consistency_delta(const Bisquare& rho, int m) {
  return chi_moment(m, rho.tuning(), [&](double x) { return rho.rho(x); },
                    rho.rho_max());
}

namespace {

// Helper bundling the quadrature moments for a given tuning constant.
AsymptoticConstants compute_constants(const Bisquare& r, int m) {
  AsymptoticConstants k;
  k.c = r.tuning();
  const double c = r.tuning();
  k.delta = consistency_delta(r, m);
  k.eta = chi_moment(m, c, [&](double x) {
    return (1.0 - 1.0 / m) * r.w(x) + (1.0 / m) * r.dpsi(x);
  });
  k.gamma = chi_moment(m, c, [&](double x) { return r.psi(x) * x; });
  k.alpha = chi_moment(m, c, [&](double x) { return r.psi(x) * r.psi(x); });
  k.beta2 = chi_moment(m, c, [&](double x) {
    const double p = r.psi(x);
    return p * p * x * x;
  });
  k.are = m * k.eta * k.eta / k.alpha;
  k.asv_factor = k.alpha / (m * k.eta * k.eta);
  k.lr_kappa = k.alpha / (k.eta * k.gamma);
  k.lm_kappa = m * k.beta2 / ((m + 2.0) * k.gamma * k.gamma);
  return k;
}

// Generic bracketed root finder (TOMS 748) over tuning constants.
double solve_tuning(const std::function<double(double)>& h, double lo, double hi) {
  double flo = h(lo);
  double fhi = h(hi);
  int expand = 0;
  while (flo * fhi > 0.0 && expand < 60) {
    lo *= 0.5;
    hi *= 2.0;
    flo = h(lo);
    fhi = h(hi);
    ++expand;
  }
  if (flo * fhi > 0.0)
    throw NumericError("tuning: failed to bracket the root");
  boost::math::tools::eps_tolerance<double> tol(48);
  std::uintmax_t max_iter = 200;
  auto res = boost::math::tools::toms748_solve(h, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (res.first + res.second);
}

}  // namespace

double shape_efficiency(double c, int m) {
  return compute_constants(Bisquare(c), m).are;
}

double tune_breakdown(double bdp, int m) {
  if (!(bdp > 0.0 && bdp <= 0.5))
    throw ConfigError("tune_breakdown: breakdown point must be in (0, 0.5]");
  auto h = [&](double c) {
    Bisquare r(c);
    return consistency_delta(r, m) - bdp * r.rho_max();
  };
  // The root grows roughly like the chi_m median; sqrt(m) scales the bracket.
  const double s = std::sqrt(static_cast<double>(m));
  return solve_tuning(h, 0.5 * s, 4.0 * s);
}

double tune_efficiency(double eff, int m) {
  if (!(eff > 0.0 && eff < 1.0))
    throw ConfigError("tune_efficiency: efficiency must be in (0, 1)");
  auto h = [&](double c) { return shape_efficiency(c, m) - eff; };
  const double s = std::sqrt(static_cast<double>(m));
  return solve_tuning(h, s, 8.0 * s);
}

AsymptoticConstants normal_constants(const Bisquare& rho, int m) {
  return compute_constants(rho, m);
}

LossPair make_loss_pair(int m, double bdp, double eff) {
  static std::mutex mu;
  static std::map<std::tuple<int, long long, long long>, LossPair> cache;
  const auto key = std::make_tuple(m, std::llround(bdp * 1e12), std::llround(eff * 1e12));
  {
    std::scoped_lock lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  const double c0 = tune_breakdown(bdp, m);
  const double c1 = tune_efficiency(eff, m);
  LossPair lp{m, bdp, eff, Bisquare(c0), Bisquare(c1), 0.0, 0.0};
  lp.delta0 = consistency_delta(lp.rho0, m);
  lp.delta1 = consistency_delta(lp.rho1, m);
  {
    std::scoped_lock lock(mu);
    cache.emplace(key, lp);
  }
  return lp;
}

}  // namespace robsur
