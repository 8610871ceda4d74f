#include "robsur/mscale.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

#include "robsur/errors.hpp"

namespace robsur {

double mscale(const Eigen::VectorXd& d, const Bisquare& rho, double delta) {
  const int n = static_cast<int>(d.size());
  if (n == 0) throw ConfigError("mscale: empty distance vector");
  const double rmax = rho.rho_max();
  if (!(delta > 0.0) || !(delta < rmax))
    throw ConfigError("mscale: delta outside (0, rho_max)");

  int nonzero = 0;
  double dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double di = d[i];
    if (!(di >= 0.0)) throw ConfigError("mscale: negative or NaN distance");
    if (di > 0.0) ++nonzero;
    dmax = std::max(dmax, di);
  }
  // No positive root: the mean of rho never reaches delta.
  if (rmax * nonzero <= delta * n) return 0.0;

  const auto g = [&](double s) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += rho.rho(d[i] / s);
    return acc / n - delta;
  };

  // Bracket the root.  g > 0 for small s, g < 0 for large s; start from a
  // scale-equivariant guess and expand geometrically.
  double lo = dmax / (2.0 * rho.tuning());
  if (!(lo > 0.0)) lo = 1.0;
  double hi = lo;
  while (g(lo) <= 0.0) lo *= 0.5;
  while (g(hi) > 0.0) hi *= 2.0;

  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

double mscale(const Eigen::VectorXd& d, const Eigen::VectorXd& w,
              const Bisquare& rho, double delta) {
  const int n = static_cast<int>(d.size());
  if (n == 0 || w.size() != n)
    throw ConfigError("mscale: empty distances or mismatched weights");
  const double rmax = rho.rho_max();
  if (!(delta > 0.0) || !(delta < rmax))
    throw ConfigError("mscale: delta outside (0, rho_max)");

  double wsum = 0.0, wpos = 0.0, dmax = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(d[i] >= 0.0)) throw ConfigError("mscale: negative or NaN distance");
    if (!(w[i] >= 0.0)) throw ConfigError("mscale: negative or NaN weight");
    wsum += w[i];
    if (d[i] > 0.0) {
      wpos += w[i];
      if (w[i] > 0.0) dmax = std::max(dmax, d[i]);
    }
  }
  if (!(wsum > 0.0)) throw ConfigError("mscale: weights sum to zero");
  if (rmax * wpos <= delta * wsum) return 0.0;

  const auto g = [&](double s) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      if (w[i] > 0.0) acc += w[i] * rho.rho(d[i] / s);
    return acc / wsum - delta;
  };

  double lo = dmax / (2.0 * rho.tuning());
  if (!(lo > 0.0)) lo = 1.0;
  double hi = lo;
  while (g(lo) <= 0.0) lo *= 0.5;
  while (g(hi) > 0.0) hi *= 2.0;

  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

}  // namespace robsur
