#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "robsur/bisquare.hpp"
#include "robsur/constants.hpp"
#include "robsur/errors.hpp"
#include "robsur/prob.hpp"
#include "robsur/rng.hpp"

using namespace robsur;

namespace {

// Monte Carlo oracle: sample mean and standard error of f(d), d ~ chi_m.
struct McMoment {
  double mean;
  double se;
};

template <typename F>
McMoment mc_chi_moment(int m, const F& f, std::size_t ndraw, std::uint64_t seed) {
  Rng rng(seed);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < ndraw; ++i) {
    double q = 0.0;
    for (int j = 0; j < m; ++j) {
      const double z = rng.normal();
      q += z * z;
    }
    const double v = f(std::sqrt(q));
    s1 += v;
    s2 += v * v;
  }
  const double mean = s1 / static_cast<double>(ndraw);
  const double var = s2 / static_cast<double>(ndraw) - mean * mean;
  return {mean, std::sqrt(var / static_cast<double>(ndraw))};
}

constexpr std::size_t kDraws = 2'000'000;  // acceptance suite uses 1e7

void check_within_3se(double quad, const McMoment& mc) {
  CHECK(std::fabs(quad - mc.mean) < 3.0 * mc.se + 1e-12);
}

}  // namespace

TEST_CASE("quadrature + tail mass integrates the chi density to one") {
  for (int m : {1, 2, 3, 6}) {
    const double total = chi_moment(m, 2.0, [](double) { return 1.0; }, 1.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("probability wrappers hit textbook values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-6));
  // Upper chi-squared tail with 2 df has the closed form exp(-x/2).
  CHECK(chisq_upper(6.728, 2) == doctest::Approx(std::exp(-6.728 / 2)).epsilon(1e-12));
  CHECK(chisq_quantile(0.975, 3.0) == doctest::Approx(9.348404).epsilon(1e-6));
  CHECK(chi_cdf(1.0, 2) == doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("classic univariate tuning constants") {
  // 50% breakdown and 95% efficiency constants for the bisquare family are
  // textbook numbers; the Monte Carlo oracle below re-derives them each run.
  const double c0 = tune_breakdown(0.5, 1);
  CHECK(c0 == doctest::Approx(1.5476).epsilon(1e-3));
  const double c1 = tune_efficiency(0.95, 1);
  CHECK(c1 == doctest::Approx(4.685).epsilon(1e-3));

  // Root residuals of the defining equations.
  Bisquare r0(c0);
  CHECK(consistency_delta(r0, 1) ==
        doctest::Approx(0.5 * r0.rho_max()).epsilon(1e-10));
  CHECK(shape_efficiency(c1, 1) == doctest::Approx(0.95).epsilon(1e-10));
}

TEST_CASE("Monte Carlo oracle confirms the breakdown tuning (m = 1, 3)") {
  for (int m : {1, 3}) {
    const double c0 = tune_breakdown(0.5, m);
    Bisquare r(c0);
    const auto mc =
        mc_chi_moment(m, [&](double d) { return r.rho(d); }, kDraws, 20260819u + m);
    // Defining property: E[rho(d)] = 0.5 * rho_max at the tuned constant.
    CHECK(std::fabs(mc.mean - 0.5 * r.rho_max()) < 3.0 * mc.se);
    check_within_3se(consistency_delta(r, m), mc);
  }
}

TEST_CASE("Monte Carlo oracle confirms the moment functionals (m = 3)") {
  const int m = 3;
  const double c1 = tune_efficiency(0.9, m);
  Bisquare r(c1);
  const auto k = normal_constants(r, m);

  check_within_3se(k.delta,
                   mc_chi_moment(m, [&](double d) { return r.rho(d); }, kDraws, 11u));
  check_within_3se(k.eta, mc_chi_moment(m,
                                        [&](double d) {
                                          return (1.0 - 1.0 / m) * r.w(d) +
                                                 (1.0 / m) * r.dpsi(d);
                                        },
                                        kDraws, 12u));
  check_within_3se(k.gamma,
                   mc_chi_moment(m, [&](double d) { return r.psi(d) * d; }, kDraws, 13u));
  check_within_3se(k.alpha, mc_chi_moment(m,
                                          [&](double d) {
                                            const double p = r.psi(d);
                                            return p * p;
                                          },
                                          kDraws, 14u));
  check_within_3se(k.beta2, mc_chi_moment(m,
                                          [&](double d) {
                                            const double p = r.psi(d);
                                            return p * p * d * d;
                                          },
                                          kDraws, 15u));
  CHECK(k.are == doctest::Approx(0.9).epsilon(1e-10));
  CHECK(k.asv_factor == doctest::Approx(1.0 / 0.9).epsilon(1e-10));
  CHECK(k.lr_kappa == doctest::Approx(k.alpha / (k.eta * k.gamma)).epsilon(1e-12));
  // Stein identity at the normal model: E[psi(d) d] = m * eta, hence the
  // LR-type scaling constant collapses to 1/efficiency there.
  CHECK(k.gamma == doctest::Approx(m * k.eta).epsilon(1e-10));
  CHECK(k.lr_kappa == doctest::Approx(1.0 / 0.9).epsilon(1e-9));
}

TEST_CASE("efficiency is increasing in the tuning constant") {
  CHECK(shape_efficiency(3.0, 3) < shape_efficiency(4.0, 3));
  CHECK(shape_efficiency(4.0, 3) < shape_efficiency(6.0, 3));
  CHECK(shape_efficiency(25.0, 3) > 0.999);  // approaches the unweighted fit
}

TEST_CASE("loss pair bundles consistent constants and is cached") {
  const auto lp = make_loss_pair(3, 0.5, 0.9);
  CHECK(lp.delta0 == doctest::Approx(0.5 * lp.rho0.rho_max()).epsilon(1e-10));
  CHECK(lp.delta1 == doctest::Approx(consistency_delta(lp.rho1, 3)).epsilon(1e-14));
  CHECK(lp.rho1.tuning() > lp.rho0.tuning());  // efficiency needs a wider loss
  const auto lp2 = make_loss_pair(3, 0.5, 0.9);
  CHECK(lp2.rho0.tuning() == lp.rho0.tuning());
}

TEST_CASE("tuning validates its arguments") {
  CHECK_THROWS_AS(tune_breakdown(0.0, 2), ConfigError);
  CHECK_THROWS_AS(tune_breakdown(0.7, 2), ConfigError);
  CHECK_THROWS_AS(tune_efficiency(1.0, 2), ConfigError);
  CHECK_THROWS_AS(chi_moment(0, 1.0, [](double) { return 1.0; }), ConfigError);
}
