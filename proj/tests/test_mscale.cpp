#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robsur/constants.hpp"
#include "robsur/errors.hpp"
#include "robsur/mscale.hpp"
#include "robsur/rng.hpp"

using namespace robsur;

namespace {

// Independent reference: plain bisection on the defining equation.
double bisect_scale(const Eigen::VectorXd& d, const Bisquare& rho,
                    double delta) {
  const auto g = [&](double s) {
    double acc = 0.0;
    for (int i = 0; i < d.size(); ++i) acc += rho.rho(d[i] / s);
    return acc / d.size() - delta;
  };
  double lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("single distance has a closed-form root") {
  // With one observation, rho(d/s) = delta directly; invert rho numerically
  // here and check both agree.
  const Bisquare rho(2.0);
  const double delta = 0.3 * rho.rho_max();
  Eigen::VectorXd d(1);
  d << 1.7;
  const double s = mscale(d, rho, delta);
  CHECK(rho.rho(1.7 / s) == doctest::Approx(delta).epsilon(1e-12));
}

TEST_CASE("matches an independent bisection on random data") {
  Rng rng(42);
  for (int m : {1, 2, 3}) {
    const auto loss = make_loss_pair(m);
    for (int n : {5, 20, 137}) {
      Eigen::VectorXd d(n);
      for (int i = 0; i < n; ++i) d[i] = std::sqrt(rng.chisq(m));
      const double got = mscale(d, loss.rho0, loss.delta0);
      const double ref = bisect_scale(d, loss.rho0, loss.delta0);
      CHECK(got == doctest::Approx(ref).epsilon(1e-12));
      // Defining equation holds at the root.
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += loss.rho0.rho(d[i] / got);
      CHECK(acc / n == doctest::Approx(loss.delta0).epsilon(1e-12));
    }
  }
}

TEST_CASE("scale equivariance") {
  const auto loss = make_loss_pair(2);
  Rng rng(7);
  Eigen::VectorXd d(50);
  for (int i = 0; i < 50; ++i) d[i] = std::sqrt(rng.chisq(2));
  const double s = mscale(d, loss.rho0, loss.delta0);
  for (double c : {1e-6, 0.3, 417.0, 2.5e8})
    CHECK(mscale(c * d, loss.rho0, loss.delta0) ==
          doctest::Approx(c * s).epsilon(1e-10));
}

TEST_CASE("consistency at the reference model") {
  // With delta = E rho(chi_m), the scale of chi_m draws tends to 1.
  const int m = 3, n = 200000;
  const auto loss = make_loss_pair(m);
  Rng rng(20260819);
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = std::sqrt(rng.chisq(m));
  const double s = mscale(d, loss.rho0, loss.delta0);
  CHECK(s == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("exact fit collapses the scale to zero") {
  const auto loss = make_loss_pair(1);  // bdp 0.5: delta0 = rho_max / 2
  Eigen::VectorXd d = Eigen::VectorXd::Zero(10);
  d[0] = 3.0;
  d[1] = 8.0;  // 80% zeros > 50%
  CHECK(mscale(d, loss.rho0, loss.delta0) == 0.0);
  CHECK(mscale(Eigen::VectorXd::Zero(4), loss.rho0, loss.delta0) == 0.0);

  // Just under the threshold there is still a positive root.
  Eigen::VectorXd d2 = Eigen::VectorXd::Ones(10);
  d2.head(4).setZero();  // 40% zeros < 50%
  CHECK(mscale(d2, loss.rho0, loss.delta0) > 0.0);
}

TEST_CASE("one gross outlier has bounded influence") {
  const auto loss = make_loss_pair(1);
  Rng rng(3);
  Eigen::VectorXd d(100);
  for (int i = 0; i < 100; ++i) d[i] = std::abs(rng.normal());
  const double s0 = mscale(d, loss.rho0, loss.delta0);
  Eigen::VectorXd dc = d;
  dc[0] = 1e9;
  const double s1 = mscale(dc, loss.rho0, loss.delta0);
  CHECK(s1 > s0);
  CHECK(s1 < 1.2 * s0);  // far from proportional to the outlier
}

TEST_CASE("invalid inputs are rejected") {
  const Bisquare rho(2.0);
  Eigen::VectorXd d = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(mscale(Eigen::VectorXd(), rho, 0.1), ConfigError);
  CHECK_THROWS_AS(mscale(d, rho, 0.0), ConfigError);
  CHECK_THROWS_AS(mscale(d, rho, rho.rho_max()), ConfigError);
  d[1] = -1.0;
  CHECK_THROWS_AS(mscale(d, rho, 0.1), ConfigError);
}
