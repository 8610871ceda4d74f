#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robsur/bisquare.hpp"

using robsur::Bisquare;

namespace {

// Central finite difference, used as the derivative oracle.
template <typename F>
double fd(const F& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("bisquare closed-form values at u=1, c=2") {
  Bisquare r(2.0);
  // rho = 1/2 - 1/8 + 1/96, psi = (1 - 1/4)^2, dpsi = (1 - 1/4)(1 - 5/4).
  CHECK(r.rho(1.0) == doctest::Approx(0.5 - 0.125 + 1.0 / 96.0).epsilon(1e-15));
  CHECK(r.psi(1.0) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(r.w(1.0) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(r.dpsi(1.0) == doctest::Approx(-0.1875).epsilon(1e-15));
  CHECK(r.dw(1.0) == doctest::Approx(-0.75).epsilon(1e-15));
  CHECK(r.rho_max() == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("bisquare boundary and tail behaviour") {
  Bisquare r(1.5476);
  const double c = r.tuning();
  CHECK(r.rho(c) == doctest::Approx(r.rho_max()).epsilon(1e-14));
  CHECK(r.rho(c + 0.5) == r.rho_max());
  CHECK(r.rho(100.0) == r.rho_max());
  CHECK(r.psi(c) == 0.0);
  CHECK(r.psi(c + 1e-12) == 0.0);
  CHECK(r.w(0.0) == 1.0);
  CHECK(r.w(c) == 0.0);
  CHECK(r.dpsi(c + 0.1) == 0.0);
  CHECK(r.dw(c + 0.1) == 0.0);
  // Symmetry of rho, antisymmetry of psi.
  CHECK(r.rho(-0.7) == doctest::Approx(r.rho(0.7)).epsilon(1e-15));
  CHECK(r.psi(-0.7) == doctest::Approx(-r.psi(0.7)).epsilon(1e-15));
}

TEST_CASE("bisquare rho is nondecreasing and bounded") {
  Bisquare r(3.1);
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double u = 0.02 * i;
    const double v = r.rho(u);
    CHECK(v >= prev - 1e-15);
    CHECK(v <= r.rho_max() + 1e-15);
    prev = v;
  }
}

TEST_CASE("derivative chain: psi = rho', dpsi = psi', dw = w'") {
  Bisquare r(2.37);
  for (double u : {0.05, 0.3, 0.8, 1.3, 1.9, 2.2, 2.36, 2.5, 3.0}) {
    CHECK(r.psi(u) ==
          doctest::Approx(fd([&](double x) { return r.rho(x); }, u)).epsilon(1e-7));
    CHECK(r.dpsi(u) ==
          doctest::Approx(fd([&](double x) { return r.psi(x); }, u)).epsilon(1e-6));
    CHECK(r.dw(u) ==
          doctest::Approx(fd([&](double x) { return r.w(x); }, u)).epsilon(1e-6));
  }
}

TEST_CASE("weight identity psi(u) = u w(u)") {
  Bisquare r(4.685);
  for (double u : {0.0, 0.01, 1.0, 2.5, 4.0, 4.685, 6.0}) {
    CHECK(r.psi(u) == doctest::Approx(u * r.w(u)).epsilon(1e-14));
  }
}
