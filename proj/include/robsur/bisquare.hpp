// Tukey bisquare loss family.
//
// A single tuning constant c > 0 fixes the member
//   rho(u)  = u^2/2 - u^4/(2 c^2) + u^6/(6 c^4)   for |u| <= c,
//           = c^2/6                               for |u| >  c,
// together with its derivative psi = rho', the weight w(u) = psi(u)/u
// (continuously extended by w(0) = 1), and the derivatives psi' and w'
// that the bootstrap linearization needs.  The loss is bounded, which is
// what buys the positive breakdown point of the estimators built on it.
#pragma once

#include <cmath>

namespace robsur {

class Bisquare {
 public:
  explicit Bisquare(double c) : c_(c), c2_(c * c) {}

  double tuning() const { return c_; }
  double rho_max() const { return c2_ / 6.0; }

  double rho(double u) const {
    const double a = std::fabs(u);
    if (a >= c_) return rho_max();
    const double t = (a / c_) * (a / c_);
    return (a * a / 2.0) * (1.0 - t + t * t / 3.0);
  }

  // psi(u) = u (1 - (u/c)^2)^2 on [-c, c], zero outside.
  double psi(double u) const {
    if (std::fabs(u) >= c_) return 0.0;
    const double s = 1.0 - (u / c_) * (u / c_);
    return u * s * s;
  }

  // w(u) = psi(u)/u = (1 - (u/c)^2)^2, with w(0) = 1.
  double w(double u) const {
    if (std::fabs(u) >= c_) return 0.0;
    const double s = 1.0 - (u / c_) * (u / c_);
    return s * s;
  }

  // psi'(u) = (1 - (u/c)^2)(1 - 5 (u/c)^2) on [-c, c], zero outside.
  double dpsi(double u) const {
    if (std::fabs(u) >= c_) return 0.0;
    const double t = (u / c_) * (u / c_);
    return (1.0 - t) * (1.0 - 5.0 * t);
  }

  // w'(u) = -(4 u / c^2)(1 - (u/c)^2) on [-c, c], zero outside.
  double dw(double u) const {
    if (std::fabs(u) >= c_) return 0.0;
    return -(4.0 * u / c2_) * (1.0 - (u / c_) * (u / c_));
  }

 private:
  double c_;
  double c2_;
};

}  // namespace robsur
