#include "robsur/gfun.hpp"

#include <cmath>

#include "robsur/errors.hpp"
#include "robsur/mscale.hpp"

namespace robsur {
namespace {

Eigen::VectorXd vecm(const Eigen::MatrixXd& A) {
  return Eigen::Map<const Eigen::VectorXd>(A.data(), A.size());
}

// w'(u)/u with its continuous limit -4/c^2 at zero.
double dw_over_u(const Bisquare& f, double u) {
  const double c = f.tuning();
  if (std::fabs(u) >= c) return 0.0;
  const double t = (u / c) * (u / c);
  return -(4.0 / (c * c)) * (1.0 - t);
}

// (r' kron A) for a length-m vector r and a p x m matrix A: p x m^2 with
// column block j equal to r_j A.  Matches column-major vec ordering.
Eigen::MatrixXd kron_row_mat(const Eigen::VectorXd& r,
                             const Eigen::MatrixXd& A) {
  const int m = static_cast<int>(r.size());
  const int p = static_cast<int>(A.rows());
  Eigen::MatrixXd K(p, m * static_cast<int>(A.cols()));
  for (int j = 0; j < m; ++j) K.middleCols(j * A.cols(), A.cols()) = r(j) * A;
  return K;
}

// (e kron I + I kron e) X: the differential of vec(e e') through de = X db.
Eigen::MatrixXd vec_outer_jac(const Eigen::VectorXd& e,
                              const Eigen::MatrixXd& X) {
  const int m = static_cast<int>(e.size());
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd J(m * m, p);
  for (int k = 0; k < m; ++k)
    J.middleRows(k * m, m) = e(k) * X + e * X.row(k);
  return J;
}

void mask_offdiag(Eigen::MatrixXd& A) {
  Eigen::VectorXd diag = A.diagonal();
  A.setZero();
  A.diagonal() = diag;
}

// m-th root of the determinant of a general (possibly perturbed) matrix.
double det_root(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, int m,
                const char* what) {
  const double det = lu.determinant();
  if (!(det > 0.0)) throw NumericError(std::string(what) + " is not positive definite");
  return std::pow(det, 1.0 / m);
}

}  // namespace

Eigen::VectorXd theta_pack(const RobustFit& fit) {
  const int p = static_cast<int>(fit.mm.beta.size());
  const int m = static_cast<int>(fit.mm.Gamma.rows());
  Eigen::VectorXd theta(theta_dim(m, p));
  theta.head(p) = fit.mm.beta;
  theta.segment(p, m * m) = vecm(fit.mm.Gamma);
  theta.segment(p + m * m, m * m) = vecm(fit.s.Sigma);
  theta.tail(p) = fit.s.beta;
  return theta;
}

void theta_unpack(const Eigen::VectorXd& theta, int m, int p,
                  Eigen::VectorXd& beta_mm, Eigen::MatrixXd& Gamma,
                  Eigen::MatrixXd& Sigma_s, Eigen::VectorXd& beta_s,
                  bool diagonal) {
  if (theta.size() != theta_dim(m, p))
    throw NumericError("estimate vector has the wrong dimension");
  beta_mm = theta.head(p);
  Gamma = Eigen::Map<const Eigen::MatrixXd>(theta.data() + p, m, m);
  Sigma_s = Eigen::Map<const Eigen::MatrixXd>(theta.data() + p + m * m, m, m);
  beta_s = theta.tail(p);
  if (diagonal) {
    mask_offdiag(Gamma);
    mask_offdiag(Sigma_s);
  }
}

Eigen::VectorXd g_eval(const StackedDesign& d, const LossPair& loss,
                       const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& counts, bool diagonal) {
  const int n = d.n, m = d.m, p = d.p;
  if (counts.size() != n) throw NumericError("resample weights have the wrong length");
  Eigen::VectorXd bmm, bs;
  Eigen::MatrixXd Gam, Sig;
  theta_unpack(theta, m, p, bmm, Gam, Sig, bs, diagonal);

  const Eigen::PartialPivLU<Eigen::MatrixXd> glu(Gam);
  const Eigen::PartialPivLU<Eigen::MatrixXd> slu(Sig);
  const Eigen::MatrixXd Gi = glu.inverse();
  const Eigen::MatrixXd Si = slu.inverse();
  const double sig2 = det_root(slu, m, "first-stage covariance");
  det_root(glu, m, "shape matrix");  // validity check only

  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd Ut = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Wt = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd Vt = Eigen::MatrixXd::Zero(m, m);
  double sv = 0.0;

  for (int i = 0; i < n; ++i) {
    const double c = counts[i];
    if (c == 0.0) continue;
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();

    const Eigen::VectorXd e = y - x * bmm;
    const double q = e.dot(Gi * e);
    const double di = std::sqrt(std::max(0.0, q) / sig2);
    const double w1 = loss.rho1.w(di);
    if (w1 > 0.0) {
      const Eigen::MatrixXd xg = x.transpose() * Gi;  // p x m
      U.noalias() += (c * w1) * (xg * x);
      W.noalias() += (c * w1) * (xg * y);
      V.noalias() += (c * w1) * (e * e.transpose());
    }

    const Eigen::VectorXd et = y - x * bs;
    const double dt = std::sqrt(std::max(0.0, et.dot(Si * et)));
    const double w0 = loss.rho0.w(dt);
    sv += c * (loss.rho0.psi(dt) * dt - loss.rho0.rho(dt) + loss.delta0);
    if (w0 > 0.0) {
      const Eigen::MatrixXd xs = x.transpose() * Si;
      Ut.noalias() += (c * w0) * (xs * x);
      Wt.noalias() += (c * w0) * (xs * y);
      Vt.noalias() += (c * w0) * (et * et.transpose());
    }
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> ulu(U);
  const Eigen::PartialPivLU<Eigen::MatrixXd> utlu(Ut);
  if (!(std::fabs(ulu.determinant()) > 0.0) || !(std::fabs(utlu.determinant()) > 0.0))
    throw NumericError("weighted normal equations are singular");
  if (!(sv > 0.0)) throw NumericError("scale equation has no positive mass");

  if (diagonal) {
    mask_offdiag(V);
    mask_offdiag(Vt);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> vlu(V);
  const Eigen::MatrixXd phiV = V / det_root(vlu, m, "weighted scatter");

  Eigen::VectorXd out(theta_dim(m, p));
  out.head(p) = ulu.solve(W);
  out.segment(p, m * m) = vecm(phiV);
  out.segment(p + m * m, m * m) = vecm((m / sv) * Vt);
  out.tail(p) = utlu.solve(Wt);
  return out;
}

Eigen::MatrixXd grad_g(const StackedDesign& d, const LossPair& loss,
                       const Eigen::VectorXd& theta, bool diagonal) {
  const int n = d.n, m = d.m, p = d.p, q = m * m;
  const int dim = theta_dim(m, p);
  Eigen::VectorXd bmm, bs;
  Eigen::MatrixXd Gam, Sig;
  theta_unpack(theta, m, p, bmm, Gam, Sig, bs, diagonal);

  const Eigen::PartialPivLU<Eigen::MatrixXd> glu(Gam);
  const Eigen::PartialPivLU<Eigen::MatrixXd> slu(Sig);
  const Eigen::MatrixXd Gi = glu.inverse();
  const Eigen::MatrixXd Si = slu.inverse();
  const double sig2 = det_root(slu, m, "first-stage covariance");
  det_root(glu, m, "shape matrix");
  const Eigen::VectorXd vSi = vecm(Si);

  // First pass: the weighted systems the map itself produces.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd Ut = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Wt = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd Vt = Eigen::MatrixXd::Zero(m, m);
  double sv = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();
    const Eigen::VectorXd e = y - x * bmm;
    const double di = std::sqrt(std::max(0.0, e.dot(Gi * e)) / sig2);
    const double w1 = loss.rho1.w(di);
    const Eigen::MatrixXd xg = x.transpose() * Gi;
    U.noalias() += w1 * (xg * x);
    W.noalias() += w1 * (xg * y);
    V.noalias() += w1 * (e * e.transpose());
    const Eigen::VectorXd et = y - x * bs;
    const double dt = std::sqrt(std::max(0.0, et.dot(Si * et)));
    const double w0 = loss.rho0.w(dt);
    const Eigen::MatrixXd xs = x.transpose() * Si;
    Ut.noalias() += w0 * (xs * x);
    Wt.noalias() += w0 * (xs * y);
    Vt.noalias() += w0 * (et * et.transpose());
    sv += loss.rho0.psi(dt) * dt - loss.rho0.rho(dt) + loss.delta0;
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> ulu(U);
  const Eigen::PartialPivLU<Eigen::MatrixXd> utlu(Ut);
  const Eigen::VectorXd bplus = ulu.solve(W);
  const Eigen::VectorXd btplus = utlu.solve(Wt);
  if (diagonal) {
    mask_offdiag(V);
    mask_offdiag(Vt);
  }

  // Derivative of phi at V: |V|^{-1/m} (I - vec(V) vec(V^{-1})' / m).
  const Eigen::PartialPivLU<Eigen::MatrixXd> vlu(V);
  const double vroot = det_root(vlu, m, "weighted scatter");
  const Eigen::MatrixXd Vi = vlu.inverse();
  Eigen::MatrixXd Sphi = Eigen::MatrixXd::Identity(q, q);
  Sphi.noalias() -= (1.0 / m) * (vecm(V) * vecm(Vi).transpose());
  Sphi /= vroot;

  // Column offsets of the four segments of theta.
  const int oG = p, oS = p + q, oBs = p + 2 * q;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  // Accumulators for U^{-1}-premultiplied row blocks.
  Eigen::MatrixXd R1b = Eigen::MatrixXd::Zero(p, p);   // rows g1, cols beta_hat
  Eigen::MatrixXd R1G = Eigen::MatrixXd::Zero(p, q);   // rows g1, cols Gamma
  Eigen::VectorXd r1S = Eigen::VectorXd::Zero(p);      // rows g1, cols Sigma (times vec(Si)')
  Eigen::MatrixXd V_b = Eigen::MatrixXd::Zero(q, p);   // d vec V / d beta_hat
  Eigen::MatrixXd V_G = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd v_S = Eigen::VectorXd::Zero(q);      // times vec(Si)'
  Eigen::MatrixXd Vt_b = Eigen::MatrixXd::Zero(q, p);  // d vec Vt / d beta_tilde
  Eigen::MatrixXd Vt_S = Eigen::MatrixXd::Zero(q, q);
  Eigen::RowVectorXd sv_b = Eigen::RowVectorXd::Zero(p);
  Eigen::RowVectorXd sv_S = Eigen::RowVectorXd::Zero(q);
  Eigen::MatrixXd R4b = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd R4S = Eigen::MatrixXd::Zero(p, q);

  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();

    // Second-stage quantities.
    const Eigen::VectorXd e = y - x * bmm;
    const double di = std::sqrt(std::max(0.0, e.dot(Gi * e)) / sig2);
    const double w1 = loss.rho1.w(di);
    const double r1 = dw_over_u(loss.rho1, di);  // w1'(d)/d
    const Eigen::MatrixXd xg = x.transpose() * Gi;           // p x m
    const Eigen::VectorXd a = xg * e;                         // p
    const Eigen::VectorXd b = xg * y;                         // p
    const Eigen::VectorXd Kb_b = xg * (x * bplus) - b;        // K bplus - b
    const Eigen::VectorXd ge = Gi * e;                        // m
    const Eigen::VectorXd vee = vecm(e * e.transpose());      // q
    const Eigen::VectorXd vM = vecm(ge * ge.transpose());     // vec(Gi e e' Gi)

    if (w1 > 0.0 || r1 != 0.0) {
      R1b.noalias() += (r1 / sig2) * (Kb_b * a.transpose());
      R1G.noalias() += (r1 / (2.0 * sig2)) * (Kb_b * vM.transpose());
      R1G.noalias() += w1 * kron_row_mat(Gi * (x * bplus - y), xg);
      r1S.noalias() += (loss.rho1.dw(di) * di) * Kb_b;
      const Eigen::MatrixXd P = vec_outer_jac(e, x);
      V_b.noalias() -= w1 * P;
      V_b.noalias() -= (r1 / sig2) * (vee * a.transpose());
      V_G.noalias() -= (r1 / (2.0 * sig2)) * (vee * vM.transpose());
      v_S.noalias() -= (loss.rho1.dw(di) * di) * vee;
    }

    // First-stage quantities.
    const Eigen::VectorXd et = y - x * bs;
    const double dt = std::sqrt(std::max(0.0, et.dot(Si * et)));
    const double w0 = loss.rho0.w(dt);
    const double r0 = dw_over_u(loss.rho0, dt);
    const double dpsi0 = loss.rho0.dpsi(dt);
    const Eigen::MatrixXd xs = x.transpose() * Si;
    const Eigen::VectorXd at = xs * et;
    const Eigen::VectorXd btv = xs * y;
    const Eigen::VectorXd Ktb_b = xs * (x * btplus) - btv;
    const Eigen::VectorXd se = Si * et;
    const Eigen::VectorXd veet = vecm(et * et.transpose());
    const Eigen::VectorXd vMt = vecm(se * se.transpose());

    if (w0 > 0.0 || r0 != 0.0) {
      const Eigen::MatrixXd Pt = vec_outer_jac(et, x);
      Vt_b.noalias() -= w0 * Pt;
      Vt_b.noalias() -= r0 * (veet * at.transpose());
      Vt_S.noalias() -= (r0 / 2.0) * (veet * vMt.transpose());
      R4b.noalias() += r0 * (Ktb_b * at.transpose());
      R4S.noalias() += (r0 / 2.0) * (Ktb_b * vMt.transpose());
      R4S.noalias() += w0 * kron_row_mat(Si * (x * btplus - y), xs);
    }
    if (dpsi0 != 0.0) {
      sv_b.noalias() -= dpsi0 * at.transpose();
      sv_S.noalias() -= (dpsi0 / 2.0) * vMt.transpose();
    }
  }

  // g1 rows.
  J.block(0, 0, p, p) = ulu.solve(R1b);
  J.block(0, oG, p, q) = ulu.solve(R1G);
  J.block(0, oS, p, q) = ulu.solve(r1S) * vSi.transpose() / (2.0 * m);

  // g2 rows: Sphi times the derivative of vec V (masked in diagonal mode).
  Eigen::MatrixXd VS = v_S * vSi.transpose() / (2.0 * m);
  if (diagonal) {
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (k != l) {
          V_b.row(k + m * l).setZero();
          V_G.row(k + m * l).setZero();
          VS.row(k + m * l).setZero();
        }
  }
  J.block(oG, 0, q, p) = Sphi * V_b;
  J.block(oG, oG, q, q) = Sphi * V_G;
  J.block(oG, oS, q, q) = Sphi * VS;

  // g3 rows: (m/sv) dVt - (m/sv^2) vec(Vt) dsv.
  Eigen::MatrixXd G3b = (m / sv) * Vt_b - (m / (sv * sv)) * vecm(Vt) * sv_b;
  Eigen::MatrixXd G3S = (m / sv) * Vt_S - (m / (sv * sv)) * vecm(Vt) * sv_S;
  if (diagonal) {
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (k != l) {
          G3b.row(k + m * l).setZero();
          G3S.row(k + m * l).setZero();
        }
  }
  J.block(oS, oBs, q, p) = G3b;
  J.block(oS, oS, q, q) = G3S;

  // g4 rows.
  J.block(oBs, oBs, p, p) = utlu.solve(R4b);
  J.block(oBs, oS, p, q) = utlu.solve(R4S);

  if (diagonal) {
    // Off-diagonal coordinates of the two matrices are ignored on input.
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (k != l) {
          J.col(oG + k + m * l).setZero();
          J.col(oS + k + m * l).setZero();
        }
  }
  return J;
}

Eigen::VectorXd theta_pack_shape(const RobustFit& fit) {
  const int p = static_cast<int>(fit.mm.beta.size());
  const int m = static_cast<int>(fit.mm.Gamma.rows());
  Eigen::VectorXd theta(theta_dim(m, p));
  theta.head(p) = fit.mm.beta;
  theta.segment(p, m * m) = vecm(fit.mm.Gamma);
  const Eigen::PartialPivLU<Eigen::MatrixXd> slu(fit.s.Sigma);
  theta.segment(p + m * m, m * m) =
      vecm(fit.s.Sigma / det_root(slu, m, "first-stage covariance"));
  theta.tail(p) = fit.s.beta;
  return theta;
}

Eigen::VectorXd g_eval_shape(const StackedDesign& d, const LossPair& loss,
                             const Eigen::VectorXd& theta,
                             const Eigen::VectorXd& counts, bool diagonal) {
  const int n = d.n, m = d.m, p = d.p;
  if (counts.size() != n) throw NumericError("resample weights have the wrong length");
  Eigen::VectorXd bmm, bs;
  Eigen::MatrixXd Gam, Gt;
  theta_unpack(theta, m, p, bmm, Gam, Gt, bs, diagonal);

  const Eigen::PartialPivLU<Eigen::MatrixXd> glu(Gam);
  const Eigen::PartialPivLU<Eigen::MatrixXd> gtlu(Gt);
  const Eigen::MatrixXd Gi = glu.inverse();
  const Eigen::MatrixXd Gti = gtlu.inverse();
  det_root(glu, m, "shape matrix");  // validity checks only
  det_root(gtlu, m, "first-stage shape matrix");

  Eigen::VectorXd dt(n);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd et = d.Y.row(i).transpose() - x * bs;
    dt[i] = std::sqrt(std::max(0.0, et.dot(Gti * et)));
  }
  const double st = mscale(dt, counts, loss.rho0, loss.delta0);
  if (!(st > 0.0)) throw NumericError("first-stage scale degenerated to zero");

  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd Ut = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Wt = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd Vt = Eigen::MatrixXd::Zero(m, m);

  for (int i = 0; i < n; ++i) {
    const double c = counts[i];
    if (c == 0.0) continue;
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();

    const Eigen::VectorXd e = y - x * bmm;
    const double di = std::sqrt(std::max(0.0, e.dot(Gi * e))) / st;
    const double w1 = loss.rho1.w(di);
    if (w1 > 0.0) {
      const Eigen::MatrixXd xg = x.transpose() * Gi;
      U.noalias() += (c * w1) * (xg * x);
      W.noalias() += (c * w1) * (xg * y);
      V.noalias() += (c * w1) * (e * e.transpose());
    }

    const Eigen::VectorXd et = y - x * bs;
    const double w0 = loss.rho0.w(dt[i] / st);
    if (w0 > 0.0) {
      const Eigen::MatrixXd xs = x.transpose() * Gti;
      Ut.noalias() += (c * w0) * (xs * x);
      Wt.noalias() += (c * w0) * (xs * y);
      Vt.noalias() += (c * w0) * (et * et.transpose());
    }
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> ulu(U);
  const Eigen::PartialPivLU<Eigen::MatrixXd> utlu(Ut);
  if (!(std::fabs(ulu.determinant()) > 0.0) || !(std::fabs(utlu.determinant()) > 0.0))
    throw NumericError("weighted normal equations are singular");

  if (diagonal) {
    mask_offdiag(V);
    mask_offdiag(Vt);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> vlu(V);
  const Eigen::PartialPivLU<Eigen::MatrixXd> vtlu(Vt);

  Eigen::VectorXd out(theta_dim(m, p));
  out.head(p) = ulu.solve(W);
  out.segment(p, m * m) = vecm(V / det_root(vlu, m, "weighted scatter"));
  out.segment(p + m * m, m * m) =
      vecm(Vt / det_root(vtlu, m, "weighted first-stage scatter"));
  out.tail(p) = utlu.solve(Wt);
  return out;
}

Eigen::MatrixXd grad_g_shape(const StackedDesign& d, const LossPair& loss,
                             const Eigen::VectorXd& theta, bool diagonal) {
  const int n = d.n, m = d.m, p = d.p, q = m * m;
  const int dim = theta_dim(m, p);
  Eigen::VectorXd bmm, bs;
  Eigen::MatrixXd Gam, Gt;
  theta_unpack(theta, m, p, bmm, Gam, Gt, bs, diagonal);

  const Eigen::PartialPivLU<Eigen::MatrixXd> glu(Gam);
  const Eigen::PartialPivLU<Eigen::MatrixXd> gtlu(Gt);
  const Eigen::MatrixXd Gi = glu.inverse();
  const Eigen::MatrixXd Gti = gtlu.inverse();
  det_root(glu, m, "shape matrix");
  det_root(gtlu, m, "first-stage shape matrix");

  Eigen::VectorXd dt(n);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd et = d.Y.row(i).transpose() - x * bs;
    dt[i] = std::sqrt(std::max(0.0, et.dot(Gti * et)));
  }
  const double st = mscale(dt, loss.rho0, loss.delta0);
  if (!(st > 0.0)) throw NumericError("first-stage scale degenerated to zero");
  const double st2 = st * st;

  // Gradient rows of the implicit scale, from differentiating the M-scale
  // equation: ds = -(1/A0) sum_i psi0(u_i) d(dt_i), A0 = sum_i psi0(u_i) u_i.
  double A0 = 0.0;
  Eigen::RowVectorXd st_b = Eigen::RowVectorXd::Zero(p);
  Eigen::RowVectorXd st_G = Eigen::RowVectorXd::Zero(q);
  for (int i = 0; i < n; ++i) {
    const double ut = dt[i] / st;
    A0 += loss.rho0.psi(ut) * ut;
    if (dt[i] > 0.0) {
      const double k0 = loss.rho0.psi(ut) / dt[i];
      if (k0 != 0.0) {
        const auto& x = d.x[static_cast<std::size_t>(i)];
        const Eigen::VectorXd et = d.Y.row(i).transpose() - x * bs;
        const Eigen::VectorXd se = Gti * et;
        st_b.noalias() -= k0 * (x.transpose() * se).transpose();
        st_G.noalias() -= (k0 / 2.0) * vecm(se * se.transpose()).transpose();
      }
    }
  }
  if (!(A0 > 0.0)) throw NumericError("scale equation is degenerate");
  st_b /= A0;
  st_G /= A0;

  // First pass: the weighted systems the map itself produces.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd W = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd Ut = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd Wt = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd Vt = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();
    const Eigen::VectorXd e = y - x * bmm;
    const double di = std::sqrt(std::max(0.0, e.dot(Gi * e))) / st;
    const double w1 = loss.rho1.w(di);
    const Eigen::MatrixXd xg = x.transpose() * Gi;
    U.noalias() += w1 * (xg * x);
    W.noalias() += w1 * (xg * y);
    V.noalias() += w1 * (e * e.transpose());
    const Eigen::VectorXd et = y - x * bs;
    const double w0 = loss.rho0.w(dt[i] / st);
    const Eigen::MatrixXd xs = x.transpose() * Gti;
    Ut.noalias() += w0 * (xs * x);
    Wt.noalias() += w0 * (xs * y);
    Vt.noalias() += w0 * (et * et.transpose());
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> ulu(U);
  const Eigen::PartialPivLU<Eigen::MatrixXd> utlu(Ut);
  const Eigen::VectorXd bplus = ulu.solve(W);
  const Eigen::VectorXd btplus = utlu.solve(Wt);
  if (diagonal) {
    mask_offdiag(V);
    mask_offdiag(Vt);
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> vlu(V);
  const double vroot = det_root(vlu, m, "weighted scatter");
  Eigen::MatrixXd Sphi = Eigen::MatrixXd::Identity(q, q);
  Sphi.noalias() -= (1.0 / m) * (vecm(V) * vecm(vlu.inverse()).transpose());
  Sphi /= vroot;
  const Eigen::PartialPivLU<Eigen::MatrixXd> vtlu(Vt);
  const double vtroot = det_root(vtlu, m, "weighted first-stage scatter");
  Eigen::MatrixXd Sphit = Eigen::MatrixXd::Identity(q, q);
  Sphit.noalias() -= (1.0 / m) * (vecm(Vt) * vecm(vtlu.inverse()).transpose());
  Sphit /= vtroot;

  const int oG = p, oS = p + q, oBs = p + 2 * q;

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd R1b = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd R1G = Eigen::MatrixXd::Zero(p, q);
  Eigen::VectorXd h1 = Eigen::VectorXd::Zero(p);  // scale channel of g1
  Eigen::MatrixXd V_b = Eigen::MatrixXd::Zero(q, p);
  Eigen::MatrixXd V_G = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd hv = Eigen::VectorXd::Zero(q);  // scale channel of vec V
  Eigen::MatrixXd Vt_bs = Eigen::MatrixXd::Zero(q, p);
  Eigen::MatrixXd Vt_Gt = Eigen::MatrixXd::Zero(q, q);
  Eigen::VectorXd hvt = Eigen::VectorXd::Zero(q);  // scale channel of vec Vt
  Eigen::MatrixXd R4b = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd R4G = Eigen::MatrixXd::Zero(p, q);
  Eigen::VectorXd h4 = Eigen::VectorXd::Zero(p);  // scale channel of g4

  for (int i = 0; i < n; ++i) {
    const auto& x = d.x[static_cast<std::size_t>(i)];
    const Eigen::VectorXd y = d.Y.row(i).transpose();

    // Second-stage quantities; d_i = sqrt(e' Gi e) / st, so the scale enters
    // every weight and d(d_i) picks up -(d_i/st) ds on top of the explicit
    // residual and shape terms.
    const Eigen::VectorXd e = y - x * bmm;
    const double di = std::sqrt(std::max(0.0, e.dot(Gi * e))) / st;
    const double w1 = loss.rho1.w(di);
    const double r1 = dw_over_u(loss.rho1, di);
    const Eigen::MatrixXd xg = x.transpose() * Gi;
    const Eigen::VectorXd a = xg * e;
    const Eigen::VectorXd Kb_b = xg * (x * bplus) - xg * y;
    const Eigen::VectorXd ge = Gi * e;
    const Eigen::VectorXd vee = vecm(e * e.transpose());
    const Eigen::VectorXd vM = vecm(ge * ge.transpose());

    if (w1 > 0.0 || r1 != 0.0) {
      R1b.noalias() += (r1 / st2) * (Kb_b * a.transpose());
      R1G.noalias() += (r1 / (2.0 * st2)) * (Kb_b * vM.transpose());
      R1G.noalias() += w1 * kron_row_mat(Gi * (x * bplus - y), xg);
      h1.noalias() += (loss.rho1.dw(di) * di) * Kb_b;
      V_b.noalias() -= w1 * vec_outer_jac(e, x);
      V_b.noalias() -= (r1 / st2) * (vee * a.transpose());
      V_G.noalias() -= (r1 / (2.0 * st2)) * (vee * vM.transpose());
      hv.noalias() += (loss.rho1.dw(di) * di) * vee;
    }

    // First-stage quantities; u_i = dt_i / st with dt_i free of the scale.
    const Eigen::VectorXd et = y - x * bs;
    const double ut = dt[i] / st;
    const double w0 = loss.rho0.w(ut);
    const double r0 = dw_over_u(loss.rho0, ut);
    const Eigen::MatrixXd xs = x.transpose() * Gti;
    const Eigen::VectorXd at = xs * et;
    const Eigen::VectorXd Ktb_b = xs * (x * btplus) - xs * y;
    const Eigen::VectorXd se = Gti * et;
    const Eigen::VectorXd veet = vecm(et * et.transpose());
    const Eigen::VectorXd vMt = vecm(se * se.transpose());

    if (w0 > 0.0 || r0 != 0.0) {
      Vt_bs.noalias() -= w0 * vec_outer_jac(et, x);
      Vt_bs.noalias() -= (r0 / st2) * (veet * at.transpose());
      Vt_Gt.noalias() -= (r0 / (2.0 * st2)) * (veet * vMt.transpose());
      hvt.noalias() += (loss.rho0.dw(ut) * ut) * veet;
      R4b.noalias() += (r0 / st2) * (Ktb_b * at.transpose());
      R4G.noalias() += (r0 / (2.0 * st2)) * (Ktb_b * vMt.transpose());
      R4G.noalias() += w0 * kron_row_mat(Gti * (x * btplus - y), xs);
      h4.noalias() += (loss.rho0.dw(ut) * ut) * Ktb_b;
    }
  }

  // g1 rows: the scale channel spreads over the Gamma_tilde and beta_tilde
  // columns through the rank-one gradient of the implicit scale.
  const Eigen::VectorXd u_h1 = ulu.solve(h1) / st;
  J.block(0, 0, p, p) = ulu.solve(R1b);
  J.block(0, oG, p, q) = ulu.solve(R1G);
  J.block(0, oS, p, q) = u_h1 * st_G;
  J.block(0, oBs, p, p) = u_h1 * st_b;

  // g2 rows.
  Eigen::MatrixXd V_Gt = -(hv / st) * st_G;
  Eigen::MatrixXd V_bs = -(hv / st) * st_b;
  // g3 rows: add the scale channel to the explicit terms.
  Vt_Gt.noalias() -= (hvt / st) * st_G;
  Vt_bs.noalias() -= (hvt / st) * st_b;
  if (diagonal) {
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (k != l) {
          V_b.row(k + m * l).setZero();
          V_G.row(k + m * l).setZero();
          V_Gt.row(k + m * l).setZero();
          V_bs.row(k + m * l).setZero();
          Vt_Gt.row(k + m * l).setZero();
          Vt_bs.row(k + m * l).setZero();
        }
  }
  J.block(oG, 0, q, p) = Sphi * V_b;
  J.block(oG, oG, q, q) = Sphi * V_G;
  J.block(oG, oS, q, q) = Sphi * V_Gt;
  J.block(oG, oBs, q, p) = Sphi * V_bs;
  J.block(oS, oS, q, q) = Sphit * Vt_Gt;
  J.block(oS, oBs, q, p) = Sphit * Vt_bs;

  // g4 rows.
  const Eigen::VectorXd ut_h4 = utlu.solve(h4) / st;
  J.block(oBs, oS, p, q) = utlu.solve(R4G) + ut_h4 * st_G;
  J.block(oBs, oBs, p, p) = utlu.solve(R4b) + ut_h4 * st_b;

  if (diagonal) {
    for (int k = 0; k < m; ++k)
      for (int l = 0; l < m; ++l)
        if (k != l) {
          J.col(oG + k + m * l).setZero();
          J.col(oS + k + m * l).setZero();
        }
  }
  return J;
}

FrbCorrection::FrbCorrection(const StackedDesign& d, const LossPair& loss,
                             const Eigen::VectorXd& theta, bool diagonal,
                             ThetaPacking packing)
    : theta_(theta),
      packing_(packing),
      lu_(Eigen::MatrixXd::Identity(theta.size(), theta.size()) -
          (packing == ThetaPacking::shape ? grad_g_shape(d, loss, theta, diagonal)
                                          : grad_g(d, loss, theta, diagonal))) {}

Eigen::VectorXd FrbCorrection::replicate(const Eigen::VectorXd& g_w) const {
  return theta_ + lu_.solve(g_w - theta_);
}

}  // namespace robsur
