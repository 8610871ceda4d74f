#include "robsur/mmfit.hpp"

#include <cmath>
#include <utility>

#include "robsur/classical.hpp"
#include "robsur/errors.hpp"

namespace robsur {
namespace {

struct MState {
  Eigen::VectorXd beta;
  Eigen::MatrixXd G, Ginv;
  Eigen::VectorXd dist;
  double obj = 0.0;
};

// Determinant-one shape of a positive-definite matrix, optionally first
// restricted to its diagonal.
bool shape_of(const Eigen::MatrixXd& V, bool diagonal, Eigen::MatrixXd& G) {
  Eigen::MatrixXd S = V;
  if (diagonal) {
    const Eigen::VectorXd dg = V.diagonal();
    S = dg.asDiagonal();
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) return false;
  double logdet = 0.0;
  for (int j = 0; j < S.rows(); ++j) {
    const double l = llt.matrixL()(j, j);
    if (!(l > 0.0) || !std::isfinite(l)) return false;
    logdet += 2.0 * std::log(l);
  }
  G = S * std::exp(-logdet / S.rows());
  return true;
}

// Distances and objective at (beta, G) for fixed first-stage scale.
bool eval_state(const StackedDesign& d, const LossPair& loss, double sigma,
                const Eigen::VectorXd& beta, const Eigen::MatrixXd& G,
                MState& st) {
  const Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) return false;
  st.beta = beta;
  st.G = G;
  st.Ginv = llt.solve(Eigen::MatrixXd::Identity(d.m, d.m));
  st.dist.resize(d.n);
  const Eigen::MatrixXd E = d.residual_matrix(beta);
  double acc = 0.0;
  for (int i = 0; i < d.n; ++i) {
    st.dist[i] =
        llt.matrixL().solve(E.row(i).transpose()).norm() / sigma;
    acc += loss.rho1.rho(st.dist[i]);
  }
  st.obj = acc / d.n;
  return true;
}

}  // namespace

MMFit mm_refine(const StackedDesign& d, const LossPair& loss, const SFit& s,
                double tol, int max_iter, bool diagonal) {
  if (!(s.scale > 0.0))
    throw NumericError("mm_refine: first-stage scale is not positive");
  if (d.m != loss.m) throw ConfigError("mm_refine: loss pair built for wrong m");
  const double sigma = s.scale;

  Eigen::MatrixXd G0;
  if (!shape_of(s.Sigma, diagonal, G0))
    throw NumericError("mm_refine: starting shape is not positive definite");
  MState st;
  if (!eval_state(d, loss, sigma, s.beta, G0, st))
    throw NumericError("mm_refine: starting shape is not positive definite");

  int it = 0;
  while (it < max_iter) {
    ++it;
    Eigen::VectorXd w(d.n);
    for (int i = 0; i < d.n; ++i) w[i] = loss.rho1.w(st.dist[i]);
    Eigen::VectorXd beta;
    try {
      beta = weighted_gls(d, st.Ginv, w);
    } catch (const NumericError&) {
      throw NumericError("mm_refine: weighted normal equations degenerate");
    }
    const Eigen::MatrixXd E = d.residual_matrix(beta);
    const Eigen::MatrixXd V = E.transpose() * w.asDiagonal() * E;
    Eigen::MatrixXd G;
    MState next;
    if (!shape_of(V, diagonal, G) || !eval_state(d, loss, sigma, beta, G, next))
      throw NumericError("mm_refine: weighted shape update is singular");

    // The exact step cannot increase the objective; guard numerically.
    int halvings = 0;
    while (next.obj > st.obj * (1.0 + 10.0 * tol) && halvings < 30) {
      Eigen::MatrixXd Gh;
      MState half;
      if (!shape_of(0.5 * (st.G + next.G), diagonal, Gh) ||
          !eval_state(d, loss, sigma, 0.5 * (st.beta + next.beta), Gh, half))
        break;
      next = std::move(half);
      ++halvings;
    }

    const double db = (next.beta - st.beta).lpNorm<Eigen::Infinity>() /
                      (1.0 + st.beta.lpNorm<Eigen::Infinity>());
    const double dg = (next.G - st.G).lpNorm<Eigen::Infinity>() /
                      (1.0 + st.G.lpNorm<Eigen::Infinity>());
    st = std::move(next);
    if (db < tol && dg < tol) break;
  }

  MMFit fit;
  fit.beta = st.beta;
  fit.Gamma = st.G;
  fit.Sigma = sigma * sigma * st.G;
  fit.s_scale = sigma;
  fit.objective = st.obj;
  fit.scale = sigma * std::sqrt(st.obj / loss.delta1);
  fit.iterations = it;
  return fit;
}

RobustFit robust_fit(const StackedDesign& d, const LossPair& loss,
                     const SOptions& opt) {
  RobustFit rf;
  rf.s = s_fit(d, loss, opt);
  rf.mm = mm_refine(d, loss, rf.s, opt.tol, opt.max_iter, opt.diagonal);
  return rf;
}

}  // namespace robsur
