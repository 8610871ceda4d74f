#include "robsur/sfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "robsur/classical.hpp"
#include "robsur/errors.hpp"
#include "robsur/mscale.hpp"
#include "robsur/parallel.hpp"
#include "robsur/rng.hpp"

namespace robsur {
namespace {

// Iteration state on the constraint manifold: Sigma = s^2 G with |G| = 1 and
// the M-scale equation holding at (beta, Sigma).
struct State {
  Eigen::VectorXd beta;
  Eigen::MatrixXd G, Ginv;
  double s = 0.0;
  Eigen::VectorXd dist;
};

// Project an arbitrary positive-definite scatter guess onto the constraint
// manifold: G = |S|^{-1/m} S and s the M-scale of the G-distances.
bool canonicalize(const StackedDesign& d, const LossPair& loss,
                  const Eigen::VectorXd& beta, const Eigen::MatrixXd& Sigma0,
                  bool diagonal, State& st) {
  const int m = d.m;
  Eigen::MatrixXd Sigma = Sigma0;
  if (diagonal) {
    const Eigen::VectorXd dg = Sigma.diagonal();
    Sigma = dg.asDiagonal();
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(Sigma);
  if (llt.info() != Eigen::Success) return false;
  double logdet = 0.0;
  for (int j = 0; j < m; ++j) {
    const double ljj = llt.matrixL()(j, j);
    if (!(ljj > 0.0) || !std::isfinite(ljj)) return false;
    logdet += 2.0 * std::log(ljj);
  }
  const Eigen::MatrixXd E = d.residual_matrix(beta);
  const double root = std::exp(0.5 * logdet / m);  // |Sigma|^(1/2m)
  Eigen::VectorXd dstar(d.n);
  for (int i = 0; i < d.n; ++i)
    dstar[i] = root * llt.matrixL().solve(E.row(i).transpose()).norm();
  const double s = mscale(dstar, loss.rho0, loss.delta0);
  if (s == 0.0)
    throw DegenerateDataError(
        "s_fit: exact fit detected (more than half the observations have "
        "zero residual distance)");
  st.beta = beta;
  st.G = Sigma * std::exp(-logdet / m);
  st.Ginv = st.G.llt().solve(Eigen::MatrixXd::Identity(m, m));
  st.s = s;
  st.dist = dstar / s;
  return true;
}

// One reweighting step of the joint fixed point.
bool fp_step(const StackedDesign& d, const LossPair& loss, const State& st,
             bool diagonal, State& out) {
  const int n = d.n;
  Eigen::VectorXd w(n);
  double sv = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = st.dist[i];
    w[i] = loss.rho0.w(u);
    sv += loss.rho0.psi(u) * u - loss.rho0.rho(u) + loss.delta0;
  }
  if (!(sv > 0.0)) return false;
  Eigen::VectorXd beta;
  try {
    beta = weighted_gls(d, st.Ginv, w);
  } catch (const NumericError&) {
    return false;
  }
  const Eigen::MatrixXd E = d.residual_matrix(beta);
  const Eigen::MatrixXd S = (d.m / sv) * (E.transpose() * w.asDiagonal() * E);
  return canonicalize(d, loss, beta, S, diagonal, out);
}

SFit refine_state(const StackedDesign& d, const LossPair& loss, State st,
                  double tol, int max_iter, bool diagonal) {
  int it = 0;
  while (it < max_iter) {
    ++it;
    State next;
    if (!fp_step(d, loss, st, diagonal, next))
      throw NumericError("s_fit: fixed-point step failed");
    // The exact step decreases the objective; guard against overshoot.
    int halvings = 0;
    while (next.s > st.s * (1.0 + 10.0 * tol) && halvings < 30) {
      State half;
      if (!canonicalize(d, loss, 0.5 * (st.beta + next.beta),
                        0.5 * (st.s * st.s * st.G + next.s * next.s * next.G),
                        diagonal, half))
        break;
      next = std::move(half);
      ++halvings;
    }
    const double db = (next.beta - st.beta).lpNorm<Eigen::Infinity>() /
                      (1.0 + st.beta.lpNorm<Eigen::Infinity>());
    const Eigen::MatrixXd S0 = st.s * st.s * st.G;
    const Eigen::MatrixXd S1 = next.s * next.s * next.G;
    const double ds = (S1 - S0).lpNorm<Eigen::Infinity>() /
                      (1.0 + S0.lpNorm<Eigen::Infinity>());
    st = std::move(next);
    if (db < tol && ds < tol) break;
  }
  SFit fit;
  fit.beta = st.beta;
  fit.Sigma = st.s * st.s * st.G;
  fit.scale = st.s;
  fit.iterations = it;
  return fit;
}

// Draw k distinct row indices by a partial Fisher-Yates shuffle.
void sample_rows(Rng& rng, int n, int k, std::vector<int>& scratch,
                 std::vector<int>& rows) {
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), 0);
  rows.resize(k);
  for (int j = 0; j < k; ++j) {
    const int pick = j + static_cast<int>(rng.integer(n - j));
    std::swap(scratch[j], scratch[pick]);
    rows[j] = scratch[j];
  }
}

// Exact or least-squares coefficients from an elemental row subset.
bool elemental_beta(const StackedDesign& d, const std::vector<int>& rows,
                    Eigen::VectorXd& beta) {
  const int k = static_cast<int>(rows.size());
  if (d.block_diagonal()) {
    beta.resize(d.p);
    for (std::size_t j = 0; j < d.block_cols.size(); ++j) {
      const auto [c0, c1] = d.block_cols[j];
      const int pj = c1 - c0;
      Eigen::MatrixXd A(k, pj);
      Eigen::VectorXd b(k);
      for (int r = 0; r < k; ++r) {
        A.row(r) = d.x[rows[r]].row(static_cast<int>(j)).segment(c0, pj);
        b[r] = d.Y(rows[r], static_cast<int>(j));
      }
      const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
      if (qr.rank() < pj) return false;
      beta.segment(c0, pj) = qr.solve(b);
    }
    return true;
  }
  Eigen::MatrixXd A(k * d.m, d.p);
  Eigen::VectorXd b(k * d.m);
  for (int r = 0; r < k; ++r) {
    A.middleRows(r * d.m, d.m) = d.x[rows[r]];
    b.segment(r * d.m, d.m) = d.Y.row(rows[r]).transpose();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < d.p) return false;
  beta = qr.solve(b);
  return true;
}

struct Candidate {
  bool ok = false;
  double s = std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
  Eigen::MatrixXd Sigma;
};

Candidate run_candidate(const StackedDesign& d, const LossPair& loss,
                        const SOptions& opt, std::uint64_t stream) {
  Rng rng(derive_seed(opt.seed, stream));
  const int k = d.elemental_rows();
  std::vector<int> scratch, rows;
  Candidate cand;
  for (int attempt = 0; attempt < 50 && !cand.ok; ++attempt) {
    sample_rows(rng, d.n, k, scratch, rows);
    Eigen::VectorXd beta;
    if (!elemental_beta(d, rows, beta)) continue;

    // Initial scatter from a fresh small subset of residuals.
    sample_rows(rng, d.n, std::min(d.n, d.m + 1), scratch, rows);
    Eigen::MatrixXd S0 = Eigen::MatrixXd::Zero(d.m, d.m);
    for (const int r : rows) {
      const Eigen::VectorXd e = d.residual(r, beta);
      S0 += e * e.transpose();
    }
    S0 /= static_cast<double>(rows.size());

    State st;
    if (!canonicalize(d, loss, beta, S0, opt.diagonal, st)) continue;
    for (int t = 0; t < opt.concentration; ++t) {
      State next;
      if (!fp_step(d, loss, st, opt.diagonal, next)) break;
      st = std::move(next);
    }
    cand.ok = true;
    cand.s = st.s;
    cand.beta = st.beta;
    cand.Sigma = st.s * st.s * st.G;
  }
  return cand;
}

}  // namespace

SFit s_refine(const StackedDesign& d, const LossPair& loss,
              const Eigen::VectorXd& beta0, const Eigen::MatrixXd& Sigma0,
              double tol, int max_iter, bool diagonal) {
  State st;
  if (!canonicalize(d, loss, beta0, Sigma0, diagonal, st))
    throw NumericError("s_refine: starting scatter is not positive definite");
  return refine_state(d, loss, st, tol, max_iter, diagonal);
}

SFit s_fit(const StackedDesign& d, const LossPair& loss, const SOptions& opt) {
  if (opt.candidates < 1 || opt.refine_best < 1 || opt.concentration < 0)
    throw ConfigError("s_fit: invalid search options");
  if (d.m != loss.m) throw ConfigError("s_fit: loss pair built for wrong m");
  if (d.n < std::max(d.elemental_rows() + d.m + 1, 2 * d.m))
    throw DegenerateDataError("s_fit: too few observations");

  std::vector<Candidate> cands(opt.candidates);
  parallel_for(opt.candidates, opt.threads, [&](int i) {
    cands[i] = run_candidate(d, loss, opt, static_cast<std::uint64_t>(i));
  });

  std::vector<int> order;
  order.reserve(cands.size());
  for (int i = 0; i < opt.candidates; ++i)
    if (cands[i].ok) order.push_back(i);
  if (order.empty())
    throw NumericError("s_fit: no usable starting candidate");
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return cands[a].s != cands[b].s ? cands[a].s < cands[b].s : a < b;
  });

  const int keep = std::min<int>(opt.refine_best,
                                 static_cast<int>(order.size()));
  std::vector<SFit> refined(keep);
  std::vector<char> valid(keep, 0);
  parallel_for(keep, opt.threads, [&](int r) {
    const Candidate& c = cands[order[r]];
    try {
      refined[r] = s_refine(d, loss, c.beta, c.Sigma, opt.tol, opt.max_iter,
                            opt.diagonal);
      valid[r] = 1;
    } catch (const NumericError&) {
    }
  });

  int win = -1;
  for (int r = 0; r < keep; ++r)
    if (valid[r] && (win < 0 || refined[r].scale < refined[win].scale))
      win = r;
  if (win < 0)
    throw NumericError("s_fit: refinement failed for every candidate");
  return refined[win];
}

}  // namespace robsur
