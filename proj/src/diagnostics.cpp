#include "robsur/diagnostics.hpp"

#include <cmath>

#include "robsur/errors.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/prob.hpp"

namespace robsur {

Eigen::VectorXd residual_distances(const StackedDesign& d,
                                   const Eigen::VectorXd& beta,
                                   const Eigen::MatrixXd& Sigma) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Sigma);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericError("diagnostics: singular covariance");
  Eigen::VectorXd out(d.n);
  for (int i = 0; i < d.n; ++i) {
    const Eigen::VectorXd e = d.residual(i, beta);
    out[i] = std::sqrt(std::max(0.0, e.dot(ldlt.solve(e))));
  }
  return out;
}

Eigen::MatrixXd predictor_matrix(const SurData& data) {
  int cols = 0;
  for (const Block& b : data.blocks())
    for (const std::string& name : b.coef_names)
      if (name != "intercept") ++cols;
  Eigen::MatrixXd out(data.n(), cols);
  int c = 0;
  for (const Block& b : data.blocks())
    for (int j = 0; j < static_cast<int>(b.coef_names.size()); ++j)
      if (b.coef_names[static_cast<std::size_t>(j)] != "intercept")
        out.col(c++) = b.X.col(j);
  return out;
}

Eigen::VectorXd predictor_robust_distances(const SurData& data,
                                           const SOptions& opt, double bdp,
                                           double eff) {
  const Eigen::MatrixXd pred = predictor_matrix(data);
  const int q = static_cast<int>(pred.cols());
  if (q < 2)
    throw ConfigError("diagnostics: need at least two predictor columns");

  // Location/scatter as an intercept-only system on the predictor columns.
  StackedDesign d;
  d.n = data.n();
  d.m = q;
  d.p = q;
  d.Y = pred;
  d.x.assign(static_cast<std::size_t>(d.n),
             Eigen::MatrixXd::Identity(q, q));
  for (int j = 0; j < q; ++j) d.block_cols.emplace_back(j, j + 1);

  const LossPair loss = make_loss_pair(q, bdp, eff);
  const RobustFit fit = robust_fit(d, loss, opt);
  return residual_distances(d, fit.mm.beta, fit.mm.Sigma);
}

std::vector<DiagnosticRecord> classify_outliers(const Eigen::VectorXd& d,
                                                const Eigen::VectorXd& rd,
                                                double residual_cutoff,
                                                double predictor_cutoff) {
  if (d.size() != rd.size())
    throw ConfigError("diagnostics: distance vectors disagree in length");
  std::vector<DiagnosticRecord> out;
  out.reserve(static_cast<std::size_t>(d.size()));
  for (int i = 0; i < d.size(); ++i) {
    DiagnosticRecord rec;
    rec.index = i;
    rec.residual_distance = d[i];
    rec.robust_distance = rd[i];
    const bool vert = d[i] > residual_cutoff;
    const bool lev = rd[i] > predictor_cutoff;
    rec.label = vert ? (lev ? OutlierClass::bad_leverage
                            : OutlierClass::vertical_outlier)
                     : (lev ? OutlierClass::good_leverage
                            : OutlierClass::regular);
    out.push_back(rec);
  }
  return out;
}

DiagnosticReport diagnose(const SurData& data, const StackedDesign& d,
                          const MMFit& fit, const SOptions& opt,
                          double quantile, double bdp, double eff) {
  if (!(quantile > 0.0 && quantile < 1.0))
    throw ConfigError("diagnostics: cutoff quantile must lie in (0, 1)");
  DiagnosticReport rep;
  const Eigen::VectorXd res = residual_distances(d, fit.beta, fit.Sigma);
  const Eigen::VectorXd rd = predictor_robust_distances(data, opt, bdp, eff);
  rep.predictor_dim = static_cast<int>(predictor_matrix(data).cols());
  rep.residual_cutoff = std::sqrt(chisq_quantile(quantile, d.m));
  rep.predictor_cutoff = std::sqrt(chisq_quantile(quantile, rep.predictor_dim));
  rep.records =
      classify_outliers(res, rd, rep.residual_cutoff, rep.predictor_cutoff);
  return rep;
}

}  // namespace robsur
