#include "robsur/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "robsur/errors.hpp"

namespace robsur {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < a.cols(); ++j) row.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json loss_json(const LossPair& loss) {
  return json{{"m", loss.m},          {"breakdown", loss.bdp},
              {"efficiency", loss.eff}, {"c0", loss.rho0.tuning()},
              {"c1", loss.rho1.tuning()}, {"delta0", loss.delta0},
              {"delta1", loss.delta1}};
}

namespace {

json labeled_coefficients(const SurData& data, const Eigen::VectorXd& beta) {
  json out = json::array();
  for (int k = 0; k < beta.size(); ++k)
    out.push_back(json{{"parameter", k},
                       {"label", data.coef_label(k)},
                       {"estimate", beta[k]}});
  return out;
}

json correlation_json(const Eigen::MatrixXd& Sigma) {
  Eigen::MatrixXd R = Sigma;
  for (int i = 0; i < R.rows(); ++i)
    for (int j = 0; j < R.cols(); ++j)
      R(i, j) = Sigma(i, j) / std::sqrt(Sigma(i, i) * Sigma(j, j));
  return matrix_json(R);
}

}  // namespace

json fit_json(const SurData& data, const MleFit& fit) {
  return json{{"estimator", "mle"},
              {"coefficients", labeled_coefficients(data, fit.beta)},
              {"sigma", matrix_json(fit.Sigma)},
              {"correlations", correlation_json(fit.Sigma)},
              {"iterations", fit.iterations}};
}

json fit_json(const SurData& data, const RobustFit& fit) {
  return json{{"estimator", "mm"},
              {"coefficients", labeled_coefficients(data, fit.mm.beta)},
              {"sigma", matrix_json(fit.mm.Sigma)},
              {"correlations", correlation_json(fit.mm.Sigma)},
              {"scale_s", fit.s.scale},
              {"scale_mm", fit.mm.scale},
              {"s", json{{"coefficients", labeled_coefficients(data, fit.s.beta)},
                         {"sigma", matrix_json(fit.s.Sigma)},
                         {"iterations", fit.s.iterations}}},
              {"iterations", fit.mm.iterations}};
}

json test_json(const TestResult& t) {
  json out{{"statistic", t.statistic},
           {"df", t.df},
           {"kappa", t.kappa},
           {"p_asymptotic", t.p_asymptotic}};
  if (t.p_bootstrap >= 0.0) {
    out["p_bootstrap"] = t.p_bootstrap;
    out["replicates_used"] = t.replicates_used;
    out["replicates_skipped"] = t.replicates_skipped;
    out["degenerate_bootstrap"] = t.degenerate_bootstrap;
    std::vector<double> ok;
    ok.reserve(t.replicate_stats.size());
    for (const double v : t.replicate_stats)
      if (!std::isnan(v)) ok.push_back(v);
    if (!ok.empty()) {
      std::sort(ok.begin(), ok.end());
      json pct = json::object();
      for (const double q : {0.01, 0.025, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90,
                             0.95, 0.975, 0.99}) {
        const double h = 1.0 + q * (static_cast<double>(ok.size()) - 1.0);
        const auto k = static_cast<std::size_t>(h);
        const double frac = h - static_cast<double>(k);
        double val = ok[k - 1];
        if (k < ok.size()) val += frac * (ok[k] - ok[k - 1]);
        pct[std::to_string(q)] = val;
      }
      out["replicate_percentiles"] = std::move(pct);
    }
  }
  return out;
}

std::string method_name(CiMethod method) {
  switch (method) {
    case CiMethod::asymptotic: return "AS";
    case CiMethod::percentile: return "BP";
    case CiMethod::bca: return "BCa";
  }
  return "?";
}

json ci_json(const SurData& data, const std::vector<CiResult>& cis) {
  json out = json::array();
  for (const CiResult& ci : cis)
    out.push_back(json{{"parameter", ci.parameter},
                       {"label", data.coef_label(ci.parameter)},
                       {"estimate", ci.estimate},
                       {"lower", ci.lower},
                       {"upper", ci.upper},
                       {"method", method_name(ci.method)},
                       {"level", ci.level}});
  return out;
}

std::string class_name(OutlierClass label) {
  switch (label) {
    case OutlierClass::regular: return "regular";
    case OutlierClass::vertical_outlier: return "vertical_outlier";
    case OutlierClass::good_leverage: return "good_leverage";
    case OutlierClass::bad_leverage: return "bad_leverage";
  }
  return "?";
}

json diagnostics_json(const DiagnosticReport& rep) {
  json records = json::array();
  for (const DiagnosticRecord& r : rep.records)
    records.push_back(json{{"index", r.index},
                           {"residual_distance", r.residual_distance},
                           {"robust_distance", r.robust_distance},
                           {"class", class_name(r.label)}});
  return json{{"residual_cutoff", rep.residual_cutoff},
              {"predictor_cutoff", rep.predictor_cutoff},
              {"predictor_dim", rep.predictor_dim},
              {"records", std::move(records)}};
}

json cell_json(const CellResult& cell) {
  return json{{"repetitions", cell.repetitions},
              {"failures", cell.failures},
              {"rate", cell.rate},
              {"standard_error", cell.se},
              {"mean_length", cell.mean_length}};
}

void write_replicates_csv(const std::string& path,
                          const std::vector<double>& replicate_stats) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "replicate,statistic\n";
  out.precision(17);
  for (std::size_t r = 0; r < replicate_stats.size(); ++r) {
    out << r << ',';
    if (std::isnan(replicate_stats[r]))
      out << "skipped";
    else
      out << replicate_stats[r];
    out << '\n';
  }
}

void write_diagnostics_csv(const std::string& path,
                           const DiagnosticReport& rep) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out.precision(17);
  out << "index,residual_distance,robust_distance,class,residual_cutoff,"
         "predictor_cutoff\n";
  for (const DiagnosticRecord& r : rep.records)
    out << r.index << ',' << r.residual_distance << ',' << r.robust_distance
        << ',' << class_name(r.label) << ',' << rep.residual_cutoff << ','
        << rep.predictor_cutoff << '\n';
}

}  // namespace robsur
