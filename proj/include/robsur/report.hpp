// JSON report assembly.
//
// Every command emits one JSON document that embeds the resolved
// configuration (including derived tuning constants and seeds) next to the
// results, so a report alone is enough to reproduce the run.  Numbers are
// serialized by the shortest round-trip representation, so full double
// precision survives a parse.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include <Eigen/Dense>

#include "robsur/ci.hpp"
#include "robsur/classical.hpp"
#include "robsur/diagnostics.hpp"
#include "robsur/inference.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"
#include "robsur/simulate.hpp"

namespace robsur {

nlohmann::json matrix_json(const Eigen::MatrixXd& a);
nlohmann::json vector_json(const Eigen::VectorXd& v);

// Tuning echo: m, bdp, eff, c0, c1, delta0, delta1.
nlohmann::json loss_json(const LossPair& loss);

// Coefficients with labels, covariance, correlations, scales.
nlohmann::json fit_json(const SurData& data, const MleFit& fit);
nlohmann::json fit_json(const SurData& data, const RobustFit& fit);

// Statistic, reference law, p-values, bootstrap accounting, and replicate
// percentiles (the full replicate vector goes to a CSV sidecar instead).
nlohmann::json test_json(const TestResult& t);

nlohmann::json ci_json(const SurData& data, const std::vector<CiResult>& cis);

nlohmann::json diagnostics_json(const DiagnosticReport& rep);

nlohmann::json cell_json(const CellResult& cell);

std::string method_name(CiMethod method);
std::string class_name(OutlierClass label);

// CSV sidecars.
void write_replicates_csv(const std::string& path,
                          const std::vector<double>& replicate_stats);
void write_diagnostics_csv(const std::string& path,
                           const DiagnosticReport& rep);

}  // namespace robsur
