#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "robsur/classical.hpp"
#include "robsur/csvio.hpp"
#include "robsur/errors.hpp"
#include "robsur/model.hpp"
#include "robsur/rng.hpp"

using namespace robsur;

namespace {

// Small two-equation instance with a fixed, hand-enterable layout.
SurData toy_data() {
  CsvTable t;
  t.columns = {"x1", "x2", "y1", "y2"};
  t.data.resize(6, 4);
  t.data << 0.2, 1.5, 1.9, 0.8,    //
      -0.4, 0.3, 0.6, 1.1,         //
      1.0, -0.8, 2.8, -0.6,        //
      0.6, 0.9, 2.3, 1.5,          //
      -1.2, -0.5, -1.0, -0.2,      //
      0.8, 2.0, 3.1, 2.4;
  return make_sur_data(t, {{"one", "y1", {"x1"}, true},
                           {"two", "y2", {"x1", "x2"}, true}});
}

// Dense reference: materialize the np x p stacked design and solve the
// feasible GLS normal equations with explicit Kronecker products.
struct DenseRef {
  Eigen::MatrixXd X;  // (n*m) x p, observation-major stacking
  Eigen::VectorXd y;  // (n*m)
  int n, m, p;
};

DenseRef dense_ref(const StackedDesign& d) {
  DenseRef r;
  r.n = d.n;
  r.m = d.m;
  r.p = d.p;
  r.X.resize(d.n * d.m, d.p);
  r.y.resize(d.n * d.m);
  for (int i = 0; i < d.n; ++i) {
    r.X.middleRows(i * d.m, d.m) = d.x[i];
    r.y.segment(i * d.m, d.m) = d.Y.row(i).transpose();
  }
  return r;
}

Eigen::VectorXd dense_gls(const DenseRef& r, const Eigen::MatrixXd& Sigma) {
  const Eigen::MatrixXd Si = Sigma.inverse();
  Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(r.n * r.m, r.n * r.m);
  for (int i = 0; i < r.n; ++i) Omega.block(i * r.m, i * r.m, r.m, r.m) = Si;
  const Eigen::MatrixXd A = r.X.transpose() * Omega * r.X;
  return A.ldlt().solve(r.X.transpose() * Omega * r.y);
}

Eigen::MatrixXd dense_cov(const DenseRef& r, const Eigen::VectorXd& beta) {
  Eigen::MatrixXd E(r.n, r.m);
  const Eigen::VectorXd res = r.y - r.X * beta;
  for (int i = 0; i < r.n; ++i) E.row(i) = res.segment(i * r.m, r.m).transpose();
  return E.transpose() * E / r.n;
}

}  // namespace

TEST_CASE("gls matches a dense Kronecker reference") {
  const auto d = make_stacked(toy_data());
  const auto r = dense_ref(d);
  Eigen::MatrixXd Sigma(2, 2);
  Sigma << 1.3, 0.4, 0.4, 0.9;

  const Eigen::VectorXd ref = dense_gls(r, Sigma);
  const Eigen::VectorXd got = weighted_gls(d, Sigma.inverse());
  CHECK((got - ref).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("iterated estimator agrees with a dense fixed-point iteration") {
  const auto d = make_stacked(toy_data());
  const auto r = dense_ref(d);

  // Independent iteration, all in dense form.
  Eigen::MatrixXd Sigma = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd beta;
  for (int it = 0; it < 200; ++it) {
    beta = dense_gls(r, Sigma);
    Sigma = dense_cov(r, beta);
  }

  const auto fit = mle_fit(d, 1e-13, 500);
  CHECK((fit.beta - beta).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK((fit.Sigma - Sigma).lpNorm<Eigen::Infinity>() < 1e-8);

  // Fixed-point property: one more round leaves the estimate unchanged.
  const Eigen::VectorXd again = weighted_gls(d, fit.Sigma.inverse());
  CHECK((again - fit.beta).lpNorm<Eigen::Infinity>() < 1e-8);
  const Eigen::MatrixXd E = d.residual_matrix(fit.beta);
  const Eigen::MatrixXd S2 = E.transpose() * E / d.n;
  CHECK((S2 - fit.Sigma).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("per-equation least squares matches the normal equations") {
  const auto data = toy_data();
  const auto d = make_stacked(data);
  const auto ols = ols_fit(d);
  for (int j = 0; j < 2; ++j) {
    const auto& b = data.block(j);
    const Eigen::VectorXd bj =
        (b.X.transpose() * b.X).ldlt().solve(b.X.transpose() * b.y);
    const auto [c0, c1] = d.block_cols[j];
    CHECK((ols.beta.segment(c0, c1 - c0) - bj).lpNorm<Eigen::Infinity>() <
          1e-10);
  }
  CHECK((ols.residuals - d.residual_matrix(ols.beta))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("regression and y-shift equivariance") {
  const auto d = make_stacked(toy_data());
  const auto fit = mle_fit(d);

  // Shift the responses by a known linear function of the design.
  Eigen::VectorXd shift(5);
  shift << 0.7, -0.3, 1.1, 0.4, -0.9;
  StackedDesign ds = d;
  for (int i = 0; i < d.n; ++i)
    ds.Y.row(i) += (d.x[i] * shift).transpose();
  const auto fs = mle_fit(ds);
  CHECK((fs.beta - (fit.beta + shift)).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK((fs.Sigma - fit.Sigma).lpNorm<Eigen::Infinity>() < 1e-7);
}

TEST_CASE("diagonal-constrained fit keeps the covariance diagonal") {
  const auto d = make_stacked(toy_data());
  const auto fit = mle_fit_diagonal(d);
  CHECK(fit.Sigma(0, 1) == 0.0);
  CHECK(fit.Sigma(1, 0) == 0.0);
  // Under a diagonal weight matrix the blocks decouple into per-equation
  // weighted LS, and with one scale per equation that is plain OLS.
  const auto ols = ols_fit(d);
  CHECK((fit.beta - ols.beta).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("degenerate shapes are rejected") {
  CsvTable t;
  t.columns = {"x", "y1", "y2", "y3"};
  t.data = Eigen::MatrixXd::Random(3, 4);
  const auto data = make_sur_data(t, {{"a", "y1", {"x"}, true},
                                      {"b", "y2", {"x"}, true},
                                      {"c", "y3", {"x"}, true}});
  CHECK_THROWS_AS(mle_fit(make_stacked(data)), DegenerateDataError);
}

TEST_CASE("investment panel: published full-model estimates") {
  const auto t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  std::vector<BlockSpec> specs;
  for (const std::string f : {"ge", "w", "dm"})
    specs.push_back(
        {f, "invest_" + f, {"value_" + f, "capital_" + f}, true});
  const auto d = make_stacked(make_sur_data(t, specs));
  const auto fit = mle_fit(d);

  // Coefficients (intercept, value, capital) per firm.
  const double want[9] = {-42.2696, 0.04941, 0.12149,   //
                          -3.6840,  0.06710, 0.01815,   //
                          -0.7162,  0.01565, 0.45310};
  for (int k = 0; k < 9; ++k)
    CHECK(fit.beta[k] == doctest::Approx(want[k]).epsilon(5e-4));

  // Error covariance and correlations.
  CHECK(fit.Sigma(0, 0) == doctest::Approx(784.21).epsilon(2e-4));
  CHECK(fit.Sigma(1, 1) == doctest::Approx(97.84).epsilon(2e-4));
  CHECK(fit.Sigma(2, 2) == doctest::Approx(1.012).epsilon(1e-3));
  const auto corr = [&](int a, int b) {
    return fit.Sigma(a, b) / std::sqrt(fit.Sigma(a, a) * fit.Sigma(b, b));
  };
  CHECK(corr(0, 1) == doctest::Approx(0.8096).epsilon(1e-3));
  CHECK(corr(0, 2) == doctest::Approx(0.6886).epsilon(1e-3));
  CHECK(corr(1, 2) == doctest::Approx(0.6520).epsilon(1e-3));
}
