#include "robsur/restrict.hpp"

#include <charconv>
#include <sstream>

#include "robsur/errors.hpp"

namespace robsur {

namespace {

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

// "<block>:<coef>" -> stacked coefficient index.
int parse_coef_ref(const std::string& ref, const SurData& data) {
  const auto pos = ref.find(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 == ref.size())
    throw ConfigError("restriction: expected '<block>:<coef>', got '" + ref + "'");
  const int j = data.block_index(ref.substr(0, pos));
  const int k = data.coef_index(j, ref.substr(pos + 1));
  return data.coef_offset(j) + k;
}

double parse_value(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("restriction: cannot parse value '" + s + "'");
  return v;
}

}  // namespace

Restriction parse_restrictions(const std::vector<std::string>& specs,
                               const SurData& data) {
  if (specs.empty()) throw ConfigError("restriction: empty specification");
  const int p = data.p();
  Restriction rest;
  rest.R.resize(static_cast<Eigen::Index>(specs.size()), p);
  rest.q.resize(static_cast<Eigen::Index>(specs.size()));
  rest.R.setZero();
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto toks = tokenize(specs[s]);
    if (toks.empty())
      throw ConfigError("restriction: empty specification line");
    const Eigen::Index row = static_cast<Eigen::Index>(s);
    if (toks[0] == "equal") {
      if (toks.size() != 3)
        throw ConfigError("restriction: expected 'equal <block>:<coef> <block>:<coef>' in '" +
                          specs[s] + "'");
      const int a = parse_coef_ref(toks[1], data);
      const int b = parse_coef_ref(toks[2], data);
      if (a == b)
        throw ConfigError("restriction: 'equal' references the same coefficient twice");
      rest.R(row, a) = 1.0;
      rest.R(row, b) = -1.0;
      rest.q[row] = 0.0;
    } else if (toks[0] == "coef") {
      if (toks.size() != 4 || toks[2] != "=")
        throw ConfigError("restriction: expected 'coef <block>:<coef> = <value>' in '" +
                          specs[s] + "'");
      rest.R(row, parse_coef_ref(toks[1], data)) = 1.0;
      rest.q[row] = parse_value(toks[3]);
    } else {
      throw ConfigError("restriction: unknown keyword '" + toks[0] + "'");
    }
  }
  return rest;
}

ReducedModel reduce_model(const StackedDesign& d, const Restriction& rest) {
  const int p = d.p;
  const int r = rest.count();
  if (rest.R.cols() != p)
    throw ConfigError("restriction: matrix has wrong number of columns");
  if (r < 1 || r >= p)
    throw ConfigError("restriction: need between 1 and p-1 restrictions");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rest.R,
                                        Eigen::ComputeFullV | Eigen::ComputeThinU);
  const double smax = svd.singularValues()(0);
  if (svd.singularValues()(r - 1) <= 1e-12 * (smax > 0 ? smax : 1.0))
    throw ConfigError("restriction: rows are linearly dependent");

  ReducedModel red;
  red.r = r;
  red.Z = svd.matrixV().rightCols(p - r);
  red.beta0 = svd.solve(rest.q);  // minimum-norm solution of R beta = q

  red.design.n = d.n;
  red.design.m = d.m;
  red.design.p = p - r;
  red.design.Y.resize(d.n, d.m);
  red.design.x.reserve(static_cast<std::size_t>(d.n));
  for (int i = 0; i < d.n; ++i) {
    const auto& xi = d.x[static_cast<std::size_t>(i)];
    red.design.x.emplace_back(xi * red.Z);
    red.design.Y.row(i) = d.Y.row(i) - (xi * red.beta0).transpose();
  }
  return red;
}

}  // namespace robsur
