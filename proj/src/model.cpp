#include "robsur/model.hpp"

#include <algorithm>
#include <charconv>

#include "robsur/errors.hpp"

namespace robsur {

namespace {

// Parse a 1-based number; returns -1 when the string is not a number.
int parse_number(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return -1;
  return v;
}

}  // namespace

SurData::SurData(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw ConfigError("model: at least one block required");
  n_ = static_cast<int>(blocks_[0].X.rows());
  for (auto& b : blocks_) {
    if (b.X.rows() != n_ || b.y.size() != n_)
      throw ConfigError("model: all blocks must share the same rows");
    if (b.X.cols() < 1)
      throw ConfigError("model: block '" + b.name + "' has no coefficients");
    if (static_cast<int>(b.coef_names.size()) != b.X.cols())
      throw ConfigError("model: block '" + b.name + "' coefficient names do not match");
    offsets_.push_back(p_);
    p_ += static_cast<int>(b.X.cols());
  }
  if (n_ < 1) throw ConfigError("model: no observations");
}

int SurData::block_index(const std::string& name_or_number) const {
  for (int j = 0; j < m(); ++j)
    if (blocks_[static_cast<std::size_t>(j)].name == name_or_number) return j;
  const int num = parse_number(name_or_number);
  if (num >= 1 && num <= m()) return num - 1;
  throw ConfigError("model: unknown block '" + name_or_number + "'");
}

int SurData::coef_index(int j, const std::string& name_or_number) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(j));
  for (std::size_t k = 0; k < b.coef_names.size(); ++k)
    if (b.coef_names[k] == name_or_number) return static_cast<int>(k);
  const int num = parse_number(name_or_number);
  if (num >= 1 && num <= static_cast<int>(b.coef_names.size())) return num - 1;
  throw ConfigError("model: block '" + b.name + "' has no coefficient '" +
                    name_or_number + "'");
}

std::string SurData::coef_label(int k) const {
  for (int j = m() - 1; j >= 0; --j) {
    if (k >= coef_offset(j)) {
      const auto& b = blocks_[static_cast<std::size_t>(j)];
      return b.name + ":" + b.coef_names[static_cast<std::size_t>(k - coef_offset(j))];
    }
  }
  throw ConfigError("model: coefficient index out of range");
}

SurData make_sur_data(const CsvTable& table, const std::vector<BlockSpec>& specs) {
  if (specs.empty()) throw ConfigError("model: no blocks specified");
  std::vector<Block> blocks;
  const auto n = table.data.rows();
  for (const auto& s : specs) {
    Block b;
    b.name = s.name.empty() ? s.response : s.name;
    const int pj = static_cast<int>(s.predictors.size()) + (s.intercept ? 1 : 0);
    if (pj == 0)
      throw ConfigError("model: block '" + b.name + "' has neither predictors nor intercept");
    b.X.resize(n, pj);
    int c = 0;
    if (s.intercept) {
      b.X.col(c).setOnes();
      b.coef_names.push_back("intercept");
      ++c;
    }
    for (const auto& pred : s.predictors) {
      b.X.col(c) = table.data.col(table.col(pred));
      b.coef_names.push_back(pred);
      ++c;
    }
    b.y = table.data.col(table.col(s.response));
    blocks.push_back(std::move(b));
  }
  return SurData(std::move(blocks));
}

Eigen::MatrixXd StackedDesign::residual_matrix(const Eigen::VectorXd& beta) const {
  Eigen::MatrixXd E(n, m);
  for (int i = 0; i < n; ++i)
    E.row(i) = Y.row(i) - (x[static_cast<std::size_t>(i)] * beta).transpose();
  return E;
}

int StackedDesign::elemental_rows() const {
  if (block_diagonal()) {
    int w = 0;
    for (const auto& [b, e] : block_cols) w = std::max(w, e - b);
    return w;
  }
  return (p + m - 1) / m;
}

StackedDesign make_stacked(const SurData& data) {
  StackedDesign d;
  d.n = data.n();
  d.m = data.m();
  d.p = data.p();
  d.Y.resize(d.n, d.m);
  d.x.assign(static_cast<std::size_t>(d.n), Eigen::MatrixXd::Zero(d.m, d.p));
  for (int j = 0; j < d.m; ++j) {
    const auto& b = data.block(j);
    const int off = data.coef_offset(j);
    const int pj = static_cast<int>(b.X.cols());
    d.block_cols.emplace_back(off, off + pj);
    d.Y.col(j) = b.y;
    for (int i = 0; i < d.n; ++i)
      d.x[static_cast<std::size_t>(i)].block(j, off, 1, pj) = b.X.row(i);
  }
  return d;
}

}  // namespace robsur
