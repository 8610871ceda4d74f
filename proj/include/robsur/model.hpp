// Data model for systems of linear regression blocks that share rows.
//
// A system consists of m blocks y_j = X_j beta_j + eps_j observed on the same
// n rows, with contemporaneous dependence between the block errors.  The code
// works with two views of the same data:
//
//   * the block view (SurData): one design matrix per block, used for I/O,
//     per-block least squares, and elemental subsampling;
//   * the per-observation view (StackedDesign): for each row i an m x p
//     matrix x_i and an m-vector ytil_i such that the stacked residual is
//     e_i(beta) = ytil_i - x_i beta.  All estimating equations are written
//     in this form, which also covers reparametrized (restricted) models
//     whose designs are no longer block diagonal.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "robsur/csvio.hpp"

namespace robsur {

struct Block {
  std::string name;
  Eigen::MatrixXd X;  // n x p_j, intercept column included if requested
  Eigen::VectorXd y;  // n
  std::vector<std::string> coef_names;  // length p_j
};

// Column selection used to assemble a block from a CSV table.
struct BlockSpec {
  std::string name;
  std::string response;
  std::vector<std::string> predictors;
  bool intercept = true;
};

class SurData {
 public:
  explicit SurData(std::vector<Block> blocks);

  int n() const { return n_; }
  int m() const { return static_cast<int>(blocks_.size()); }
  int p() const { return p_; }

  const Block& block(int j) const { return blocks_.at(j); }
  const std::vector<Block>& blocks() const { return blocks_; }

  // Column offset of block j's coefficients in the stacked p-vector.
  int coef_offset(int j) const { return offsets_.at(j); }

  // Index of the named block (or number "1"-based); throws ConfigError.
  int block_index(const std::string& name_or_number) const;
  // Index of the named coefficient inside block j; throws ConfigError.
  int coef_index(int j, const std::string& name_or_number) const;

  // Human-readable name of stacked coefficient k: "block:coef".
  std::string coef_label(int k) const;

 private:
  std::vector<Block> blocks_;
  std::vector<int> offsets_;
  int n_ = 0;
  int p_ = 0;
};

SurData make_sur_data(const CsvTable& table, const std::vector<BlockSpec>& specs);

// Per-observation stacked view.
struct StackedDesign {
  int n = 0;
  int m = 0;
  int p = 0;
  std::vector<Eigen::MatrixXd> x;  // n matrices of size m x p
  Eigen::MatrixXd Y;               // n x m; row i is ytil_i

  // Half-open coefficient column ranges per block when the design is block
  // diagonal; empty for general (reparametrized) designs.
  std::vector<std::pair<int, int>> block_cols;
  bool block_diagonal() const { return !block_cols.empty(); }

  Eigen::VectorXd residual(int i, const Eigen::VectorXd& beta) const {
    return Y.row(i).transpose() - x[static_cast<std::size_t>(i)] * beta;
  }
  // n x m matrix of residual rows.
  Eigen::MatrixXd residual_matrix(const Eigen::VectorXd& beta) const;

  // Rows needed for an elemental coefficient fit: the largest block width in
  // block mode, ceil(p / m) in general mode.
  int elemental_rows() const;
};

StackedDesign make_stacked(const SurData& data);

}  // namespace robsur
