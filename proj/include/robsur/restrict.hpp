// Linear restrictions R beta = q on the stacked coefficient vector and the
// null-space reparametrization they induce.
//
// A restricted model is fitted by writing beta = beta0 + Z gamma with
// R beta0 = q and R Z = 0, then estimating gamma on the transformed
// per-observation design (x_i Z, ytil_i - x_i beta0).  Cross-block
// restrictions destroy the block-diagonal structure of the design, so the
// reduced model is treated as a general stacked design.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "robsur/model.hpp"

namespace robsur {

struct Restriction {
  Eigen::MatrixXd R;  // r x p, full row rank
  Eigen::VectorXd q;  // r

  int count() const { return static_cast<int>(R.rows()); }
};

// Parse restriction shorthands against the block/coefficient names of `data`:
//   "equal <block>:<coef> <block>:<coef>"   difference fixed to zero
//   "coef <block>:<coef> = <value>"         single coefficient pinned
// Blocks and coefficients can be referenced by name or 1-based index.
Restriction parse_restrictions(const std::vector<std::string>& specs,
                               const SurData& data);

struct ReducedModel {
  StackedDesign design;   // x_i Z and ytil_i - x_i beta0; general (no blocks)
  Eigen::MatrixXd Z;      // p x (p - r) orthonormal null-space basis of R
  Eigen::VectorXd beta0;  // minimum-norm particular solution of R beta = q
  int r = 0;

  // Map reduced coefficients back to the full coefficient space.
  Eigen::VectorXd full_beta(const Eigen::VectorXd& gamma) const {
    return beta0 + Z * gamma;
  }
};

ReducedModel reduce_model(const StackedDesign& d, const Restriction& rest);

}  // namespace robsur
