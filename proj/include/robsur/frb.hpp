// Fast bootstrap replicate engine.
//
// Each replicate draws multinomial resample counts over the n observations
// and maps the fitted estimate through the linear correction of gfun.hpp,
// so no replicate ever refits the model.  Count streams are seeded per
// replicate index, which makes results independent of the thread schedule,
// and replicates whose weighted systems degenerate are counted and dropped
// rather than aborting the run.
#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "robsur/constants.hpp"
#include "robsur/gfun.hpp"
#include "robsur/model.hpp"

namespace robsur {

// Multinomial resample multiplicities for replicate index r: n uniform draws
// over the n observations, deterministic in (seed, r).
Eigen::VectorXd multinomial_counts(int n, std::uint64_t seed, int r);

// One corrected replicate for explicit counts.  Throws NumericError when the
// weighted systems degenerate.
Eigen::VectorXd frb_replicate(const StackedDesign& d, const LossPair& loss,
                              const FrbCorrection& corr,
                              const Eigen::VectorXd& counts,
                              bool diagonal = false);

struct FrbDraws {
  Eigen::MatrixXd thetas;  // one successful replicate per row
  int attempted = 0;
  int skipped = 0;  // degenerate resamples that were dropped
};

FrbDraws frb_draws(const StackedDesign& d, const LossPair& loss,
                   const FrbCorrection& corr, int replicates,
                   std::uint64_t seed, int threads = 1,
                   bool diagonal = false);

}  // namespace robsur
