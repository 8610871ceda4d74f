#include "robsur/frb.hpp"

#include <vector>

#include "robsur/errors.hpp"
#include "robsur/parallel.hpp"
#include "robsur/rng.hpp"

namespace robsur {

Eigen::VectorXd multinomial_counts(int n, std::uint64_t seed, int r) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    counts[static_cast<int>(rng.integer(static_cast<std::uint64_t>(n)))] += 1.0;
  return counts;
}

Eigen::VectorXd frb_replicate(const StackedDesign& d, const LossPair& loss,
                              const FrbCorrection& corr,
                              const Eigen::VectorXd& counts, bool diagonal) {
  const Eigen::VectorXd g_w =
      corr.packing() == ThetaPacking::shape
          ? g_eval_shape(d, loss, corr.theta(), counts, diagonal)
          : g_eval(d, loss, corr.theta(), counts, diagonal);
  return corr.replicate(g_w);
}

FrbDraws frb_draws(const StackedDesign& d, const LossPair& loss,
                   const FrbCorrection& corr, int replicates,
                   std::uint64_t seed, int threads, bool diagonal) {
  const int dim = static_cast<int>(corr.theta().size());
  Eigen::MatrixXd all(replicates, dim);
  std::vector<char> ok(static_cast<std::size_t>(replicates), 0);
  parallel_for(replicates, threads, [&](int r) {
    const Eigen::VectorXd counts = multinomial_counts(d.n, seed, r);
    try {
      all.row(r) = frb_replicate(d, loss, corr, counts, diagonal).transpose();
      ok[static_cast<std::size_t>(r)] = 1;
    } catch (const NumericError&) {
      // degenerate resample: dropped below
    }
  });

  FrbDraws out;
  out.attempted = replicates;
  int kept = 0;
  for (int r = 0; r < replicates; ++r) kept += ok[static_cast<std::size_t>(r)];
  out.skipped = replicates - kept;
  out.thetas.resize(kept, dim);
  int row = 0;
  for (int r = 0; r < replicates; ++r)
    if (ok[static_cast<std::size_t>(r)]) out.thetas.row(row++) = all.row(r);
  return out;
}

}  // namespace robsur
