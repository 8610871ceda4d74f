#include <cstdio>
#include "robsur/csvio.hpp"
#include "robsur/model.hpp"
#include "robsur/constants.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/restrict.hpp"
#include "robsur/inference.hpp"

using namespace robsur;

int main() {
  const CsvTable t = read_csv(std::string(ROBSUR_DATA_DIR) + "/grunfeld.csv");
  std::vector<BlockSpec> specs;
  for (const std::string f : {"ge", "w", "dm"})
    specs.push_back({f, "invest_" + f, {"value_" + f, "capital_" + f}, true});
  const SurData data = make_sur_data(t, specs);
  const StackedDesign d = make_stacked(data);
  const LossPair loss = make_loss_pair(d.m, 0.5, 0.9);

  SOptions sopt;
  sopt.candidates = 1000;
  sopt.tol = 1e-12;
  sopt.max_iter = 2000;
  sopt.seed = 20260819;
  const RobustFit full = robust_fit(d, loss, sopt);

  const Restriction rest =
      parse_restrictions({"equal ge:value_ge w:value_w", "equal ge:capital_ge w:capital_w"},
                         data);

  TestOptions topt;
  topt.replicates = 1000;
  topt.seed = 7;

  // LR tests
  const auto lr = lr_test_robust(d, loss, full, rest, topt);
  std::printf("LR_S : stat=%.4f kappa=%.4f p_as=%.4f p_boot=%.4f used=%d skip=%d\n",
              lr.s.statistic, lr.s.kappa, lr.s.p_asymptotic, lr.s.p_bootstrap,
              lr.s.replicates_used, lr.s.replicates_skipped);
  std::printf("LR_MM: stat=%.4f kappa=%.4f p_as=%.4f p_boot=%.4f used=%d skip=%d\n",
              lr.mm.statistic, lr.mm.kappa, lr.mm.p_asymptotic, lr.mm.p_bootstrap,
              lr.mm.replicates_used, lr.mm.replicates_skipped);

  const auto lrm = lr_test_mle(d, rest, topt);
  std::printf("LR_ML: stat=%.4f p_as=%.4f p_boot=%.4f used=%d\n",
              lrm.statistic, lrm.p_asymptotic, lrm.p_bootstrap,
              lrm.replicates_used);

  // LM tests
  const auto lm = lm_test_robust(d, loss, full, topt);
  std::printf("LM_S : stat=%.4f kappa=%.4f p_as=%.4f p_boot=%.4f used=%d skip=%d\n",
              lm.s.statistic, lm.s.kappa, lm.s.p_asymptotic, lm.s.p_bootstrap,
              lm.s.replicates_used, lm.s.replicates_skipped);
  std::printf("LM_MM: stat=%.4f kappa=%.4f p_as=%.4f p_boot=%.4f used=%d skip=%d\n",
              lm.mm.statistic, lm.mm.kappa, lm.mm.p_asymptotic, lm.mm.p_bootstrap,
              lm.mm.replicates_used, lm.mm.replicates_skipped);

  const auto lmm = lm_test_mle(d, topt);
  std::printf("LM_ML: stat=%.4f kappa=%.4f p_as=%.4f p_boot=%.4f used=%d\n",
              lmm.statistic, lmm.kappa, lmm.p_asymptotic, lmm.p_bootstrap,
              lmm.replicates_used);
  return 0;
}
