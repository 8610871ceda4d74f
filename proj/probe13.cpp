// Grunfeld outlier classification.
#include <cstdio>
#include <string>
#include <vector>

#include "robsur/diagnostics.hpp"
#include "robsur/csvio.hpp"
#include "robsur/mmfit.hpp"
#include "robsur/model.hpp"

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
  const RobustFit fit = robust_fit(d, loss, sopt);

  const DiagnosticReport rep = diagnose(data, d, fit.mm, sopt);
  printf("cutoffs: residual %.4f predictor %.4f (p'=%d)\n",
         rep.residual_cutoff, rep.predictor_cutoff, rep.predictor_dim);
  const char* names[] = {"regular", "vertical", "good_lev", "bad_lev"};
  for (const auto& r : rep.records)
    printf("%4d (%d)  d=%8.3f  RD=%8.3f  %s\n", 1935 + r.index, r.index,
           r.residual_distance, r.robust_distance,
           names[static_cast<int>(r.label)]);
  return 0;
}
