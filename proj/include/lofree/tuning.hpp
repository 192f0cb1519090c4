#ifndef LOFREE_TUNING_HPP
#define LOFREE_TUNING_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lofree/conformal.hpp"
#include "lofree/metrics.hpp"
#include "lofree/pool.hpp"

namespace lofree {

// Deterministic selection rule applied to the validation reports, recorded
// verbatim in every TuningOutcome.
inline constexpr const char* kSelectionRule =
    "among grid points with validation ECR >= 1-alpha, minimize validation "
    "APSS; break ties by larger SSC (undefined SSC ranks below any defined "
    "value), then by lexicographically smaller (lambda1, lambda2)";

struct TuningOutcome {
  LambdaConfig best_lambda;
  std::vector<std::pair<LambdaConfig, EvalReport>> grid_results;
  std::string selection_rule = kSelectionRule;
  // False when no grid point reached validation ECR >= 1-alpha; best_lambda
  // is then the point with the highest validation ECR.
  bool feasible = true;
};

// lambda1 and lambda2 each range over {0, step, 2*step, ..., max}; the grid
// is the full cross product in lambda1-major order.
std::vector<LambdaConfig> lambda_grid(double max = 2.0, double step = 0.05);

enum class Variant { lofree, freq_only, freq_ne, freq_ss };

std::string to_string(Variant variant);

// Restricts a (max, step) grid to the variant's axes: freq_only pins both
// weights to zero, freq_ne frees lambda1 only, freq_ss lambda2 only.
std::vector<LambdaConfig> variant_grid(Variant variant, double max = 2.0,
                                       double step = 0.05);

// Calibrates on split.calibration and scores split.validation for every
// grid point, then applies kSelectionRule. Never throws on infeasibility;
// see TuningOutcome::feasible.
TuningOutcome try_tune_lambda(const DatasetSplit& split, double alpha,
                              const std::vector<LambdaConfig>& grid,
                              const VectorProvider& embedder);

// Same, but throws NoFeasibleLambda when no grid point achieves validation
// ECR >= 1-alpha.
TuningOutcome tune_lambda(const DatasetSplit& split, double alpha,
                          const std::vector<LambdaConfig>& grid,
                          const VectorProvider& embedder);

struct TrialResult {
  std::uint64_t seed = 0;
  LambdaConfig best_lambda;
  bool tuning_feasible = true;
  CalibrationResult calibration;
  EvalReport test_report;  // infeasible flag mirrors !tuning_feasible
};

struct RunTrialsResult {
  std::vector<TrialResult> trials;
  EvalReport aggregate;
};

// Trial t: split with seed base_seed + t, tune on validation, calibrate
// with the chosen lambda, evaluate on test. Trials are independent work
// units; `jobs` > 1 runs them on a thread pool with results merged in trial
// order, so output is identical for any job count.
RunTrialsResult run_trials(const std::vector<DatasetEntry>& records,
                           double alpha,
                           const std::vector<LambdaConfig>& grid,
                           const VectorProvider& embedder, std::size_t trials,
                           std::uint64_t base_seed,
                           const SplitRatios& ratios = {},
                           std::size_t jobs = 1);

}  // namespace lofree

#endif  // LOFREE_TUNING_HPP
