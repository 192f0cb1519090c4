#ifndef LOFREE_METRICS_HPP
#define LOFREE_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lofree/conformal.hpp"
#include "lofree/pool.hpp"

namespace lofree {

struct SizeBin {
  std::size_t size = 0;
  std::size_t count = 0;
  double coverage = 0.0;
};

struct EvalReport {
  double alpha = 0.0;
  double ecr = 0.0;   // covered / n_test
  double apss = 0.0;  // sum of set sizes / n_test
  // Worst coverage among qualifying bins (size > 0 and count strictly
  // above 10% of n_test); unset when no bin qualifies.
  std::optional<double> ssc;
  std::size_t n_test = 0;
  std::vector<SizeBin> per_size_bins;  // all observed sizes, ascending
  bool infeasible = false;
};

// Scores a test split's prediction sets. `sets` and `records` are aligned
// by index and must agree on prompt_id; coverage is recomputed from set
// membership. Throws MisalignedInputs.
EvalReport evaluate(const std::vector<PredictionSet>& sets,
                    const std::vector<PromptRecord>& records, double alpha);

// One prediction set reduced to what the metrics need.
struct SetOutcome {
  std::size_t set_size = 0;
  bool covered = false;
};

// Core aggregation shared by evaluate() and the cached tuning loop, so both
// produce identical ECR/SSC/APSS semantics.
EvalReport evaluate_outcomes(const std::vector<SetOutcome>& outcomes,
                             double alpha);

// Mean over per-trial reports: ecr/apss averaged; ssc averaged over the
// trials where it is defined (unset if none); bins merged by size with
// count-weighted coverage; infeasible when more than half the trials were.
EvalReport average_reports(const std::vector<EvalReport>& reports);

nlohmann::json eval_report_to_json(const EvalReport& report);

// "alpha  ecr  ssc  apss  n_test  infeasible", tab-separated, 4 decimal
// places, undefined ssc rendered "n/a".
std::string eval_report_tsv_row(const EvalReport& report);

}  // namespace lofree

#endif  // LOFREE_METRICS_HPP
