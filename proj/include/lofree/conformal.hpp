#ifndef LOFREE_CONFORMAL_HPP
#define LOFREE_CONFORMAL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lofree/embed.hpp"
#include "lofree/pool.hpp"
#include "lofree/scoring.hpp"

namespace lofree {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// 1-based rank of the split-CP quantile: ceil((n+1)(1-alpha)). A relative
// epsilon guard keeps mathematically integral products (e.g. 5 * 0.8) from
// rounding up one extra step.
inline std::int64_t quantile_rank(std::size_t n, double alpha) {
  const double t = (static_cast<double>(n) + 1.0) * (1.0 - alpha);
  return static_cast<std::int64_t>(std::ceil(t - 1e-9 * t));
}

struct CalibrationResult {
  double alpha = 0.0;
  std::size_t n = 0;  // calibration size
  // k-th smallest calibration score, k = ceil((n+1)(1-alpha)); +infinity
  // when k > n or the k-th score is itself +infinity.
  double q_hat = kInfinity;
  LambdaConfig lambda;
  double quantile_level = 0.0;  // ceil((n+1)(1-alpha)) / n; may exceed 1

  bool infinite() const { return std::isinf(q_hat); }
};

struct PredictionSet {
  std::string prompt_id;
  // Every pooled response with combined <= q_hat, sorted by (combined,
  // response) for deterministic output.
  std::vector<ScoreBreakdown> members;
  double q_hat = kInfinity;
  bool covered = false;

  std::size_t size() const { return members.size(); }
};

// Quantile of an explicit score vector (+infinity entries allowed, NaN
// rejected). This is the core shared with the SCP baseline.
CalibrationResult calibrate_scores(std::vector<double> scores, double alpha,
                                   const LambdaConfig& lambda = {});

// Scores every calibration record's true label (Eq. of the combined
// measure; +infinity when no alias was sampled) and takes the quantile.
CalibrationResult calibrate(const std::vector<DatasetEntry>& cal_split,
                            double alpha, const LambdaConfig& lambda,
                            const VectorProvider& embedder);

// Scores every pooled response and keeps those with combined <= q_hat.
// `covered` is left false; see predict_set_for_record / is_covered.
PredictionSet predict_set(const ResponsePool& pool,
                          const CalibrationResult& cal,
                          const VectorProvider& embedder);

// Same, with `covered` filled from the record's aliases.
PredictionSet predict_set_for_record(const PromptRecord& record,
                                     const ResponsePool& pool,
                                     const CalibrationResult& cal,
                                     const VectorProvider& embedder);

// True iff some normalized alias is a member response. A truth that was
// never sampled is uncovered even when q_hat = +infinity: the set
// physically lacks it.
bool is_covered(const PredictionSet& set, const PromptRecord& record);

}  // namespace lofree

#endif  // LOFREE_CONFORMAL_HPP
