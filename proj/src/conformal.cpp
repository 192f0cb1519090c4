#include "lofree/conformal.hpp"

#include <algorithm>

#include "lofree/errors.hpp"
#include "lofree/normalize.hpp"

namespace lofree {

CalibrationResult calibrate_scores(std::vector<double> scores, double alpha,
                                   const LambdaConfig& lambda) {
  if (scores.empty()) {
    throw EmptyCalibration("calibrate: no calibration scores");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("calibrate: alpha must be in (0,1), got " +
                      std::to_string(alpha));
  }
  for (double s : scores) {
    if (std::isnan(s)) {
      throw DomainError("calibrate: NaN calibration score");
    }
  }

  CalibrationResult result;
  result.alpha = alpha;
  result.n = scores.size();
  result.lambda = lambda;

  const std::int64_t k = quantile_rank(scores.size(), alpha);
  result.quantile_level =
      static_cast<double>(k) / static_cast<double>(scores.size());
  if (k > static_cast<std::int64_t>(scores.size())) {
    result.q_hat = kInfinity;
    return result;
  }
  // k >= 1 always: (n+1)(1-alpha) > 0. Selection instead of a full sort;
  // +infinity entries order last on their own.
  auto kth = scores.begin() + (k - 1);
  std::nth_element(scores.begin(), kth, scores.end());
  result.q_hat = *kth;
  return result;
}

CalibrationResult calibrate(const std::vector<DatasetEntry>& cal_split,
                            double alpha, const LambdaConfig& lambda,
                            const VectorProvider& embedder) {
  if (cal_split.empty()) {
    throw EmptyCalibration("calibrate: empty calibration split");
  }
  std::vector<double> scores;
  scores.reserve(cal_split.size());
  for (const DatasetEntry& entry : cal_split) {
    scores.push_back(
        score_true_label(entry.record, entry.pool, lambda, embedder));
  }
  return calibrate_scores(std::move(scores), alpha, lambda);
}

PredictionSet predict_set(const ResponsePool& pool,
                          const CalibrationResult& cal,
                          const VectorProvider& embedder) {
  PredictionSet set;
  set.prompt_id = pool.prompt_id;
  set.q_hat = cal.q_hat;
  for (const auto& [response, count] : pool.entries) {
    ScoreBreakdown b = nonconformity(pool, response, cal.lambda, embedder);
    if (b.combined <= cal.q_hat) {
      set.members.push_back(std::move(b));
    }
  }
  std::sort(set.members.begin(), set.members.end(),
            [](const ScoreBreakdown& a, const ScoreBreakdown& b) {
              if (a.combined != b.combined) return a.combined < b.combined;
              return a.response < b.response;
            });
  return set;
}

PredictionSet predict_set_for_record(const PromptRecord& record,
                                     const ResponsePool& pool,
                                     const CalibrationResult& cal,
                                     const VectorProvider& embedder) {
  PredictionSet set = predict_set(pool, cal, embedder);
  set.covered = is_covered(set, record);
  return set;
}

bool is_covered(const PredictionSet& set, const PromptRecord& record) {
  for (const std::string& alias : record.true_answers) {
    const std::string key = normalize_answer(alias);
    if (key.empty()) continue;
    for (const ScoreBreakdown& member : set.members) {
      if (member.response == key) return true;
    }
  }
  return false;
}

}  // namespace lofree
