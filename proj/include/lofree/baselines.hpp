#ifndef LOFREE_BASELINES_HPP
#define LOFREE_BASELINES_HPP

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lofree/conformal.hpp"
#include "lofree/metrics.hpp"
#include "lofree/pool.hpp"

namespace lofree {

// Externally supplied log-probabilities; the tool never computes logits
// itself (the whole premise is black-box access). Keys are normalized
// response text matching the pool keys.
struct LogitRecord {
  std::string prompt_id;
  std::map<std::string, double> logprobs;            // log p(y|x), <= 0
  std::map<std::string, std::uint32_t> token_lengths;  // |y| >= 1
};

using LogitTable = std::unordered_map<std::string, LogitRecord>;

// Length-normalized probability: exp(logp / lp(|y|)) with
// lp(y) = (5+|y|)^0.6 / (5+1)^0.6. Length 1 returns exp(logp) unchanged.
double length_normalized_prob(double logp, std::uint32_t length);

enum class KSelector { by_logit, by_frequency };

struct FirstKResult {
  std::size_t k = 0;          // smallest K meeting calibration coverage
  bool feasible = false;      // false when no K <= max pool size works
  EvalReport report;          // test-split metrics (K = max size if infeasible)
};

// First-K baseline: rank every pool's responses (by length-normalized
// probability for by_logit, by sample frequency for by_frequency; ties
// break lexicographically), pick the smallest global K whose
// calibration-split coverage reaches 1 - alpha, and evaluate top-K sets on
// the test split. Candidates are restricted to the sampled pool.
FirstKResult first_k(const DatasetSplit& split, KSelector selector,
                     double alpha, const LogitTable* logits);

struct ScpResult {
  CalibrationResult calibration;
  EvalReport report;
  bool infeasible = false;  // q_hat = +infinity
};

// Standard split CP on logits: nonconformity 1 - length-normalized
// probability of the truth (+infinity when the truth was never sampled),
// quantile and sets via the conformal module. Throws MissingLogits when a
// pooled response has no supplied log-probability.
ScpResult scp(const DatasetSplit& split, double alpha,
              const LogitTable& logits);

}  // namespace lofree

#endif  // LOFREE_BASELINES_HPP
