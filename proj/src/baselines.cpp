#include "lofree/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "lofree/errors.hpp"
#include "lofree/normalize.hpp"

namespace lofree {

double length_normalized_prob(double logp, std::uint32_t length) {
  if (length < 1) {
    throw DomainError("length_normalized_prob: length must be >= 1");
  }
  const double lp = std::pow(5.0 + static_cast<double>(length), 0.6) /
                    std::pow(5.0 + 1.0, 0.6);
  return std::exp(logp / lp);
}

namespace {

const LogitRecord& logits_for(const LogitTable& logits,
                              const std::string& prompt_id) {
  auto it = logits.find(prompt_id);
  if (it == logits.end()) {
    throw MissingLogits("no logits for prompt " + prompt_id);
  }
  return it->second;
}

double pooled_response_prob(const LogitRecord& rec,
                            const std::string& response) {
  auto lp = rec.logprobs.find(response);
  auto len = rec.token_lengths.find(response);
  if (lp == rec.logprobs.end() || len == rec.token_lengths.end()) {
    throw MissingLogits("prompt " + rec.prompt_id +
                        ": no logprob/token_length for \"" + response + "\"");
  }
  return length_normalized_prob(lp->second, len->second);
}

// Pool responses ranked best-first for the chosen selector; ties break on
// lexicographically smaller response text.
std::vector<std::string> ranked_responses(const ResponsePool& pool,
                                          KSelector selector,
                                          const LogitTable* logits) {
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(pool.entries.size());
  if (selector == KSelector::by_frequency) {
    for (const auto& [response, count] : pool.entries) {
      scored.emplace_back(static_cast<double>(count), response);
    }
  } else {
    if (logits == nullptr) {
      throw MissingLogits("first_k by_logit requires a logit table");
    }
    const LogitRecord& rec = logits_for(*logits, pool.prompt_id);
    for (const auto& [response, count] : pool.entries) {
      scored.emplace_back(pooled_response_prob(rec, response), response);
    }
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> ranked;
  ranked.reserve(scored.size());
  for (auto& [score, response] : scored) ranked.push_back(std::move(response));
  return ranked;
}

// 1-based rank of the best-ranked true alias, or 0 when none is pooled.
std::size_t truth_rank(const std::vector<std::string>& ranked,
                       const PromptRecord& record) {
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (const std::string& alias : record.true_answers) {
      if (normalize_answer(alias) == ranked[i]) return i + 1;
    }
  }
  return 0;
}

}  // namespace

FirstKResult first_k(const DatasetSplit& split, KSelector selector,
                     double alpha, const LogitTable* logits) {
  if (split.calibration.empty() || split.test.empty()) {
    throw EmptyCalibration("first_k: empty calibration or test split");
  }

  // Calibration coverage as a function of K is the CDF of truth ranks.
  std::size_t max_size = 0;
  std::vector<std::size_t> ranks;
  ranks.reserve(split.calibration.size());
  for (const DatasetEntry& e : split.calibration) {
    const auto ranked = ranked_responses(e.pool, selector, logits);
    max_size = std::max(max_size, ranked.size());
    ranks.push_back(truth_rank(ranked, e.record));
  }

  FirstKResult result;
  const double need = 1.0 - alpha;
  const double n_cal = static_cast<double>(ranks.size());
  for (std::size_t k = 1; k <= max_size; ++k) {
    std::size_t covered = 0;
    for (std::size_t r : ranks) {
      if (r >= 1 && r <= k) ++covered;
    }
    if (static_cast<double>(covered) / n_cal >= need) {
      result.k = k;
      result.feasible = true;
      break;
    }
  }
  if (!result.feasible) {
    result.k = max_size;  // best this baseline can do; reported infeasible
  }

  std::vector<SetOutcome> outcomes;
  outcomes.reserve(split.test.size());
  for (const DatasetEntry& e : split.test) {
    const auto ranked = ranked_responses(e.pool, selector, logits);
    SetOutcome o;
    o.set_size = std::min(result.k, ranked.size());
    const std::size_t rank = truth_rank(ranked, e.record);
    o.covered = rank >= 1 && rank <= result.k;
    outcomes.push_back(o);
  }
  result.report = evaluate_outcomes(outcomes, alpha);
  result.report.infeasible = !result.feasible;
  return result;
}

ScpResult scp(const DatasetSplit& split, double alpha,
              const LogitTable& logits) {
  if (split.calibration.empty() || split.test.empty()) {
    throw EmptyCalibration("scp: empty calibration or test split");
  }

  std::vector<double> cal_scores;
  cal_scores.reserve(split.calibration.size());
  for (const DatasetEntry& e : split.calibration) {
    const LogitRecord& rec = logits_for(logits, e.record.prompt_id);
    double best = kInfinity;
    for (const std::string& alias : e.record.true_answers) {
      const std::string key = normalize_answer(alias);
      if (key.empty() || !e.pool.contains(key)) continue;
      const double score = 1.0 - pooled_response_prob(rec, key);
      if (score < best) best = score;
    }
    cal_scores.push_back(best);
  }

  ScpResult result;
  result.calibration = calibrate_scores(std::move(cal_scores), alpha);
  result.infeasible = result.calibration.infinite();

  std::vector<SetOutcome> outcomes;
  outcomes.reserve(split.test.size());
  for (const DatasetEntry& e : split.test) {
    const LogitRecord& rec = logits_for(logits, e.record.prompt_id);
    SetOutcome o;
    for (const auto& [response, count] : e.pool.entries) {
      const double score = 1.0 - pooled_response_prob(rec, response);
      if (score <= result.calibration.q_hat) {
        ++o.set_size;
        if (!o.covered) {
          for (const std::string& alias : e.record.true_answers) {
            if (normalize_answer(alias) == response) {
              o.covered = true;
              break;
            }
          }
        }
      }
    }
    outcomes.push_back(o);
  }
  result.report = evaluate_outcomes(outcomes, alpha);
  result.report.infeasible = result.infeasible;
  return result;
}

}  // namespace lofree
