#include "lofree/scoring.hpp"

#include <cmath>
#include <limits>

#include "lofree/errors.hpp"
#include "lofree/logging.hpp"
#include "lofree/normalize.hpp"

namespace lofree {

double frequency(const ResponsePool& pool, const std::string& response) {
  auto it = pool.entries.find(response);
  if (it == pool.entries.end()) {
    throw UnknownResponse("frequency: \"" + response + "\" not in pool " +
                          pool.prompt_id);
  }
  return static_cast<double>(it->second) / static_cast<double>(pool.m);
}

double normalized_entropy(const ResponsePool& pool) {
  if (pool.m < 1) {
    throw DegeneratePool("normalized_entropy: pool " + pool.prompt_id +
                         " has m=0");
  }
  if (pool.m == 1) {
    warn("normalized_entropy: m=1 pool " + pool.prompt_id +
         " carries no diversity information; NE=0");
    return 0.0;
  }
  const double m = static_cast<double>(pool.m);
  double acc = 0.0;
  for (const auto& [response, count] : pool.entries) {
    const double f = static_cast<double>(count) / m;
    acc += f * std::log(f);
  }
  // The log base cancels in the ratio.
  return std::abs(acc) / std::log(m);
}

double semantic_similarity(const ResponsePool& pool,
                           const std::string& response,
                           const VectorProvider& embedder) {
  if (!pool.contains(response)) {
    throw UnknownResponse("semantic_similarity: \"" + response +
                          "\" not in pool " + pool.prompt_id);
  }
  if (response == pool.top1) {
    return 0.0;
  }
  try {
    return cosine_similarity(embedder.embed(response),
                             embedder.embed(pool.top1));
  } catch (const ZeroVector&) {
    warn("semantic_similarity: zero-norm embedding in pool " + pool.prompt_id +
         "; SS=0");
    return 0.0;
  }
}

ScoreBreakdown nonconformity(const ResponsePool& pool,
                             const std::string& response,
                             const LambdaConfig& lambda,
                             const VectorProvider& embedder) {
  ScoreBreakdown b;
  b.response = response;
  b.frequency = frequency(pool, response);
  b.ne = normalized_entropy(pool);
  b.ss = semantic_similarity(pool, response, embedder);
  b.combined = combine_score(b.frequency, b.ne, b.ss, lambda);
  return b;
}

double score_true_label(const PromptRecord& record, const ResponsePool& pool,
                        const LambdaConfig& lambda,
                        const VectorProvider& embedder) {
  double best = std::numeric_limits<double>::infinity();
  for (const std::string& alias : record.true_answers) {
    // Aliases are stored normalized, but normalize once more so callers
    // with raw aliases get pool-key semantics.
    const std::string key = normalize_answer(alias);
    if (key.empty() || !pool.contains(key)) continue;
    const double score = nonconformity(pool, key, lambda, embedder).combined;
    if (score < best) best = score;
  }
  return best;
}

}  // namespace lofree
