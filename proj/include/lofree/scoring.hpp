#ifndef LOFREE_SCORING_HPP
#define LOFREE_SCORING_HPP

#include <string>

#include "lofree/embed.hpp"
#include "lofree/pool.hpp"

namespace lofree {

// Weights of the two fine-grained uncertainty notions in the combined
// nonconformity score: lambda1 scales normalized entropy, lambda2 scales
// semantic similarity. (0, 0) reduces the score to -frequency.
struct LambdaConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  friend bool operator==(const LambdaConfig&, const LambdaConfig&) = default;
  // Lexicographic, used as the deterministic tuning tie-break.
  friend bool operator<(const LambdaConfig& a, const LambdaConfig& b) {
    if (a.lambda1 != b.lambda1) return a.lambda1 < b.lambda1;
    return a.lambda2 < b.lambda2;
  }
};

struct ScoreBreakdown {
  std::string response;
  double frequency = 0.0;  // count / m, in (0, 1]
  double ne = 0.0;         // prompt-wise normalized entropy, in [0, 1]
  double ss = 0.0;         // cosine to the top-1 response, 0 for top-1 itself
  double combined = 0.0;   // -frequency + lambda1*ne - lambda2*ss
};

// Single expression shared by every path that forms a combined score, so
// cached-component and direct computations are bitwise identical.
inline double combine_score(double frequency, double ne, double ss,
                            const LambdaConfig& lambda) {
  return -frequency + lambda.lambda1 * ne - lambda.lambda2 * ss;
}

// Sample frequency of a pooled response: count / m. Throws UnknownResponse.
double frequency(const ResponsePool& pool, const std::string& response);

// Entropy of the pool's empirical distribution over distinct responses,
// normalized by log m: |sum_a (c_a/m) log(c_a/m)| / log m. Prompt-wise (the
// same for every response of the pool), in [0, 1]. An m=1 pool carries no
// diversity information: returns 0 with a warning.
double normalized_entropy(const ResponsePool& pool);

// Cosine similarity between the response and the pool's top-1 response.
// The top-1 response itself contributes 0 (similarity with itself is not
// taken). Zero-norm embeddings fall back to 0 with a warning.
double semantic_similarity(const ResponsePool& pool,
                           const std::string& response,
                           const VectorProvider& embedder);

// Combined nonconformity score with full component breakdown.
ScoreBreakdown nonconformity(const ResponsePool& pool,
                             const std::string& response,
                             const LambdaConfig& lambda,
                             const VectorProvider& embedder);

// Nonconformity of the true label: the minimum combined score over aliases
// present in the pool, or +infinity when no alias was ever sampled.
double score_true_label(const PromptRecord& record, const ResponsePool& pool,
                        const LambdaConfig& lambda,
                        const VectorProvider& embedder);

}  // namespace lofree

#endif  // LOFREE_SCORING_HPP
