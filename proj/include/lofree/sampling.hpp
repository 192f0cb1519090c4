#ifndef LOFREE_SAMPLING_HPP
#define LOFREE_SAMPLING_HPP

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lofree/pool.hpp"

namespace lofree {

struct SamplerConfig {
  std::uint32_t m = 20;
  double temperature = 1.0;  // in (0, 2]
  std::optional<double> top_p;
  std::optional<int> top_k;
  int max_retries = 3;
  std::chrono::milliseconds timeout{30000};
  // Optional raw JSON request body with a {prompt} placeholder; when empty
  // a minimal completion body (model, prompt, temperature, n=1) is built.
  std::string request_template;
  // Optional few-shot template with a {question} placeholder applied to the
  // prompt text before sending.
  std::string prompt_template;

  void validate() const;
};

// One text generation per call. Implementations must be deterministic in
// (prompt_id, sample_index) where they can be (the synthetic client is;
// HTTP endpoints are not).
class CompletionClient {
 public:
  virtual ~CompletionClient() = default;
  virtual std::string complete(const PromptRecord& prompt,
                               std::size_t sample_index,
                               const SamplerConfig& cfg) = 0;
};

// Draws m generations and counts them into a pool (answer extraction and
// normalization happen inside build_pool). All-failed prompts raise
// UpstreamError; partially failed prompts raise PartialPool with the count
// actually obtained.
ResponsePool sample_prompt(CompletionClient& client,
                           const PromptRecord& prompt,
                           const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Synthetic LLM: a categorical distribution per prompt, for desk-scale
// verification of the coverage guarantee with known ground truth.

struct SyntheticPrompt {
  PromptRecord record;
  // Response distribution; probabilities > 0 and sum to 1 within 1e-9. The
  // true answer may be absent (an unanswerable prompt).
  std::vector<std::pair<std::string, double>> distribution;
};

struct SyntheticWorld {
  std::uint64_t seed = 0;
  std::vector<SyntheticPrompt> prompts;

  void validate() const;
};

class SyntheticClient : public CompletionClient {
 public:
  explicit SyntheticClient(SyntheticWorld world);
  std::string complete(const PromptRecord& prompt, std::size_t sample_index,
                       const SamplerConfig& cfg) override;

 private:
  SyntheticWorld world_;
};

// i.i.d. generator for coverage tests: every prompt gets a categorical over
// a shared vocabulary of `vocab_size` strings, with the designated truth's
// probability drawn uniformly from truth_prob_range and the remainder
// spread over the other words with random weights. Deterministic in seed.
SyntheticWorld make_coverage_world(std::size_t n_prompts,
                                   std::size_t vocab_size,
                                   std::pair<double, double> truth_prob_range,
                                   std::uint64_t seed);

// Samples every world prompt m times. The per-(prompt, sample) RNG stream
// is derived from (world seed, prompt_id, sample_index) alone, so results
// do not depend on iteration or thread order.
std::vector<DatasetEntry> sample_world(const SyntheticWorld& world,
                                       std::uint32_t m);

// ---------------------------------------------------------------------------
// HTTP completion client (cpp-httplib). One request per sample so the
// client also works against APIs that cap n.

struct HttpEndpoint {
  std::string url;  // http://host[:port]/path
  std::string model;
  std::string api_key_env = "LOFREE_API_KEY";
};

class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(HttpEndpoint endpoint);
  ~HttpCompletionClient() override;
  std::string complete(const PromptRecord& prompt, std::size_t sample_index,
                       const SamplerConfig& cfg) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// ---------------------------------------------------------------------------
// Minimum sample size for confident probability estimation:
// ceil((z / (2*epsilon))^2) with z the standard-normal quantile at level
// 1 - (1 - delta) / 2. (0.01, 0.95) -> 9604.
std::uint64_t min_sample_size(double epsilon, double delta);

// Inverse standard-normal CDF: Acklam's rational approximation (max
// relative error ~1.15e-9) plus one Halley refinement step with erfc,
// giving near machine precision. Domain (0, 1).
double normal_quantile(double p);

// Few-shot fixture support: read a template file and substitute the
// {question} placeholder.
std::string load_prompt_template(const std::string& path);
std::string apply_prompt_template(const std::string& tmpl,
                                  const std::string& question);

}  // namespace lofree

#endif  // LOFREE_SAMPLING_HPP
