#ifndef LOFREE_RUNNER_HPP
#define LOFREE_RUNNER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lofree/dataset_io.hpp"
#include "lofree/metrics.hpp"
#include "lofree/pool.hpp"
#include "lofree/tuning.hpp"

namespace lofree {

enum class Method {
  lofree,
  freq_only,
  freq_ne,
  freq_ss,
  scp,
  first_k_white,
  first_k_black,
};

std::string to_string(Method method);
Method method_from_string(const std::string& name);
bool method_needs_logits(Method method);

struct RunConfig {
  std::string dataset_path;
  std::vector<double> alphas;
  std::vector<Method> methods = {Method::lofree};
  double grid_max = 2.0;
  double grid_step = 0.05;
  std::string embedder_spec = "hashed";
  std::size_t embed_dim = 200;
  std::size_t trials = 50;
  std::uint64_t base_seed = 0;
  SplitRatios ratios;
  std::string output_dir = ".";
  std::size_t jobs = 1;

  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

struct MethodAlphaResult {
  Method method = Method::lofree;
  double alpha = 0.0;
  EvalReport aggregate;
  nlohmann::json trials = nlohmann::json::array();  // per-trial detail rows
};

// Every method x alpha over `trials` reshuffled splits (trial t uses seed
// base_seed + t, shared across methods so columns are comparable). Writes
// report.json, report.tsv and curves.csv into output_dir. All output is a
// pure function of (dataset bytes, config): rerunning with the same seed
// yields byte-identical files, for any --jobs value.
std::vector<MethodAlphaResult> run_experiments(const RunConfig& config);

// File emission helpers (exposed for tests).
std::string report_tsv(const std::vector<MethodAlphaResult>& results);
std::string curves_csv(const std::vector<MethodAlphaResult>& results);
nlohmann::json report_json(const RunConfig& config,
                           const std::vector<MethodAlphaResult>& results);

}  // namespace lofree

#endif  // LOFREE_RUNNER_HPP
