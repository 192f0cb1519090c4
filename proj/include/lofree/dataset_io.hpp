#ifndef LOFREE_DATASET_IO_HPP
#define LOFREE_DATASET_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lofree/baselines.hpp"
#include "lofree/conformal.hpp"
#include "lofree/pool.hpp"
#include "lofree/sampling.hpp"
#include "lofree/tuning.hpp"

namespace lofree {

// One parsed JSONL line. The pool is optional so the same reader serves
// prompt-only inputs (for `sample`) and pooled datasets (for `run`).
struct DatasetRecord {
  PromptRecord record;
  std::optional<ResponsePool> pool;
  std::optional<LogitRecord> logits;
};

// Accepts both response encodings per line:
//   {"prompt_id", "prompt", "true_answers", "task",
//    "responses": [...]}                      (raw sampled texts)
//   {"prompt_id", ..., "counts": {...}, "m"}  (canonical counted form)
// plus optional "dropped", "logprobs", "token_lengths". True answers are
// normalized on load (with a warning when that changes them); a record
// whose answers all normalize empty is a parse error.
std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path);

// Requires every record to carry a pool.
std::vector<DatasetEntry> to_entries(const std::vector<DatasetRecord>& records);

LogitTable to_logit_table(const std::vector<DatasetRecord>& records);

// Canonical counts-form JSONL, one line per record, input order preserved.
void write_pools_jsonl(const std::string& path,
                       const std::vector<DatasetRecord>& records);

nlohmann::json dataset_record_to_json(const DatasetRecord& record);
DatasetRecord dataset_record_from_json(const nlohmann::json& j,
                                       std::size_t line_no);

// Calibration artifact (q_hat serialized as the string "inf" when
// infinite, a number otherwise).
nlohmann::json calibration_to_json(const CalibrationResult& cal);
CalibrationResult calibration_from_json(const nlohmann::json& j);

nlohmann::json tuning_outcome_to_json(const TuningOutcome& outcome);

// Synthetic world file. The distribution is an ordered array of
// [text, probability] pairs; order matters for the sampling streams.
nlohmann::json world_to_json(const SyntheticWorld& world);
SyntheticWorld world_from_json(const nlohmann::json& j);
SyntheticWorld read_world_file(const std::string& path);
void write_world_file(const std::string& path, const SyntheticWorld& world);

}  // namespace lofree

#endif  // LOFREE_DATASET_IO_HPP
