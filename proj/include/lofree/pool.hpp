#ifndef LOFREE_POOL_HPP
#define LOFREE_POOL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lofree {

enum class TaskKind { open_qa, mcq };

std::string to_string(TaskKind kind);
TaskKind task_kind_from_string(const std::string& name);

struct PromptRecord {
  std::string prompt_id;
  std::string prompt_text;
  // Aliases, all in normalized form; any of them counts as correct.
  std::vector<std::string> true_answers;
  TaskKind task_kind = TaskKind::open_qa;
};

// Multiset of normalized sampled responses for one prompt. Keys are
// normalized text, so surface forms that normalize equally are one entry.
// Responses that normalized to the empty string were dropped without
// refunding the sampling budget: sum(counts) + dropped_count == m.
struct ResponsePool {
  std::string prompt_id;
  std::uint32_t m = 0;
  std::map<std::string, std::uint32_t> entries;  // ordered for determinism
  std::uint32_t dropped_count = 0;
  // Highest count; ties broken by lexicographically smallest response.
  std::string top1;

  bool contains(const std::string& response) const {
    return entries.find(response) != entries.end();
  }
};

// (record, pool) pairs move through the pipeline together.
struct DatasetEntry {
  PromptRecord record;
  ResponsePool pool;
};

struct SplitRatios {
  double calibration = 0.5;
  double validation = 0.25;
  double test = 0.25;
};

struct DatasetSplit {
  std::vector<DatasetEntry> calibration;
  std::vector<DatasetEntry> validation;
  std::vector<DatasetEntry> test;
  std::uint64_t trial_seed = 0;
};

// Counts raw responses into a pool. Each raw response goes through
// normalize_answer first; empty normalizations are dropped but still count
// against m. Throws MismatchedCount if |raw_responses| != m and
// EmptyAfterNormalization if nothing survives.
ResponsePool build_pool(const std::string& prompt_id,
                        const std::vector<std::string>& raw_responses,
                        std::uint32_t m);

// Builds a pool from already-normalized counts (the canonical JSONL form).
// Keys are re-normalized defensively; entries merging to the same key are
// summed.
ResponsePool pool_from_counts(
    const std::string& prompt_id,
    const std::map<std::string, std::uint32_t>& counts, std::uint32_t m,
    std::uint32_t dropped_count = 0);

// Seeded shuffle + partition. Split sizes are floor(n * ratio) with the
// remainder going to calibration. Deterministic given (input order, seed).
// Throws InsufficientData if any split would be empty, DomainError if the
// ratios do not sum to 1.
DatasetSplit split_dataset(const std::vector<DatasetEntry>& records,
                           const SplitRatios& ratios, std::uint64_t seed);

}  // namespace lofree

#endif  // LOFREE_POOL_HPP
