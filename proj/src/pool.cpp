#include "lofree/pool.hpp"

#include <cmath>
#include <numeric>

#include "lofree/errors.hpp"
#include "lofree/normalize.hpp"
#include "lofree/rng.hpp"

namespace lofree {

std::string to_string(TaskKind kind) {
  return kind == TaskKind::mcq ? "mcq" : "open_qa";
}

TaskKind task_kind_from_string(const std::string& name) {
  if (name == "open_qa") return TaskKind::open_qa;
  if (name == "mcq") return TaskKind::mcq;
  throw DomainError("unknown task kind: " + name);
}

namespace {

void finalize_top1(ResponsePool& pool) {
  std::uint32_t best = 0;
  const std::string* top = nullptr;
  for (const auto& [response, count] : pool.entries) {
    // std::map iterates keys in ascending order, so the first maximal count
    // is the lexicographically smallest among ties.
    if (count > best) {
      best = count;
      top = &response;
    }
  }
  pool.top1 = top ? *top : std::string();
}

}  // namespace

ResponsePool build_pool(const std::string& prompt_id,
                        const std::vector<std::string>& raw_responses,
                        std::uint32_t m) {
  if (m < 1) {
    throw DomainError("build_pool: m must be >= 1");
  }
  if (raw_responses.size() != m) {
    throw MismatchedCount("build_pool: got " +
                          std::to_string(raw_responses.size()) +
                          " responses for m=" + std::to_string(m));
  }
  ResponsePool pool;
  pool.prompt_id = prompt_id;
  pool.m = m;
  for (const std::string& raw : raw_responses) {
    std::string key = normalize_answer(raw);
    if (key.empty()) {
      ++pool.dropped_count;
      continue;
    }
    ++pool.entries[key];
  }
  if (pool.entries.empty()) {
    throw EmptyAfterNormalization(
        "build_pool: every response for prompt " + prompt_id +
        " normalized to the empty string");
  }
  finalize_top1(pool);
  return pool;
}

ResponsePool pool_from_counts(
    const std::string& prompt_id,
    const std::map<std::string, std::uint32_t>& counts, std::uint32_t m,
    std::uint32_t dropped_count) {
  if (m < 1) {
    throw DomainError("pool_from_counts: m must be >= 1");
  }
  ResponsePool pool;
  pool.prompt_id = prompt_id;
  pool.m = m;
  pool.dropped_count = dropped_count;
  std::uint64_t total = dropped_count;
  for (const auto& [text, count] : counts) {
    if (count == 0) continue;
    std::string key = normalize_answer(text);
    total += count;
    if (key.empty()) {
      pool.dropped_count += count;
      continue;
    }
    pool.entries[key] += count;
  }
  if (pool.entries.empty()) {
    throw EmptyAfterNormalization("pool_from_counts: prompt " + prompt_id +
                                  " has no usable responses");
  }
  if (total != m) {
    throw MismatchedCount("pool_from_counts: counts for prompt " + prompt_id +
                          " sum to " + std::to_string(total) + ", expected " +
                          std::to_string(m));
  }
  finalize_top1(pool);
  return pool;
}

DatasetSplit split_dataset(const std::vector<DatasetEntry>& records,
                           const SplitRatios& ratios, std::uint64_t seed) {
  if (records.empty()) {
    throw InsufficientData("split_dataset: no records");
  }
  const double sum = ratios.calibration + ratios.validation + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DomainError("split_dataset: ratios sum to " + std::to_string(sum));
  }

  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  deterministic_shuffle(order, rng);

  const auto n = records.size();
  const auto n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.validation));
  const auto n_test = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.test));
  const auto n_cal_floor = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * ratios.calibration));
  // Remainder records go to calibration.
  const auto n_cal = n_cal_floor + (n - n_cal_floor - n_val - n_test);

  if (n_cal == 0 || n_val == 0 || n_test == 0) {
    throw InsufficientData("split_dataset: a split would be empty (n=" +
                           std::to_string(n) + ")");
  }

  DatasetSplit split;
  split.trial_seed = seed;
  split.calibration.reserve(n_cal);
  split.validation.reserve(n_val);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const DatasetEntry& entry = records[order[i]];
    if (i < n_cal) {
      split.calibration.push_back(entry);
    } else if (i < n_cal + n_val) {
      split.validation.push_back(entry);
    } else {
      split.test.push_back(entry);
    }
  }
  return split;
}

}  // namespace lofree
