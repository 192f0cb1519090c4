#include "lofree/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "lofree/errors.hpp"
#include "lofree/normalize.hpp"
#include "lofree/scoring.hpp"

namespace lofree {

std::vector<LambdaConfig> lambda_grid(double max, double step) {
  if (!(step > 0.0) || max < 0.0) {
    throw DomainError("lambda_grid: need step > 0 and max >= 0");
  }
  const auto steps = static_cast<std::size_t>(std::llround(max / step));
  std::vector<double> values;
  values.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    values.push_back(static_cast<double>(i) * step);
  }
  std::vector<LambdaConfig> grid;
  grid.reserve(values.size() * values.size());
  for (double l1 : values) {
    for (double l2 : values) {
      grid.push_back({l1, l2});
    }
  }
  return grid;
}

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::lofree:
      return "lofree";
    case Variant::freq_only:
      return "freq_only";
    case Variant::freq_ne:
      return "freq_ne";
    case Variant::freq_ss:
      return "freq_ss";
  }
  return "lofree";
}

std::vector<LambdaConfig> variant_grid(Variant variant, double max,
                                       double step) {
  if (variant == Variant::freq_only) {
    return {{0.0, 0.0}};
  }
  std::vector<LambdaConfig> full = lambda_grid(max, step);
  if (variant == Variant::lofree) {
    return full;
  }
  std::vector<LambdaConfig> grid;
  for (const LambdaConfig& lambda : full) {
    if (variant == Variant::freq_ne && lambda.lambda2 == 0.0) {
      grid.push_back(lambda);
    } else if (variant == Variant::freq_ss && lambda.lambda1 == 0.0) {
      grid.push_back(lambda);
    }
  }
  return grid;
}

namespace {

// Per-response components of the combined score, computed once per pool
// and reused across the whole lambda grid. combine_score() keeps the
// arithmetic bitwise-identical to the direct scoring path.
struct EntryComponents {
  double frequency = 0.0;
  double ss = 0.0;
  bool is_true_alias = false;
};

struct RecordComponents {
  double ne = 0.0;
  std::vector<EntryComponents> entries;
};

class ComponentCache {
 public:
  ComponentCache(const std::vector<const DatasetEntry*>& entries,
                 const VectorProvider& embedder) {
    for (const DatasetEntry* entry : entries) {
      if (by_prompt_.count(entry->record.prompt_id)) continue;
      by_prompt_.emplace(entry->record.prompt_id, build(*entry, embedder));
    }
  }

  const RecordComponents& get(const std::string& prompt_id) const {
    return by_prompt_.at(prompt_id);
  }

 private:
  static RecordComponents build(const DatasetEntry& entry,
                                const VectorProvider& embedder) {
    RecordComponents rc;
    rc.ne = normalized_entropy(entry.pool);
    rc.entries.reserve(entry.pool.entries.size());
    for (const auto& [response, count] : entry.pool.entries) {
      EntryComponents ec;
      ec.frequency = frequency(entry.pool, response);
      ec.ss = semantic_similarity(entry.pool, response, embedder);
      rc.entries.push_back(ec);
    }
    std::size_t idx = 0;
    for (const auto& [response, count] : entry.pool.entries) {
      for (const std::string& alias : entry.record.true_answers) {
        if (normalize_answer(alias) == response) {
          rc.entries[idx].is_true_alias = true;
          break;
        }
      }
      ++idx;
    }
    return rc;
  }

  std::unordered_map<std::string, RecordComponents> by_prompt_;
};

double cached_true_label_score(const RecordComponents& rc,
                               const LambdaConfig& lambda) {
  double best = kInfinity;
  for (const EntryComponents& ec : rc.entries) {
    if (!ec.is_true_alias) continue;
    const double s = combine_score(ec.frequency, rc.ne, ec.ss, lambda);
    if (s < best) best = s;
  }
  return best;
}

SetOutcome cached_set_outcome(const RecordComponents& rc,
                              const LambdaConfig& lambda, double q_hat) {
  SetOutcome outcome;
  for (const EntryComponents& ec : rc.entries) {
    const double s = combine_score(ec.frequency, rc.ne, ec.ss, lambda);
    if (s <= q_hat) {
      ++outcome.set_size;
      if (ec.is_true_alias) outcome.covered = true;
    }
  }
  return outcome;
}

std::vector<const DatasetEntry*> pointers(
    const std::vector<DatasetEntry>& entries) {
  std::vector<const DatasetEntry*> out;
  out.reserve(entries.size());
  for (const DatasetEntry& e : entries) out.push_back(&e);
  return out;
}

// Defined SSC beats undefined; otherwise larger is better.
int compare_ssc(const std::optional<double>& a,
                const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return a.has_value() ? 1 : -1;
  if (!a) return 0;
  if (*a != *b) return *a > *b ? 1 : -1;
  return 0;
}

// True when candidate beats incumbent under kSelectionRule.
bool better_candidate(const LambdaConfig& cand_lambda,
                      const EvalReport& cand,
                      const LambdaConfig& best_lambda,
                      const EvalReport& best) {
  if (cand.apss != best.apss) return cand.apss < best.apss;
  const int ssc = compare_ssc(cand.ssc, best.ssc);
  if (ssc != 0) return ssc > 0;
  return cand_lambda < best_lambda;
}

TuningOutcome tune_with_cache(const ComponentCache& cache,
                              const DatasetSplit& split, double alpha,
                              const std::vector<LambdaConfig>& grid) {
  if (grid.empty()) {
    throw DomainError("tune_lambda: empty lambda grid");
  }
  if (split.calibration.empty() || split.validation.empty()) {
    throw EmptyCalibration("tune_lambda: empty calibration/validation split");
  }

  TuningOutcome outcome;
  outcome.grid_results.reserve(grid.size());

  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t best = kNone;      // best feasible grid index
  std::size_t fallback = kNone;  // highest-ECR grid index

  std::vector<double> cal_scores(split.calibration.size());
  std::vector<SetOutcome> val_outcomes(split.validation.size());
  for (const LambdaConfig& lambda : grid) {
    for (std::size_t i = 0; i < split.calibration.size(); ++i) {
      cal_scores[i] = cached_true_label_score(
          cache.get(split.calibration[i].record.prompt_id), lambda);
    }
    const CalibrationResult cal = calibrate_scores(cal_scores, alpha, lambda);
    for (std::size_t i = 0; i < split.validation.size(); ++i) {
      val_outcomes[i] = cached_set_outcome(
          cache.get(split.validation[i].record.prompt_id), lambda, cal.q_hat);
    }
    outcome.grid_results.emplace_back(lambda,
                                      evaluate_outcomes(val_outcomes, alpha));

    const std::size_t idx = outcome.grid_results.size() - 1;
    const EvalReport& report = outcome.grid_results[idx].second;
    if (report.ecr >= 1.0 - alpha &&
        (best == kNone ||
         better_candidate(lambda, report, outcome.grid_results[best].first,
                          outcome.grid_results[best].second))) {
      best = idx;
    }
    if (fallback == kNone ||
        report.ecr > outcome.grid_results[fallback].second.ecr) {
      fallback = idx;
    }
  }

  outcome.feasible = best != kNone;
  outcome.best_lambda =
      outcome.grid_results[outcome.feasible ? best : fallback].first;
  return outcome;
}

}  // namespace

TuningOutcome try_tune_lambda(const DatasetSplit& split, double alpha,
                              const std::vector<LambdaConfig>& grid,
                              const VectorProvider& embedder) {
  std::vector<const DatasetEntry*> all = pointers(split.calibration);
  for (const DatasetEntry& e : split.validation) all.push_back(&e);
  ComponentCache cache(all, embedder);
  return tune_with_cache(cache, split, alpha, grid);
}

TuningOutcome tune_lambda(const DatasetSplit& split, double alpha,
                          const std::vector<LambdaConfig>& grid,
                          const VectorProvider& embedder) {
  TuningOutcome outcome = try_tune_lambda(split, alpha, grid, embedder);
  if (!outcome.feasible) {
    throw NoFeasibleLambda(
        "tune_lambda: no grid point reached validation ECR >= " +
        std::to_string(1.0 - alpha));
  }
  return outcome;
}

RunTrialsResult run_trials(const std::vector<DatasetEntry>& records,
                           double alpha,
                           const std::vector<LambdaConfig>& grid,
                           const VectorProvider& embedder, std::size_t trials,
                           std::uint64_t base_seed, const SplitRatios& ratios,
                           std::size_t jobs) {
  if (trials < 1) {
    throw DomainError("run_trials: trials must be >= 1");
  }
  // Pools do not change across trials, only the split does; component
  // computation happens once up front.
  ComponentCache cache(pointers(records), embedder);

  RunTrialsResult result;
  result.trials.resize(trials);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_one = [&](std::size_t t) {
    const std::uint64_t seed = base_seed + t;
    const DatasetSplit split = split_dataset(records, ratios, seed);
    TuningOutcome tuned = tune_with_cache(cache, split, alpha, grid);

    TrialResult& trial = result.trials[t];
    trial.seed = seed;
    trial.best_lambda = tuned.best_lambda;
    trial.tuning_feasible = tuned.feasible;

    std::vector<double> cal_scores;
    cal_scores.reserve(split.calibration.size());
    for (const DatasetEntry& e : split.calibration) {
      cal_scores.push_back(cached_true_label_score(
          cache.get(e.record.prompt_id), tuned.best_lambda));
    }
    trial.calibration =
        calibrate_scores(std::move(cal_scores), alpha, tuned.best_lambda);

    std::vector<SetOutcome> outcomes;
    outcomes.reserve(split.test.size());
    for (const DatasetEntry& e : split.test) {
      outcomes.push_back(cached_set_outcome(cache.get(e.record.prompt_id),
                                            tuned.best_lambda,
                                            trial.calibration.q_hat));
    }
    trial.test_report = evaluate_outcomes(outcomes, alpha);
    trial.test_report.infeasible = !tuned.feasible;
  };
  auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= trials || failed.load()) break;
      try {
        run_one(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        break;
      }
    }
  };

  const std::size_t worker_count = std::max<std::size_t>(1, jobs);
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t i = 0; i < worker_count; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& th : pool) th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }

  std::vector<EvalReport> reports;
  reports.reserve(trials);
  for (const TrialResult& trial : result.trials) {
    reports.push_back(trial.test_report);
  }
  result.aggregate = average_reports(reports);
  return result;
}

}  // namespace lofree
