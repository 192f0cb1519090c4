#include "lofree/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "lofree/errors.hpp"

namespace lofree {

EvalReport evaluate_outcomes(const std::vector<SetOutcome>& outcomes,
                             double alpha) {
  if (outcomes.empty()) {
    throw MisalignedInputs("evaluate: empty test split");
  }
  EvalReport report;
  report.alpha = alpha;
  report.n_test = outcomes.size();

  std::size_t covered_total = 0;
  std::size_t size_total = 0;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>>
      bins;  // size -> (count, covered)
  for (const SetOutcome& o : outcomes) {
    covered_total += o.covered ? 1 : 0;
    size_total += o.set_size;
    auto& bin = bins[o.set_size];
    ++bin.first;
    bin.second += o.covered ? 1 : 0;
  }

  const double n = static_cast<double>(report.n_test);
  report.ecr = static_cast<double>(covered_total) / n;
  report.apss = static_cast<double>(size_total) / n;

  for (const auto& [size, counts] : bins) {
    SizeBin bin;
    bin.size = size;
    bin.count = counts.first;
    bin.coverage =
        static_cast<double>(counts.second) / static_cast<double>(counts.first);
    report.per_size_bins.push_back(bin);
    // Strict ">" per the 10% qualifying rule; size-0 bins never qualify.
    if (size > 0 && static_cast<double>(counts.first) > 0.10 * n) {
      if (!report.ssc || bin.coverage < *report.ssc) {
        report.ssc = bin.coverage;
      }
    }
  }
  return report;
}

EvalReport evaluate(const std::vector<PredictionSet>& sets,
                    const std::vector<PromptRecord>& records, double alpha) {
  if (sets.size() != records.size()) {
    throw MisalignedInputs("evaluate: " + std::to_string(sets.size()) +
                           " sets vs " + std::to_string(records.size()) +
                           " records");
  }
  std::vector<SetOutcome> outcomes;
  outcomes.reserve(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].prompt_id != records[i].prompt_id) {
      throw MisalignedInputs("evaluate: prompt_id mismatch at index " +
                             std::to_string(i) + ": " + sets[i].prompt_id +
                             " vs " + records[i].prompt_id);
    }
    outcomes.push_back({sets[i].size(), is_covered(sets[i], records[i])});
  }
  return evaluate_outcomes(outcomes, alpha);
}

EvalReport average_reports(const std::vector<EvalReport>& reports) {
  if (reports.empty()) {
    throw MisalignedInputs("average_reports: no reports");
  }
  EvalReport mean;
  mean.alpha = reports.front().alpha;
  mean.n_test = reports.front().n_test;

  double ecr_sum = 0.0, apss_sum = 0.0, ssc_sum = 0.0;
  std::size_t ssc_defined = 0, infeasible_count = 0;
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> bins;
  for (const EvalReport& r : reports) {
    ecr_sum += r.ecr;
    apss_sum += r.apss;
    if (r.ssc) {
      ssc_sum += *r.ssc;
      ++ssc_defined;
    }
    if (r.infeasible) ++infeasible_count;
    for (const SizeBin& b : r.per_size_bins) {
      auto& acc = bins[b.size];
      acc.first += b.count;
      acc.second += static_cast<std::size_t>(
          b.coverage * static_cast<double>(b.count) + 0.5);
    }
  }
  const double k = static_cast<double>(reports.size());
  mean.ecr = ecr_sum / k;
  mean.apss = apss_sum / k;
  if (ssc_defined > 0) {
    mean.ssc = ssc_sum / static_cast<double>(ssc_defined);
  }
  mean.infeasible = 2 * infeasible_count > reports.size();
  for (const auto& [size, counts] : bins) {
    SizeBin bin;
    bin.size = size;
    bin.count = counts.first;
    bin.coverage =
        static_cast<double>(counts.second) / static_cast<double>(counts.first);
    mean.per_size_bins.push_back(bin);
  }
  return mean;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json bins = nlohmann::json::array();
  for (const SizeBin& b : report.per_size_bins) {
    bins.push_back(
        {{"size", b.size}, {"count", b.count}, {"coverage", b.coverage}});
  }
  nlohmann::json j{{"alpha", report.alpha},
                   {"ecr", report.ecr},
                   {"apss", report.apss},
                   {"n_test", report.n_test},
                   {"infeasible", report.infeasible},
                   {"per_size_bins", std::move(bins)}};
  if (report.ssc) {
    j["ssc"] = *report.ssc;
  } else {
    j["ssc"] = nullptr;
  }
  return j;
}

std::string eval_report_tsv_row(const EvalReport& report) {
  char buf[160];
  std::string ssc = "n/a";
  if (report.ssc) {
    std::snprintf(buf, sizeof(buf), "%.4f", *report.ssc);
    ssc = buf;
  }
  std::string row;
  std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t", report.alpha, report.ecr);
  row += buf;
  row += ssc;
  std::snprintf(buf, sizeof(buf), "\t%.4f\t%zu\t%s", report.apss,
                report.n_test, report.infeasible ? "true" : "false");
  row += buf;
  return row;
}

}  // namespace lofree
