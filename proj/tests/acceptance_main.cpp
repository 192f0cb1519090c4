// Acceptance suite: one line per criterion, [PASS]/[FAIL], exit code equal
// to the number of failures. Run via ctest (-R acceptance) or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lofree/baselines.hpp"
#include "lofree/conformal.hpp"
#include "lofree/dataset_io.hpp"
#include "lofree/embed.hpp"
#include "lofree/metrics.hpp"
#include "lofree/normalize.hpp"
#include "lofree/rng.hpp"
#include "lofree/sampling.hpp"
#include "lofree/scoring.hpp"
#include "lofree/tuning.hpp"
#include "test_corpora.hpp"

namespace fs = std::filesystem;
using namespace lofree;

namespace {

struct CliOutput {
  int exit_code = -1;
  std::string text;
  double seconds = 0.0;
};

CliOutput run_cli(const std::string& args) {
  const std::string command = std::string(LOFREE_CLI_PATH) + " " + args;
  const auto start = std::chrono::steady_clock::now();
  FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
  CliOutput result;
  if (pipe == nullptr) return result;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) {
    result.text.append(buf, n);
  }
  result.exit_code = WEXITSTATUS(pclose(pipe));
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool approx(double value, double target, double tol) {
  return std::abs(value - target) <= tol;
}

// --------------------------------------------------------------------------

bool criterion1_lemma_constant(std::string& detail) {
  const CliOutput out = run_cli("samplesize --epsilon 0.01 --delta 0.95");
  detail = "printed \"" + out.text + "\" in " + std::to_string(out.seconds) +
           "s";
  return out.exit_code == 0 && out.text == "9604\n" && out.seconds < 1.0;
}

bool criterion2_coverage(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticWorld world =
      make_coverage_world(500, 8, {0.2, 0.9}, 20240801);
  const auto entries = sample_world(world, 20);
  const HashedNgramEmbedder embedder(200);
  const std::vector<LambdaConfig> grid = {{0.0, 0.0}, {0.5, 0.5}};

  const std::size_t trials = 50;
  const double n_test = 125.0;
  std::ostringstream report;
  bool ok = true;
  for (double alpha : {0.2, 0.3, 0.4}) {
    const RunTrialsResult result =
        run_trials(entries, alpha, grid, embedder, trials, 77);
    const double tolerance =
        3.0 * std::sqrt(alpha * (1.0 - alpha) /
                        (n_test * static_cast<double>(trials)));
    const double bound = (1.0 - alpha) - tolerance;
    report << " alpha=" << alpha << ": mean ECR=" << result.aggregate.ecr
           << " (need >= " << bound << ")";
    if (result.aggregate.ecr < bound) ok = false;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  report << "; " << seconds << "s";
  detail = report.str();
  return ok && seconds < 120.0;
}

bool criterion3_nesting(std::string& detail) {
  Rng rng(31415);
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.next_below(60));
    std::vector<double> scores;
    for (std::size_t k = 0; k < n; ++k) {
      scores.push_back(rng.next_double() < 0.08
                           ? kInfinity
                           : rng.next_double(-2.0, 2.0));
    }
    double a1 = rng.next_double(0.05, 0.95);
    double a2 = rng.next_double(0.05, 0.95);
    if (a1 < a2) std::swap(a1, a2);
    if (a1 == a2) continue;

    const CalibrationResult c1 = calibrate_scores(scores, a1);
    const CalibrationResult c2 = calibrate_scores(scores, a2);
    if (!(c1.q_hat <= c2.q_hat)) {
      ++violations;
      continue;
    }
    for (int j = 0; j < 16; ++j) {
      const double s = rng.next_double(-3.0, 3.0);
      if (s <= c1.q_hat && !(s <= c2.q_hat)) {
        ++violations;
      }
    }
  }
  detail = std::to_string(violations) + " violations in 1000 cases";
  return violations == 0;
}

bool criterion4_quantile_oracle(std::string& detail) {
  Rng rng(27182);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.next_below(80));
    std::vector<double> scores;
    for (std::size_t k = 0; k < n; ++k) {
      scores.push_back(rng.next_double() < 0.1 ? kInfinity
                                               : rng.next_double(-4.0, 4.0));
    }
    const double alpha = rng.next_double(0.01, 0.99);

    // Independent oracle: full sort plus direct indexing.
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const std::int64_t k = quantile_rank(n, alpha);
    const double expected = (k > static_cast<std::int64_t>(n))
                                ? kInfinity
                                : sorted[static_cast<std::size_t>(k - 1)];

    const CalibrationResult cal = calibrate_scores(scores, alpha);
    const bool equal = std::isinf(expected) ? cal.infinite()
                                            : cal.q_hat == expected;
    if (!equal) ++mismatches;
  }
  detail = std::to_string(mismatches) + " mismatches in 10000 instances";
  return mismatches == 0;
}

bool criterion5_ablation_direction(std::string& detail) {
  const auto entries = lofree_test::make_ss_tie_corpus(200);
  const HashedNgramEmbedder embedder(200);
  const std::size_t trials = 10;

  const RunTrialsResult freq_only =
      run_trials(entries, 0.2, {{0.0, 0.0}}, embedder, trials, 404);
  const RunTrialsResult lofree_tuned = run_trials(
      entries, 0.2, lambda_grid(1.0, 0.25), embedder, trials, 404);

  std::ostringstream report;
  report << "APSS lofree=" << lofree_tuned.aggregate.apss
         << " freq_only=" << freq_only.aggregate.apss
         << ", ECR lofree=" << lofree_tuned.aggregate.ecr
         << " freq_only=" << freq_only.aggregate.ecr;
  detail = report.str();
  return lofree_tuned.aggregate.apss < freq_only.aggregate.apss &&
         lofree_tuned.aggregate.ecr >= 0.8 && freq_only.aggregate.ecr >= 0.8;
}

bool criterion6_ne_anchors(std::string& detail) {
  const double single =
      normalized_entropy(pool_from_counts("p", {{"only", 10}}, 10));

  std::map<std::string, std::uint32_t> uniform;
  for (int i = 0; i < 10; ++i) uniform["resp" + std::to_string(i)] = 1;
  const double max_diverse =
      normalized_entropy(pool_from_counts("p", uniform, 10));

  const double mixed = normalized_entropy(
      pool_from_counts("p", {{"aa", 2}, {"bb", 1}, {"cc", 1}}, 4));

  std::ostringstream report;
  report << "single=" << single << " uniform=" << max_diverse
         << " {2,1,1}/4=" << mixed;
  detail = report.str();
  return std::abs(single) <= 1e-12 && std::abs(max_diverse - 1.0) <= 1e-12 &&
         approx(mixed, 0.75, 1e-9);
}

bool criterion7_length_normalization(std::string& detail) {
  const double logp = std::log(0.37);
  const bool unchanged = length_normalized_prob(logp, 1) == std::exp(logp);
  const double value = length_normalized_prob(-2.0, 20);
  detail = "lp(1) passthrough=" + std::string(unchanged ? "exact" : "BROKEN") +
           ", lp(20, -2)=" + std::to_string(value);
  return unchanged && approx(value, 0.4276, 5e-4);
}

bool criterion8_normalization_suite(std::string& detail) {
  const std::vector<std::pair<std::string, std::string>> golden = {
      {"The Eiffel Tower.", "eiffel tower"},
      {"A  B,  extra", "b"},
      {"paris", "paris"},
      {"An Apple", "apple"},
      {"THE QUICK FOX", "quick fox"},
      {"  padded   answer  ", "padded answer"},
      {"line one\nline two", "line one"},
      {"carriage\rreturn", "carriage"},
      {"first, second", "first"},
      {"trailing.", "trailing"},
      {"it's", "its"},
      {"semi;colon", "semicolon"},
      {"hy-phen", "hyphen"},
      {"(parenthesized)", "parenthesized"},
      {"\"quoted\"", "quoted"},
      {"what? yes!", "what yes"},
      {"a an the", "a an the"},
      {"A", "a"},
      {"30s", "30s"},
      {"tabs\tand\tspaces", "tabs and spaces"},
      {"don’t stop", "dont stop"},
      {"em—dash", "emdash"},
      {"«guillemets»", "guillemets"},
      {"café au lait", "café au lait"},
      {"The answer is: 42", "answer is 42"},
  };
  std::size_t golden_failures = 0;
  for (const auto& [input, expected] : golden) {
    if (normalize_answer(input) != expected) {
      ++golden_failures;
      std::cerr << "  normalize(\"" << input << "\") = \""
                << normalize_answer(input) << "\", expected \"" << expected
                << "\"\n";
    }
  }

  // Idempotence over 10,000 random strings drawn from a QA-flavored
  // alphabet including unicode and malformed bytes.
  static const std::vector<std::string> pieces = {
      "a",  "b", "Z", "q",  "x",   " ", " ",  "\t", ",", ".",  "\n",  "the",
      "an", "a", "'", "\"", "-",   "(", ")",  "?",  "!", ";",  ":",   "7",
      "0",  "$", "+", "~",  "é", "’", "—", "中", "\xff",
      "\x80"};
  Rng rng(16180);
  std::size_t idempotence_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string raw;
    const std::size_t len = static_cast<std::size_t>(rng.next_below(28));
    for (std::size_t k = 0; k < len; ++k) {
      raw += pieces[static_cast<std::size_t>(rng.next_below(pieces.size()))];
    }
    const std::string once = normalize_answer(raw);
    if (normalize_answer(once) != once) ++idempotence_failures;
  }

  detail = std::to_string(golden.size() - golden_failures) + "/" +
           std::to_string(golden.size()) + " golden, " +
           std::to_string(idempotence_failures) +
           " idempotence failures in 10000";
  return golden_failures == 0 && idempotence_failures == 0;
}

bool criterion9_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "lofree_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // Build a pools file once.
  const SyntheticWorld world = make_coverage_world(120, 6, {0.3, 0.9}, 5150);
  const auto entries = sample_world(world, 12);
  std::vector<DatasetRecord> records;
  for (const DatasetEntry& e : entries) {
    records.push_back({e.record, e.pool, std::nullopt});
  }
  const std::string pools = (dir / "pools.jsonl").string();
  write_pools_jsonl(pools, records);

  const std::string common =
      "run --pools " + pools +
      " --alphas 0.2,0.3 --methods lofree,freq_only --grid-max 1 "
      "--grid-step 0.5 --trials 5 --seed 99 --out ";
  const CliOutput first =
      run_cli(common + (dir / "a").string() + " --jobs 1");
  const CliOutput second =
      run_cli(common + (dir / "b").string() + " --jobs 2");

  const std::string a = slurp(dir / "a" / "report.json");
  const std::string b = slurp(dir / "b" / "report.json");
  const bool ok = first.exit_code == 0 && second.exit_code == 0 &&
                  !a.empty() && a == b;
  detail = "report.json bytes " + std::to_string(a.size()) + " vs " +
           std::to_string(b.size()) +
           (a == b ? " (identical)" : " (DIFFER)");
  fs::remove_all(dir);
  return ok;
}

bool criterion10_ssc_binning(std::string& detail) {
  std::vector<SetOutcome> outcomes;
  for (int i = 0; i < 50; ++i) outcomes.push_back({1, i < 45});  // cov 0.9
  for (int i = 0; i < 40; ++i) outcomes.push_back({2, i < 28});  // cov 0.7
  for (int i = 0; i < 10; ++i) outcomes.push_back({3, i < 4});   // cov 0.4
  const EvalReport report = evaluate_outcomes(outcomes, 0.2);
  const bool ok = report.ssc.has_value() && *report.ssc == 0.7;
  detail = report.ssc ? "ssc=" + std::to_string(*report.ssc) : "ssc undefined";
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* label;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "samplesize --epsilon 0.01 --delta 0.95 prints 9604 in < 1 s",
       criterion1_lemma_constant},
      {2, "mean ECR over 50 trials >= (1-alpha) - 3*SE on the synthetic world",
       criterion2_coverage},
      {3, "prediction sets nest across error rates (1000 cases, exact)",
       criterion3_nesting},
      {4, "calibrate matches the sort-and-index oracle (10000 instances)",
       criterion4_quantile_oracle},
      {5, "tuned lofree beats freq-only APSS on the SS-tie corpus at ECR>=0.8",
       criterion5_ablation_direction},
      {6, "normalized entropy anchors: 0, 1, and 0.75 for {2,1,1}/4",
       criterion6_ne_anchors},
      {7, "length normalization: |y|=1 passthrough, |y|=20 logp=-2 -> 0.4276",
       criterion7_length_normalization},
      {8, "normalization golden suite (25 strings) plus idempotence (10000)",
       criterion8_normalization_suite},
      {9, "rerun with fixed seed is byte-identical, including --jobs 2",
       criterion9_determinism},
      {10, "strict >10% SSC binning returns 0.7 on the three-bin example",
       criterion10_ssc_binning},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion.id
              << ": " << criterion.label;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << std::endl;
  }
  if (failures > 0) {
    std::cout << failures << " criteria failed" << std::endl;
  }
  return failures;
}
