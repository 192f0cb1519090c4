#include "lofree/dataset_io.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lofree/errors.hpp"
#include "lofree/logging.hpp"

using namespace lofree;
using nlohmann::json;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("responses form parses into a counted pool") {
  const json j{{"prompt_id", "p1"},
               {"prompt", "who?"},
               {"true_answers", {"paris"}},
               {"task", "open_qa"},
               {"responses", {"Paris", "paris", "Lyon."}}};
  const DatasetRecord rec = dataset_record_from_json(j, 1);
  REQUIRE(rec.pool.has_value());
  CHECK(rec.pool->m == 3);
  CHECK(rec.pool->entries.at("paris") == 2);
  CHECK(rec.pool->entries.at("lyon") == 1);
}

TEST_CASE("counts form round-trips through the canonical writer") {
  const std::string path = temp_path("lofree_ds_roundtrip.jsonl");
  write_file(path,
             R"({"prompt_id":"p1","prompt":"q","true_answers":["x"],)"
             R"("task":"mcq","counts":{"x":3,"y":1},"m":5,"dropped":1})"
             "\n");
  const auto records = read_dataset_jsonl(path);
  REQUIRE(records.size() == 1);
  REQUIRE(records[0].pool.has_value());
  CHECK(records[0].pool->dropped_count == 1);
  CHECK(records[0].record.task_kind == TaskKind::mcq);

  const std::string out = temp_path("lofree_ds_rewrite.jsonl");
  write_pools_jsonl(out, records);
  const auto reread = read_dataset_jsonl(out);
  CHECK(reread[0].pool->entries == records[0].pool->entries);
  CHECK(reread[0].pool->m == 5);
  CHECK(reread[0].pool->dropped_count == 1);
  CHECK(reread[0].record.true_answers == records[0].record.true_answers);
  std::remove(path.c_str());
  std::remove(out.c_str());
}

TEST_CASE("malformed records raise ParseError with the line number") {
  const std::string path = temp_path("lofree_ds_bad.jsonl");

  SUBCASE("both encodings at once") {
    write_file(path,
               R"({"prompt_id":"a","prompt":"q","true_answers":["x"],)"
               R"("responses":["x"],"counts":{"x":1},"m":1})"
               "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  SUBCASE("counts without m") {
    write_file(path,
               R"({"prompt_id":"a","prompt":"q","true_answers":["x"],)"
               R"("counts":{"x":1}})"
               "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  SUBCASE("missing prompt_id") {
    write_file(path, R"({"prompt":"q","true_answers":["x"]})" "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  SUBCASE("line number is reported") {
    write_file(path,
               R"({"prompt_id":"a","prompt":"q","true_answers":["x"]})"
               "\nnot json\n");
    try {
      read_dataset_jsonl(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("duplicate prompt_id") {
    const std::string record =
        R"({"prompt_id":"a","prompt":"q","true_answers":["x"]})";
    write_file(path, record + "\n" + record + "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  SUBCASE("positive logprobs violate the invariant") {
    write_file(path,
               R"({"prompt_id":"a","prompt":"q","true_answers":["x"],)"
               R"("counts":{"x":1},"m":1,"logprobs":{"x":0.5}})"
               "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  SUBCASE("zero token lengths violate the invariant") {
    write_file(path,
               R"({"prompt_id":"a","prompt":"q","true_answers":["x"],)"
               R"("counts":{"x":1},"m":1,"token_lengths":{"x":0}})"
               "\n");
    CHECK_THROWS_AS(read_dataset_jsonl(path), ParseError);
  }
  std::remove(path.c_str());
}

TEST_CASE("true answers are normalized on load with a warning") {
  const json j{{"prompt_id", "p"},
               {"prompt", "q"},
               {"true_answers", {"The Eiffel Tower."}}};
  int warnings = 0;
  auto previous = set_warning_handler([&](const std::string&) { ++warnings; });
  const DatasetRecord rec = dataset_record_from_json(j, 1);
  set_warning_handler(previous);
  CHECK(rec.record.true_answers == std::vector<std::string>{"eiffel tower"});
  CHECK(warnings == 1);

  const json bad{{"prompt_id", "p"},
                 {"prompt", "q"},
                 {"true_answers", {"...", "!!"}}};
  auto silent = set_warning_handler([](const std::string&) {});
  CHECK_THROWS_AS(dataset_record_from_json(bad, 4), ParseError);
  set_warning_handler(silent);
}

TEST_CASE("logit extension fields parse with normalized keys") {
  const json j{{"prompt_id", "p"},
               {"prompt", "q"},
               {"true_answers", {"x"}},
               {"counts", {{"x", 2}}},
               {"m", 2},
               {"logprobs", {{"The X", -0.5}}},
               {"token_lengths", {{"The X", 3}}}};
  const DatasetRecord rec = dataset_record_from_json(j, 1);
  REQUIRE(rec.logits.has_value());
  CHECK(rec.logits->logprobs.at("x") == doctest::Approx(-0.5));
  CHECK(rec.logits->token_lengths.at("x") == 3);

  const auto table = to_logit_table({rec});
  CHECK(table.count("p") == 1);
}

TEST_CASE("to_entries requires pools") {
  const json j{{"prompt_id", "p"}, {"prompt", "q"}, {"true_answers", {"x"}}};
  const DatasetRecord rec = dataset_record_from_json(j, 1);
  CHECK_THROWS_AS(to_entries({rec}), InsufficientData);
}

TEST_CASE("calibration artifact round-trips, including infinity") {
  CalibrationResult cal;
  cal.alpha = 0.25;
  cal.n = 120;
  cal.q_hat = -0.375;
  cal.lambda = {0.4, 0.15};
  cal.quantile_level = 0.7583;

  const CalibrationResult back = calibration_from_json(calibration_to_json(cal));
  CHECK(back.alpha == cal.alpha);
  CHECK(back.n == cal.n);
  CHECK(back.q_hat == cal.q_hat);
  CHECK(back.lambda == cal.lambda);
  CHECK(back.quantile_level == cal.quantile_level);

  cal.q_hat = kInfinity;
  const CalibrationResult inf_back =
      calibration_from_json(calibration_to_json(cal));
  CHECK(inf_back.infinite());
}

TEST_CASE("world files preserve distribution order") {
  const SyntheticWorld world = make_coverage_world(10, 4, {0.2, 0.9}, 5);
  const std::string path = temp_path("lofree_world.json");
  write_world_file(path, world);
  const SyntheticWorld back = read_world_file(path);
  CHECK(back.seed == world.seed);
  REQUIRE(back.prompts.size() == world.prompts.size());
  for (std::size_t i = 0; i < world.prompts.size(); ++i) {
    CHECK(back.prompts[i].distribution == world.prompts[i].distribution);
    CHECK(back.prompts[i].record.prompt_id ==
          world.prompts[i].record.prompt_id);
  }
  // Identical streams after a round trip: sampling must not change.
  const auto before = sample_world(world, 8);
  const auto after = sample_world(back, 8);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].pool.entries == after[i].pool.entries);
  }
  std::remove(path.c_str());
}

TEST_CASE("tuning outcome serialization shape") {
  TuningOutcome outcome;
  outcome.best_lambda = {0.1, 0.2};
  EvalReport report;
  report.alpha = 0.2;
  report.n_test = 10;
  outcome.grid_results.emplace_back(LambdaConfig{0.1, 0.2}, report);
  const json j = tuning_outcome_to_json(outcome);
  CHECK(j["best_lambda"]["lambda1"] == doctest::Approx(0.1));
  CHECK(j["feasible"] == true);
  CHECK(j["selection_rule"] == kSelectionRule);
  CHECK(j["grid"].size() == 1);
}
