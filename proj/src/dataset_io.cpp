#include "lofree/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "lofree/errors.hpp"
#include "lofree/logging.hpp"
#include "lofree/normalize.hpp"

namespace lofree {

namespace {

using nlohmann::json;

std::string require_string(const json& j, const char* key,
                           std::size_t line_no) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw ParseError(std::string("missing string field \"") + key + "\"",
                     line_no);
  }
  return j[key].get<std::string>();
}

std::vector<std::string> normalized_answers(const json& j,
                                            std::size_t line_no) {
  if (!j.contains("true_answers") || !j["true_answers"].is_array() ||
      j["true_answers"].empty()) {
    throw ParseError("true_answers must be a non-empty array", line_no);
  }
  std::vector<std::string> answers;
  for (const auto& item : j["true_answers"]) {
    if (!item.is_string()) {
      throw ParseError("true_answers entries must be strings", line_no);
    }
    const std::string raw = item.get<std::string>();
    std::string normalized = normalize_answer(raw);
    if (normalized.empty()) {
      warn("true answer \"" + raw + "\" normalizes to empty; dropped");
      continue;
    }
    if (normalized != raw) {
      warn("true answer \"" + raw + "\" stored as \"" + normalized + "\"");
    }
    answers.push_back(std::move(normalized));
  }
  if (answers.empty()) {
    throw ParseError("every true answer normalized to empty", line_no);
  }
  return answers;
}

}  // namespace

DatasetRecord dataset_record_from_json(const json& j, std::size_t line_no) {
  DatasetRecord rec;
  rec.record.prompt_id = require_string(j, "prompt_id", line_no);
  rec.record.prompt_text = require_string(j, "prompt", line_no);
  rec.record.true_answers = normalized_answers(j, line_no);
  if (j.contains("task")) {
    try {
      rec.record.task_kind =
          task_kind_from_string(j["task"].get<std::string>());
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }

  const bool has_responses = j.contains("responses");
  const bool has_counts = j.contains("counts");
  if (has_responses && has_counts) {
    throw ParseError("record has both \"responses\" and \"counts\"", line_no);
  }
  try {
    if (has_responses) {
      if (!j["responses"].is_array()) {
        throw ParseError("responses must be an array", line_no);
      }
      std::vector<std::string> responses;
      for (const auto& r : j["responses"]) {
        if (!r.is_string()) {
          throw ParseError("responses entries must be strings", line_no);
        }
        responses.push_back(r.get<std::string>());
      }
      const auto m = j.contains("m") ? j["m"].get<std::uint32_t>()
                                     : static_cast<std::uint32_t>(
                                           responses.size());
      rec.pool = build_pool(rec.record.prompt_id, responses, m);
    } else if (has_counts) {
      if (!j.contains("m")) {
        throw ParseError("counts form requires \"m\"", line_no);
      }
      std::map<std::string, std::uint32_t> counts;
      for (const auto& [key, value] : j["counts"].items()) {
        counts[key] = value.get<std::uint32_t>();
      }
      const auto dropped =
          j.contains("dropped") ? j["dropped"].get<std::uint32_t>() : 0u;
      rec.pool = pool_from_counts(rec.record.prompt_id, counts,
                                  j["m"].get<std::uint32_t>(), dropped);
    }
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), line_no);
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line_no);
  }

  if (j.contains("logprobs") || j.contains("token_lengths")) {
    LogitRecord logits;
    logits.prompt_id = rec.record.prompt_id;
    try {
      if (j.contains("logprobs")) {
        for (const auto& [key, value] : j["logprobs"].items()) {
          const double logp = value.get<double>();
          if (!std::isfinite(logp) || logp > 0.0) {
            throw ParseError("logprob for \"" + key +
                                 "\" must be finite and <= 0",
                             line_no);
          }
          logits.logprobs[normalize_answer(key)] = logp;
        }
      }
      if (j.contains("token_lengths")) {
        for (const auto& [key, value] : j["token_lengths"].items()) {
          const auto length = value.get<std::uint32_t>();
          if (length < 1) {
            throw ParseError("token_length for \"" + key + "\" must be >= 1",
                             line_no);
          }
          logits.token_lengths[normalize_answer(key)] = length;
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    rec.logits = std::move(logits);
  }
  return rec;
}

std::vector<DatasetRecord> read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open dataset " + path, 0);
  }
  std::vector<DatasetRecord> records;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    records.push_back(dataset_record_from_json(j, line_no));
    if (!seen_ids.insert(records.back().record.prompt_id).second) {
      throw ParseError(
          "duplicate prompt_id " + records.back().record.prompt_id, line_no);
    }
  }
  if (records.empty()) {
    throw ParseError("dataset " + path + " has no records", line_no);
  }
  return records;
}

std::vector<DatasetEntry> to_entries(
    const std::vector<DatasetRecord>& records) {
  std::vector<DatasetEntry> entries;
  entries.reserve(records.size());
  for (const DatasetRecord& rec : records) {
    if (!rec.pool) {
      throw InsufficientData("record " + rec.record.prompt_id +
                             " has no responses/counts");
    }
    entries.push_back({rec.record, *rec.pool});
  }
  return entries;
}

LogitTable to_logit_table(const std::vector<DatasetRecord>& records) {
  LogitTable table;
  for (const DatasetRecord& rec : records) {
    if (rec.logits) {
      table.emplace(rec.record.prompt_id, *rec.logits);
    }
  }
  return table;
}

json dataset_record_to_json(const DatasetRecord& rec) {
  json j{{"prompt_id", rec.record.prompt_id},
         {"prompt", rec.record.prompt_text},
         {"true_answers", rec.record.true_answers},
         {"task", to_string(rec.record.task_kind)}};
  if (rec.pool) {
    j["m"] = rec.pool->m;
    json counts = json::object();
    for (const auto& [response, count] : rec.pool->entries) {
      counts[response] = count;
    }
    j["counts"] = std::move(counts);
    if (rec.pool->dropped_count > 0) {
      j["dropped"] = rec.pool->dropped_count;
    }
  }
  if (rec.logits) {
    if (!rec.logits->logprobs.empty()) {
      j["logprobs"] = rec.logits->logprobs;
    }
    if (!rec.logits->token_lengths.empty()) {
      j["token_lengths"] = rec.logits->token_lengths;
    }
  }
  return j;
}

void write_pools_jsonl(const std::string& path,
                       const std::vector<DatasetRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ParseError("cannot write " + path, 0);
  }
  for (const DatasetRecord& rec : records) {
    out << dataset_record_to_json(rec).dump() << "\n";
  }
}

json calibration_to_json(const CalibrationResult& cal) {
  json j{{"alpha", cal.alpha},
         {"n", cal.n},
         {"lambda", {{"lambda1", cal.lambda.lambda1},
                     {"lambda2", cal.lambda.lambda2}}},
         {"quantile_level", cal.quantile_level}};
  if (cal.infinite()) {
    j["q_hat"] = "inf";
  } else {
    j["q_hat"] = cal.q_hat;
  }
  return j;
}

CalibrationResult calibration_from_json(const json& j) {
  CalibrationResult cal;
  try {
    cal.alpha = j.at("alpha").get<double>();
    cal.n = j.at("n").get<std::size_t>();
    cal.quantile_level = j.at("quantile_level").get<double>();
    cal.lambda.lambda1 = j.at("lambda").at("lambda1").get<double>();
    cal.lambda.lambda2 = j.at("lambda").at("lambda2").get<double>();
    const auto& q = j.at("q_hat");
    cal.q_hat = q.is_string() ? kInfinity : q.get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("calibration artifact: ") + e.what(), 0);
  }
  return cal;
}

json tuning_outcome_to_json(const TuningOutcome& outcome) {
  json grid = json::array();
  for (const auto& [lambda, report] : outcome.grid_results) {
    grid.push_back({{"lambda",
                     {{"lambda1", lambda.lambda1}, {"lambda2", lambda.lambda2}}},
                    {"report", eval_report_to_json(report)}});
  }
  return json{{"best_lambda",
               {{"lambda1", outcome.best_lambda.lambda1},
                {"lambda2", outcome.best_lambda.lambda2}}},
              {"selection_rule", outcome.selection_rule},
              {"feasible", outcome.feasible},
              {"grid", std::move(grid)}};
}

json world_to_json(const SyntheticWorld& world) {
  json prompts = json::array();
  for (const SyntheticPrompt& p : world.prompts) {
    json dist = json::array();
    for (const auto& [text, prob] : p.distribution) {
      dist.push_back(json::array({text, prob}));
    }
    prompts.push_back({{"prompt_id", p.record.prompt_id},
                       {"prompt", p.record.prompt_text},
                       {"true_answers", p.record.true_answers},
                       {"task", to_string(p.record.task_kind)},
                       {"distribution", std::move(dist)}});
  }
  return json{{"seed", world.seed}, {"prompts", std::move(prompts)}};
}

SyntheticWorld world_from_json(const json& j) {
  SyntheticWorld world;
  try {
    world.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& pj : j.at("prompts")) {
      SyntheticPrompt p;
      p.record.prompt_id = pj.at("prompt_id").get<std::string>();
      p.record.prompt_text = pj.at("prompt").get<std::string>();
      for (const auto& a : pj.at("true_answers")) {
        p.record.true_answers.push_back(a.get<std::string>());
      }
      if (pj.contains("task")) {
        p.record.task_kind =
            task_kind_from_string(pj["task"].get<std::string>());
      }
      for (const auto& pair : pj.at("distribution")) {
        p.distribution.emplace_back(pair.at(0).get<std::string>(),
                                    pair.at(1).get<double>());
      }
      world.prompts.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("world file: ") + e.what(), 0);
  }
  world.validate();
  return world;
}

SyntheticWorld read_world_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open world file " + path, 0);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("world file ") + path + ": " + e.what(), 0);
  }
  return world_from_json(j);
}

void write_world_file(const std::string& path, const SyntheticWorld& world) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ParseError("cannot write world file " + path, 0);
  }
  out << world_to_json(world).dump(2) << "\n";
}

}  // namespace lofree
