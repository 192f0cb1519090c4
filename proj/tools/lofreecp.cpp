// lofreecp: build response pools by repeated sampling, calibrate a
// split-conformal quantile over frequency/entropy/similarity nonconformity
// scores, and emit prediction sets with coverage metrics.
//
// Subcommands: synth, sample, run, tune, eval, samplesize.
// Exit codes: 0 success, 1 usage, 2 data error, 3 upstream error.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lofree/dataset_io.hpp"
#include "lofree/embed.hpp"
#include "lofree/errors.hpp"
#include "lofree/runner.hpp"
#include "lofree/sampling.hpp"

namespace {

using nlohmann::json;

struct SampleArgs {
  std::string dataset_path;
  std::string world_path;
  std::string out_path;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "LOFREE_API_KEY";
  std::string prompt_template_path;
  std::string request_template_path;
  std::uint32_t m = 20;
  double temperature = 1.0;
  std::optional<double> top_p;
  std::optional<int> top_k;
  int max_retries = 3;
  long timeout_ms = 30000;
  std::size_t concurrency = 1;
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw lofree::ParseError("cannot open " + path, 0);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int cmd_sample(const SampleArgs& args) {
  using namespace lofree;

  SamplerConfig cfg;
  cfg.m = args.m;
  cfg.temperature = args.temperature;
  cfg.top_p = args.top_p;
  cfg.top_k = args.top_k;
  cfg.max_retries = args.max_retries;
  cfg.timeout = std::chrono::milliseconds(args.timeout_ms);
  if (!args.prompt_template_path.empty()) {
    cfg.prompt_template = load_prompt_template(args.prompt_template_path);
  }
  if (!args.request_template_path.empty()) {
    cfg.request_template = read_text_file(args.request_template_path);
  }
  cfg.validate();

  // Prompt list and client, from a synthetic world or an HTTP endpoint.
  std::vector<PromptRecord> prompts;
  std::unique_ptr<CompletionClient> client;
  if (!args.world_path.empty()) {
    SyntheticWorld world = read_world_file(args.world_path);
    for (const SyntheticPrompt& p : world.prompts) {
      prompts.push_back(p.record);
    }
    client = std::make_unique<SyntheticClient>(std::move(world));
  } else {
    if (args.endpoint.empty()) {
      throw DomainError("sample: need --synthetic or --endpoint");
    }
    if (args.dataset_path.empty()) {
      throw DomainError("sample: --endpoint requires --dataset");
    }
    for (const DatasetRecord& rec : read_dataset_jsonl(args.dataset_path)) {
      prompts.push_back(rec.record);
    }
    client = std::make_unique<HttpCompletionClient>(
        HttpEndpoint{args.endpoint, args.model, args.api_key_env});
  }

  // Resume: skip prompts already present in the output file.
  std::set<std::string> done_ids;
  if (std::filesystem::exists(args.out_path) &&
      std::filesystem::file_size(args.out_path) > 0) {
    for (const DatasetRecord& rec : read_dataset_jsonl(args.out_path)) {
      done_ids.insert(rec.record.prompt_id);
    }
  }
  std::vector<const PromptRecord*> todo;
  for (const PromptRecord& p : prompts) {
    if (!done_ids.count(p.prompt_id)) todo.push_back(&p);
  }
  std::cout << "sampling " << todo.size() << " of " << prompts.size()
            << " prompts (" << done_ids.size() << " already done)\n";

  std::vector<std::optional<DatasetRecord>> results(todo.size());
  std::vector<std::optional<json>> failures(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) break;
      const PromptRecord& prompt = *todo[i];
      try {
        DatasetRecord rec;
        rec.record = prompt;
        rec.pool = sample_prompt(*client, prompt, cfg);
        results[i] = std::move(rec);
      } catch (const PartialPool& e) {
        failures[i] = json{{"prompt_id", prompt.prompt_id},
                           {"error", e.what()},
                           {"obtained", e.obtained()}};
      } catch (const Error& e) {
        failures[i] =
            json{{"prompt_id", prompt.prompt_id}, {"error", e.what()}};
      } catch (const std::exception& e) {
        failures[i] =
            json{{"prompt_id", prompt.prompt_id}, {"error", e.what()}};
      }
    }
  };
  if (args.concurrency <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < args.concurrency; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& th : pool) th.join();
  }

  // Single writer, input order, append mode for resumability.
  std::ofstream out(args.out_path, std::ios::app);
  if (!out) {
    throw ParseError("cannot write " + args.out_path, 0);
  }
  std::size_t written = 0, failed = 0;
  for (const auto& rec : results) {
    if (rec) {
      out << dataset_record_to_json(*rec).dump() << "\n";
      ++written;
    }
  }
  for (const auto& f : failures) {
    if (f) ++failed;
  }
  if (failed > 0) {
    const std::string manifest = args.out_path + ".failures.jsonl";
    std::ofstream mf(manifest, std::ios::trunc);
    for (const auto& f : failures) {
      if (f) mf << f->dump() << "\n";
    }
    std::cout << failed << " prompts failed; see " << manifest << "\n";
  }
  std::cout << "wrote " << written << " pools to " << args.out_path << "\n";
  return failed > 0 ? 3 : 0;
}

lofree::SplitRatios ratios_from(const std::vector<double>& values) {
  lofree::SplitRatios ratios;
  if (!values.empty()) {
    if (values.size() != 3) {
      throw lofree::DomainError("--ratios expects cal,val,test");
    }
    ratios.calibration = values[0];
    ratios.validation = values[1];
    ratios.test = values[2];
  }
  return ratios;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Logit-free conformal prediction for black-box LLMs: response-pool "
      "sampling, combined nonconformity scoring, split-conformal "
      "calibration, and coverage/set-size evaluation."};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic world file with known ground truth");
  std::string synth_out = "world.json";
  std::size_t synth_prompts = 500, synth_vocab = 8;
  double synth_lo = 0.2, synth_hi = 0.9;
  std::uint64_t synth_seed = 1;
  synth->add_option("--out", synth_out, "Output world file");
  synth->add_option("--n-prompts", synth_prompts, "Number of prompts");
  synth->add_option("--vocab", synth_vocab, "Vocabulary size");
  synth->add_option("--truth-prob-lo", synth_lo, "Truth probability lower bound");
  synth->add_option("--truth-prob-hi", synth_hi, "Truth probability upper bound");
  synth->add_option("--seed", synth_seed, "World seed");

  // --- sample --------------------------------------------------------------
  auto* sample = app.add_subcommand(
      "sample", "Sample m responses per prompt into a pools JSONL");
  SampleArgs sample_args;
  sample->add_option("--dataset", sample_args.dataset_path,
                     "Prompt JSONL (required with --endpoint)");
  sample->add_option("--synthetic", sample_args.world_path,
                     "Synthetic world file (from `synth`)");
  sample->add_option("--out", sample_args.out_path, "Output pools JSONL")
      ->required();
  sample->add_option("--endpoint", sample_args.endpoint,
                     "Completion endpoint, http://host:port/path");
  sample->add_option("--model", sample_args.model, "Model name sent upstream");
  sample->add_option("--api-key-env", sample_args.api_key_env,
                     "Env var holding the bearer token");
  sample->add_option("--m", sample_args.m, "Samples per prompt");
  sample->add_option("--temperature", sample_args.temperature,
                     "Sampling temperature in (0,2]");
  double sample_top_p = 0.0;
  int sample_top_k = 0;
  auto* top_p_opt = sample->add_option("--top-p", sample_top_p,
                                       "Pass top_p upstream (omitted unless set)");
  auto* top_k_opt = sample->add_option("--top-k", sample_top_k,
                                       "Pass top_k upstream (omitted unless set)");
  sample->add_option("--max-retries", sample_args.max_retries,
                     "Retries per request");
  sample->add_option("--timeout-ms", sample_args.timeout_ms,
                     "Per-request timeout");
  sample->add_option("--concurrency", sample_args.concurrency,
                     "Prompts sampled in flight");
  sample->add_option("--prompt-template", sample_args.prompt_template_path,
                     "Few-shot template file with {question}");
  sample->add_option("--request-template", sample_args.request_template_path,
                     "Raw JSON body template file with {prompt}");

  // --- run -----------------------------------------------------------------
  auto* run = app.add_subcommand(
      "run", "Trials over methods x error rates; writes report files");
  std::string run_config_path;
  std::string run_pools, run_out = "out";
  std::vector<double> run_alphas;
  std::vector<std::string> run_methods;
  double run_grid_max = 2.0, run_grid_step = 0.05;
  std::string run_embedder = "hashed";
  std::size_t run_embed_dim = 200, run_trials = 50, run_jobs = 1;
  std::uint64_t run_seed = 0;
  std::vector<double> run_ratios;
  run->add_option("--config", run_config_path,
                  "JSON config; command-line flags win");
  auto* o_pools = run->add_option("--pools", run_pools, "Pools JSONL");
  auto* o_alphas = run->add_option("--alphas", run_alphas,
                                   "Comma-separated error rates in (0,1)")
                       ->delimiter(',');
  auto* o_methods =
      run->add_option("--methods", run_methods,
                      "Subset of lofree,freq_only,freq_ne,freq_ss,scp,"
                      "first_k_white,first_k_black")
          ->delimiter(',');
  auto* o_gmax = run->add_option("--grid-max", run_grid_max, "Lambda grid max");
  auto* o_gstep =
      run->add_option("--grid-step", run_grid_step, "Lambda grid step");
  auto* o_embed = run->add_option("--embedder", run_embedder,
                                  "hashed or file:<path>");
  auto* o_dim = run->add_option("--embed-dim", run_embed_dim,
                                "Hashed embedder dimension");
  auto* o_trials = run->add_option("--trials", run_trials, "Trial count");
  auto* o_seed = run->add_option("--seed", run_seed, "Base seed");
  auto* o_ratios = run->add_option("--ratios", run_ratios,
                                   "cal,val,test split ratios")
                       ->delimiter(',');
  auto* o_out = run->add_option("--out", run_out, "Output directory");
  auto* o_jobs = run->add_option("--jobs", run_jobs, "Worker threads");

  // --- tune ----------------------------------------------------------------
  auto* tune = app.add_subcommand(
      "tune", "Grid-search lambda on one split; writes a TuningOutcome");
  std::string tune_pools, tune_out = "tuning.json";
  double tune_alpha = 0.2;
  double tune_grid_max = 2.0, tune_grid_step = 0.05;
  std::string tune_embedder = "hashed";
  std::size_t tune_embed_dim = 200;
  std::uint64_t tune_seed = 0;
  std::vector<double> tune_ratios;
  tune->add_option("--pools", tune_pools, "Pools JSONL")->required();
  tune->add_option("--alpha", tune_alpha, "Error rate")->required();
  tune->add_option("--grid-max", tune_grid_max, "Lambda grid max");
  tune->add_option("--grid-step", tune_grid_step, "Lambda grid step");
  tune->add_option("--embedder", tune_embedder, "hashed or file:<path>");
  tune->add_option("--embed-dim", tune_embed_dim, "Hashed embedder dimension");
  tune->add_option("--seed", tune_seed, "Split seed");
  tune->add_option("--ratios", tune_ratios, "cal,val,test split ratios")
      ->delimiter(',');
  tune->add_option("--out", tune_out, "Output JSON path");

  // --- eval ----------------------------------------------------------------
  auto* eval = app.add_subcommand(
      "eval", "Apply a saved calibration to a pools file");
  std::string eval_pools, eval_cal, eval_out, eval_sets;
  std::string eval_embedder = "hashed";
  std::size_t eval_embed_dim = 200;
  eval->add_option("--pools", eval_pools, "Pools JSONL")->required();
  eval->add_option("--calibration", eval_cal,
                   "Calibration JSON (from `tune`)")
      ->required();
  eval->add_option("--embedder", eval_embedder, "hashed or file:<path>");
  eval->add_option("--embed-dim", eval_embed_dim, "Hashed embedder dimension");
  eval->add_option("--out", eval_out, "Write the EvalReport JSON here");
  eval->add_option("--sets", eval_sets, "Write per-prompt sets JSONL here");

  // --- samplesize ----------------------------------------------------------
  auto* samplesize = app.add_subcommand(
      "samplesize",
      "Minimum samples for confident probability estimation");
  double ss_epsilon = 0.0, ss_delta = 0.0;
  const auto range_check = [](double lo, double hi, const char* what) {
    return CLI::Validator(
        [lo, hi, what](std::string& value) -> std::string {
          double parsed = 0.0;
          try {
            parsed = std::stod(value);
          } catch (const std::exception&) {
            return std::string(what) + " must be a number";
          }
          if (!(parsed > lo && parsed < hi)) {
            return std::string(what) + " out of range";
          }
          return {};
        },
        what);
  };
  samplesize->add_option("--epsilon", ss_epsilon, "Estimation error > 0")
      ->required()
      ->check(range_check(0.0, std::numeric_limits<double>::infinity(),
                          "epsilon"));
  samplesize->add_option("--delta", ss_delta, "Confidence level in (0,1)")
      ->required()
      ->check(range_check(0.0, 1.0, "delta"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      const lofree::SyntheticWorld world = lofree::make_coverage_world(
          synth_prompts, synth_vocab, {synth_lo, synth_hi}, synth_seed);
      lofree::write_world_file(synth_out, world);
      std::cout << "wrote " << world.prompts.size() << " prompts to "
                << synth_out << "\n";
      return 0;
    }

    if (sample->parsed()) {
      if (top_p_opt->count() > 0) sample_args.top_p = sample_top_p;
      if (top_k_opt->count() > 0) sample_args.top_k = sample_top_k;
      return cmd_sample(sample_args);
    }

    if (run->parsed()) {
      lofree::RunConfig config;
      if (!run_config_path.empty()) {
        std::ifstream in(run_config_path);
        if (!in) {
          throw lofree::ParseError("cannot open config " + run_config_path, 0);
        }
        json j;
        in >> j;
        config = lofree::RunConfig::from_json(j);
      }
      if (o_pools->count()) config.dataset_path = run_pools;
      if (o_alphas->count()) config.alphas = run_alphas;
      if (o_methods->count()) {
        config.methods.clear();
        for (const std::string& name : run_methods) {
          config.methods.push_back(lofree::method_from_string(name));
        }
      }
      if (o_gmax->count()) config.grid_max = run_grid_max;
      if (o_gstep->count()) config.grid_step = run_grid_step;
      if (o_embed->count()) config.embedder_spec = run_embedder;
      if (o_dim->count()) config.embed_dim = run_embed_dim;
      if (o_trials->count()) config.trials = run_trials;
      if (o_seed->count()) config.base_seed = run_seed;
      if (o_ratios->count()) config.ratios = ratios_from(run_ratios);
      if (o_out->count()) config.output_dir = run_out;
      if (o_jobs->count()) config.jobs = run_jobs;
      if (config.dataset_path.empty()) {
        throw lofree::DomainError("run: --pools (or config dataset) required");
      }

      const auto results = lofree::run_experiments(config);
      std::cout << lofree::report_tsv(results);
      std::cout << "reports written to " << config.output_dir << "\n";
      return 0;
    }

    if (tune->parsed()) {
      const auto records = lofree::read_dataset_jsonl(tune_pools);
      const auto entries = lofree::to_entries(records);
      const auto embedder =
          lofree::make_provider(tune_embedder, tune_embed_dim);
      const auto split = lofree::split_dataset(
          entries, ratios_from(tune_ratios), tune_seed);
      const auto grid = lofree::lambda_grid(tune_grid_max, tune_grid_step);
      const lofree::TuningOutcome outcome =
          lofree::try_tune_lambda(split, tune_alpha, grid, *embedder);

      json out_json = lofree::tuning_outcome_to_json(outcome);
      const auto calibration = lofree::calibrate(
          split.calibration, tune_alpha, outcome.best_lambda, *embedder);
      out_json["calibration"] = lofree::calibration_to_json(calibration);
      std::ofstream out(tune_out, std::ios::trunc);
      out << out_json.dump(2) << "\n";

      std::cout << "best lambda = (" << outcome.best_lambda.lambda1 << ", "
                << outcome.best_lambda.lambda2 << "), written to " << tune_out
                << "\n";
      if (!outcome.feasible) {
        std::cerr << "no lambda reached validation ECR >= " << 1.0 - tune_alpha
                  << "; best-effort lambda recorded, outcome marked "
                     "infeasible\n";
        return 2;
      }
      return 0;
    }

    if (eval->parsed()) {
      const auto records = lofree::read_dataset_jsonl(eval_pools);
      const auto entries = lofree::to_entries(records);
      const auto embedder =
          lofree::make_provider(eval_embedder, eval_embed_dim);

      std::ifstream cal_in(eval_cal);
      if (!cal_in) {
        throw lofree::ParseError("cannot open calibration " + eval_cal, 0);
      }
      json cal_json;
      cal_in >> cal_json;
      if (cal_json.contains("calibration")) {
        cal_json = cal_json["calibration"];
      }
      const lofree::CalibrationResult cal =
          lofree::calibration_from_json(cal_json);

      std::vector<lofree::PredictionSet> sets;
      std::vector<lofree::PromptRecord> prompt_records;
      sets.reserve(entries.size());
      for (const lofree::DatasetEntry& entry : entries) {
        sets.push_back(lofree::predict_set_for_record(entry.record, entry.pool,
                                                      cal, *embedder));
        prompt_records.push_back(entry.record);
      }
      const lofree::EvalReport report =
          lofree::evaluate(sets, prompt_records, cal.alpha);

      if (!eval_sets.empty()) {
        std::ofstream sf(eval_sets, std::ios::trunc);
        for (const lofree::PredictionSet& set : sets) {
          json members = json::array();
          for (const lofree::ScoreBreakdown& b : set.members) {
            members.push_back({{"response", b.response},
                               {"frequency", b.frequency},
                               {"ne", b.ne},
                               {"ss", b.ss},
                               {"combined", b.combined}});
          }
          sf << json{{"prompt_id", set.prompt_id},
                     {"q_hat", std::isinf(set.q_hat) ? json("inf")
                                                     : json(set.q_hat)},
                     {"covered", set.covered},
                     {"members", std::move(members)}}
                    .dump()
             << "\n";
        }
      }
      if (!eval_out.empty()) {
        std::ofstream rf(eval_out, std::ios::trunc);
        rf << lofree::eval_report_to_json(report).dump(2) << "\n";
      }
      std::cout << "alpha\tecr\tssc\tapss\tn_test\tinfeasible\n"
                << lofree::eval_report_tsv_row(report) << "\n";
      return 0;
    }

    if (samplesize->parsed()) {
      std::cout << lofree::min_sample_size(ss_epsilon, ss_delta) << "\n";
      return 0;
    }
  } catch (const lofree::UpstreamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lofree::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
