#include "lofree/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "lofree/errors.hpp"
#include "lofree/rng.hpp"

namespace lofree {

void SamplerConfig::validate() const {
  if (m < 1) {
    throw DomainError("sampler: m must be >= 1");
  }
  if (!(temperature > 0.0 && temperature <= 2.0)) {
    throw DomainError("sampler: temperature must be in (0, 2]");
  }
  if (max_retries < 0) {
    throw DomainError("sampler: max_retries must be >= 0");
  }
}

ResponsePool sample_prompt(CompletionClient& client,
                           const PromptRecord& prompt,
                           const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<std::string> responses;
  responses.reserve(cfg.m);
  std::size_t failures = 0;
  std::string first_error;
  for (std::size_t i = 0; i < cfg.m; ++i) {
    try {
      responses.push_back(client.complete(prompt, i, cfg));
    } catch (const UpstreamError& e) {
      ++failures;
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (responses.empty()) {
    throw UpstreamError("prompt " + prompt.prompt_id +
                        ": all samples failed: " + first_error);
  }
  if (failures > 0) {
    throw PartialPool(prompt.prompt_id, responses.size(), cfg.m);
  }
  return build_pool(prompt.prompt_id, responses, cfg.m);
}

// ---------------------------------------------------------------------------
// Synthetic world

void SyntheticWorld::validate() const {
  for (const SyntheticPrompt& p : prompts) {
    double sum = 0.0;
    for (const auto& [text, prob] : p.distribution) {
      if (!(prob > 0.0 && prob <= 1.0)) {
        throw DomainError("synthetic world: probability out of (0,1] for \"" +
                          text + "\" in " + p.record.prompt_id);
      }
      sum += prob;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DomainError("synthetic world: probabilities for " +
                        p.record.prompt_id + " sum to " +
                        std::to_string(sum));
    }
  }
}

SyntheticClient::SyntheticClient(SyntheticWorld world)
    : world_(std::move(world)) {
  world_.validate();
}

std::string SyntheticClient::complete(const PromptRecord& prompt,
                                      std::size_t sample_index,
                                      const SamplerConfig&) {
  const SyntheticPrompt* entry = nullptr;
  for (const SyntheticPrompt& p : world_.prompts) {
    if (p.record.prompt_id == prompt.prompt_id) {
      entry = &p;
      break;
    }
  }
  if (entry == nullptr) {
    throw UpstreamError("synthetic world has no prompt " + prompt.prompt_id);
  }
  // One stream per (prompt, sample): draw order cannot matter.
  const std::uint64_t stream =
      splitmix64(world_.seed ^ stable_hash64(prompt.prompt_id) ^
                 splitmix64(static_cast<std::uint64_t>(sample_index) + 1));
  const double u =
      static_cast<double>(stream >> 11) * 0x1.0p-53;  // uniform [0,1)
  double cdf = 0.0;
  for (const auto& [text, prob] : entry->distribution) {
    cdf += prob;
    if (u < cdf) return text;
  }
  return entry->distribution.back().first;
}

SyntheticWorld make_coverage_world(std::size_t n_prompts,
                                   std::size_t vocab_size,
                                   std::pair<double, double> truth_prob_range,
                                   std::uint64_t seed) {
  if (n_prompts < 1 || vocab_size < 1) {
    throw DomainError("make_coverage_world: need n_prompts and vocab >= 1");
  }
  const auto [lo, hi] = truth_prob_range;
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) {
    throw DomainError("make_coverage_world: bad truth_prob_range");
  }

  std::vector<std::string> vocab;
  vocab.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    std::string word = "ans";
    word.push_back(static_cast<char>('a' + (i / 26) % 26));
    word.push_back(static_cast<char>('a' + i % 26));
    if (i >= 26 * 26) word += std::to_string(i / (26 * 26));
    vocab.push_back(std::move(word));
  }

  SyntheticWorld world;
  world.seed = seed;
  world.prompts.reserve(n_prompts);
  Rng rng(seed);
  for (std::size_t i = 0; i < n_prompts; ++i) {
    SyntheticPrompt p;
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%05zu", i);
    p.record.prompt_id = id;
    p.record.prompt_text = "synthetic question " + std::to_string(i);
    p.record.task_kind = TaskKind::open_qa;

    const std::size_t truth = static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint64_t>(vocab_size)));
    p.record.true_answers = {vocab[truth]};
    double truth_prob = rng.next_double(lo, hi);

    std::vector<std::pair<std::size_t, double>> weights;
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < vocab_size; ++j) {
      if (j == truth) continue;
      const double w = rng.next_double();
      if (w > 0.0) {
        weights.emplace_back(j, w);
        weight_sum += w;
      }
    }
    if (weights.empty() || weight_sum == 0.0) {
      truth_prob = 1.0;  // nothing else to put mass on
    }
    if (truth_prob > 0.0) {
      p.distribution.emplace_back(vocab[truth], truth_prob);
    }
    const double rest = 1.0 - truth_prob;
    if (rest > 0.0) {
      for (const auto& [j, w] : weights) {
        p.distribution.emplace_back(vocab[j], rest * (w / weight_sum));
      }
    }
    world.prompts.push_back(std::move(p));
  }
  world.validate();
  return world;
}

std::vector<DatasetEntry> sample_world(const SyntheticWorld& world,
                                       std::uint32_t m) {
  SyntheticClient client(world);
  SamplerConfig cfg;
  cfg.m = m;
  std::vector<DatasetEntry> entries;
  entries.reserve(world.prompts.size());
  for (const SyntheticPrompt& p : world.prompts) {
    DatasetEntry entry;
    entry.record = p.record;
    entry.pool = sample_prompt(client, p.record, cfg);
    entries.push_back(std::move(entry));
  }
  return entries;
}

// ---------------------------------------------------------------------------
// HTTP client

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /path or "/"
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw DomainError("endpoint URL must start with http:// : " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme == "https") {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    throw UpstreamError("https endpoints require a TLS-enabled build");
#endif
  } else if (scheme != "http") {
    throw DomainError("unsupported URL scheme: " + scheme);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl parsed;
  if (path_start == std::string::npos) {
    parsed.base = url;
    parsed.path = "/";
  } else {
    parsed.base = url.substr(0, path_start);
    parsed.path = url.substr(path_start);
  }
  return parsed;
}

std::string replace_all(std::string text, const std::string& needle,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

// Pulls the first generation text out of the common completion shapes.
std::optional<std::string> extract_text(const nlohmann::json& j) {
  if (j.contains("choices") && j["choices"].is_array() &&
      !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.contains("text") && choice["text"].is_string()) {
      return choice["text"].get<std::string>();
    }
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      return choice["message"]["content"].get<std::string>();
    }
  }
  for (const char* key : {"text", "content", "completion"}) {
    if (j.contains(key) && j[key].is_string()) {
      return j[key].get<std::string>();
    }
  }
  return std::nullopt;
}

}  // namespace

struct HttpCompletionClient::Impl {
  HttpEndpoint endpoint;
  ParsedUrl url;

  explicit Impl(HttpEndpoint ep)
      : endpoint(std::move(ep)), url(parse_url(endpoint.url)) {}

  std::string body_for(const std::string& prompt_text,
                       const SamplerConfig& cfg) const {
    if (!cfg.request_template.empty()) {
      const std::string quoted =
          nlohmann::json(prompt_text).dump();  // includes quotes
      const std::string inner = quoted.substr(1, quoted.size() - 2);
      std::string body =
          replace_all(cfg.request_template, "\"{prompt}\"", quoted);
      return replace_all(body, "{prompt}", inner);
    }
    nlohmann::json body{{"model", endpoint.model},
                        {"prompt", prompt_text},
                        {"temperature", cfg.temperature},
                        {"n", 1}};
    if (cfg.top_p) body["top_p"] = *cfg.top_p;
    if (cfg.top_k) body["top_k"] = *cfg.top_k;
    return body.dump();
  }

  std::string request(const std::string& body,
                      const SamplerConfig& cfg) const {
    httplib::Client client(url.base);
    const auto secs =
        std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
    client.set_connection_timeout(secs.count() > 0 ? secs.count() : 1, 0);
    client.set_read_timeout(secs.count() > 0 ? secs.count() : 1, 0);

    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
      if (const char* key = std::getenv(endpoint.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }

    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0) {
        const auto backoff = std::chrono::milliseconds(
            std::min(5000, 100 * (1 << std::min(attempt, 10))));
        std::this_thread::sleep_for(backoff);
      }
      auto res =
          client.Post(url.path, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        last_error = "HTTP " + std::to_string(res->status);
        // 4xx other than 429 will not improve on retry.
        if (res->status >= 400 && res->status < 500 && res->status != 429) {
          break;
        }
        continue;
      }
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("bad JSON response: ") + e.what();
        continue;
      }
      if (auto text = extract_text(parsed)) {
        return *text;
      }
      last_error = "response JSON has no completion text";
      break;
    }
    throw UpstreamError("endpoint " + endpoint.url + ": " + last_error);
  }
};

HttpCompletionClient::HttpCompletionClient(HttpEndpoint endpoint)
    : impl_(std::make_unique<Impl>(std::move(endpoint))) {}

HttpCompletionClient::~HttpCompletionClient() = default;

std::string HttpCompletionClient::complete(const PromptRecord& prompt,
                                           std::size_t /*sample_index*/,
                                           const SamplerConfig& cfg) {
  std::string prompt_text = prompt.prompt_text;
  if (!cfg.prompt_template.empty()) {
    prompt_text = apply_prompt_template(cfg.prompt_template, prompt_text);
  }
  return impl_->request(impl_->body_for(prompt_text, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Lemma: minimum sample size

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: p must be in (0, 1)");
  }
  // Acklam's coefficients.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  const double p_high = 1.0 - p_low;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= p_high) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the exact CDF (via erfc) brings the result to
  // near machine precision.
  constexpr double kSqrt2Pi = 2.5066282746310002;
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * kSqrt2Pi * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

std::uint64_t min_sample_size(double epsilon, double delta) {
  if (!(epsilon > 0.0)) {
    throw DomainError("min_sample_size: epsilon must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("min_sample_size: delta must be in (0, 1)");
  }
  const double z = normal_quantile(1.0 - (1.0 - delta) / 2.0);
  const double bound = (z / (2.0 * epsilon)) * (z / (2.0 * epsilon));
  if (!(bound < 9.0e18)) {
    throw DomainError("min_sample_size: bound overflows (epsilon too small)");
  }
  return static_cast<std::uint64_t>(std::ceil(bound));
}

std::string load_prompt_template(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open prompt template " + path, 0);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string tmpl = buf.str();
  if (tmpl.find("{question}") == std::string::npos) {
    throw ParseError("prompt template " + path + " lacks {question}", 0);
  }
  return tmpl;
}

std::string apply_prompt_template(const std::string& tmpl,
                                  const std::string& question) {
  return replace_all(tmpl, "{question}", question);
}

}  // namespace lofree
