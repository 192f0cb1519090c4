#include "lofree/embed.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

#include "lofree/errors.hpp"
#include "lofree/logging.hpp"
#include "lofree/normalize.hpp"
#include "lofree/rng.hpp"

namespace lofree {

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine: dimensions " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVector("cosine: zero-norm vector");
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension,
                                         std::size_t ngram_lo,
                                         std::size_t ngram_hi)
    : name_("hashed-ngram-" + std::to_string(dimension)),
      dimension_(dimension),
      ngram_lo_(ngram_lo),
      ngram_hi_(ngram_hi) {
  if (dimension < 8) {
    throw DomainError("HashedNgramEmbedder: dimension must be >= 8");
  }
  if (ngram_lo < 1 || ngram_lo > ngram_hi || ngram_hi > 5) {
    throw DomainError("HashedNgramEmbedder: need 1 <= lo <= hi <= 5");
  }
}

EmbeddingVector HashedNgramEmbedder::embed(const std::string& text) const {
  std::string normalized = normalize_answer(text);
  if (normalized.empty()) {
    throw EmptyText("HashedNgramEmbedder: text is empty after normalization");
  }
  const std::string padded = "^" + normalized + "$";

  EmbeddingVector v(dimension_, 0.0);
  for (std::size_t n = ngram_lo_; n <= ngram_hi_; ++n) {
    if (padded.size() < n) break;
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      const std::uint64_t h =
          stable_hash64(std::string_view(padded).substr(i, n));
      const std::size_t bucket = static_cast<std::size_t>(h % dimension_);
      const double sign = (h >> 63) ? -1.0 : 1.0;
      v[bucket] += sign;
    }
  }

  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

FileVectorProvider::FileVectorProvider(
    std::string name, std::size_t dimension,
    std::unordered_map<std::string, EmbeddingVector> table)
    : name_(std::move(name)), dimension_(dimension), table_(std::move(table)) {
  if (dimension_ >= 8) {
    fallback_.emplace(dimension_);
  }
}

EmbeddingVector FileVectorProvider::embed(const std::string& text) const {
  const std::string key = normalize_answer(text);
  auto it = table_.find(key);
  if (it != table_.end()) {
    return it->second;
  }
  if (!fallback_) {
    throw DimensionMismatch("no vector for \"" + key +
                            "\" and dimension too small for hashed fallback");
  }
  warn("embedding lookup missed \"" + key + "\"; using hashed-n-gram fallback");
  return fallback_->embed(text);
}

std::unique_ptr<VectorProvider> load_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open vector file " + path, 0);
  }
  std::unordered_map<std::string, EmbeddingVector> table;
  std::size_t dimension = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string token;
    if (!(row >> token)) {
      throw ParseError("missing text column", line_no);
    }
    for (char& c : token) {
      if (c == '_') c = ' ';
    }
    EmbeddingVector values;
    double x = 0.0;
    while (row >> x) values.push_back(x);
    if (!row.eof()) {
      throw ParseError("non-numeric vector component", line_no);
    }
    if (values.empty()) {
      throw ParseError("row has no vector components", line_no);
    }
    if (dimension == 0) {
      dimension = values.size();
    } else if (values.size() != dimension) {
      throw DimensionMismatch("vector file " + path + " line " +
                              std::to_string(line_no) + ": got " +
                              std::to_string(values.size()) +
                              " components, expected " +
                              std::to_string(dimension));
    }
    table[normalize_answer(token)] = std::move(values);
  }
  if (table.empty()) {
    throw ParseError("vector file " + path + " has no rows", line_no);
  }
  return std::make_unique<FileVectorProvider>("file:" + path, dimension,
                                              std::move(table));
}

std::unique_ptr<VectorProvider> make_provider(const std::string& spec,
                                              std::size_t dimension) {
  if (spec == "hashed") {
    return std::make_unique<HashedNgramEmbedder>(dimension);
  }
  if (spec.rfind("file:", 0) == 0) {
    return load_vectors(spec.substr(5));
  }
  throw DomainError("unknown embedder spec: " + spec);
}

}  // namespace lofree
