#ifndef LOFREE_EMBED_HPP
#define LOFREE_EMBED_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lofree {

using EmbeddingVector = std::vector<double>;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Deterministic text-to-vector source. Implementations must return the
// same vector for the same text, and are safe for concurrent lookups once
// constructed.
class VectorProvider {
 public:
  virtual ~VectorProvider() = default;
  virtual const std::string& name() const = 0;
  virtual std::size_t dimension() const = 0;
  // Text is normalized (normalize_answer) before embedding.
  virtual EmbeddingVector embed(const std::string& text) const = 0;
};

// Feature-hashed character n-grams with +/-1 signs, L2-normalized.
// The text is normalized and padded with '^'/'$' boundary markers, then
// every n-gram for n in [ngram_lo, ngram_hi] is hashed (stable_hash64 with
// kStableHashSeed) into `dimension` signed buckets. Deterministic across
// platforms; surface-similar strings share buckets and score higher cosine.
class HashedNgramEmbedder : public VectorProvider {
 public:
  explicit HashedNgramEmbedder(std::size_t dimension = 200,
                               std::size_t ngram_lo = 2,
                               std::size_t ngram_hi = 4);

  const std::string& name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(const std::string& text) const override;

 private:
  std::string name_;
  std::size_t dimension_;
  std::size_t ngram_lo_;
  std::size_t ngram_hi_;
};

// Exact-lookup provider over a word-vector dump; unknown text falls back to
// hashed n-grams with a warning. The fallback needs dimension >= 8; files
// with smaller vectors get no fallback and unknown lookups throw. File
// format: one row per entry,
//   <text-with-underscores-for-spaces> <f1> ... <fD>
class FileVectorProvider : public VectorProvider {
 public:
  FileVectorProvider(std::string name, std::size_t dimension,
                     std::unordered_map<std::string, EmbeddingVector> table);

  const std::string& name() const override { return name_; }
  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(const std::string& text) const override;

 private:
  std::string name_;
  std::size_t dimension_;
  std::unordered_map<std::string, EmbeddingVector> table_;
  std::optional<HashedNgramEmbedder> fallback_;
};

// Parses the format above. Throws ParseError (with line number) or
// DimensionMismatch.
std::unique_ptr<VectorProvider> load_vectors(const std::string& path);

// "hashed" or "file:<path>", as accepted by the CLI --embedder flag.
std::unique_ptr<VectorProvider> make_provider(const std::string& spec,
                                              std::size_t dimension = 200);

}  // namespace lofree

#endif  // LOFREE_EMBED_HPP
