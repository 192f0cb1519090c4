#include "lofree/embed.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "lofree/errors.hpp"
#include "lofree/logging.hpp"
#include "lofree/rng.hpp"

using namespace lofree;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  out << content;
}

std::string random_token(Rng& rng) {
  const std::size_t len = 1 + static_cast<std::size_t>(rng.next_below(12));
  std::string s;
  for (std::size_t i = 0; i < len; ++i) {
    s.push_back(static_cast<char>('a' + rng.next_below(26)));
  }
  return s;
}

}  // namespace

TEST_CASE("identical texts embed identically (cosine 1)") {
  HashedNgramEmbedder embedder(200, 2, 3);
  const auto a = embedder.embed("abc");
  const auto b = embedder.embed("abc");
  CHECK(a == b);
  CHECK(cosine_similarity(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint character sets give near-zero cosine at large dimension") {
  HashedNgramEmbedder embedder(512);
  const double cos = cosine_similarity(embedder.embed("abcdabcd"),
                                       embedder.embed("wxyzwxyz"));
  CHECK(std::abs(cos) < 0.2);
}

TEST_CASE("shared n-grams dominate: similar strings score higher") {
  HashedNgramEmbedder embedder(200);
  const auto base = embedder.embed("bill boonzy");
  const double close = cosine_similarity(base, embedder.embed("big bill broonzy"));
  const double far = cosine_similarity(base, embedder.embed("zxqvw"));
  CHECK(close > far);
}

TEST_CASE("provider determinism over random strings") {
  HashedNgramEmbedder embedder(64);
  Rng rng(4242);
  for (int i = 0; i < 1000; ++i) {
    const std::string token = random_token(rng);
    CHECK(embedder.embed(token) == embedder.embed(token));
  }
}

TEST_CASE("cosine properties: symmetry, bound, scale invariance") {
  HashedNgramEmbedder embedder(128);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto a = embedder.embed(random_token(rng));
    const auto b = embedder.embed(random_token(rng));
    const double ab = cosine_similarity(a, b);
    CHECK(std::abs(ab) <= 1.0 + 1e-9);
    CHECK(ab == doctest::Approx(cosine_similarity(b, a)).epsilon(1e-9));
    EmbeddingVector scaled = b;
    for (double& x : scaled) x *= 3.5;
    CHECK(ab == doctest::Approx(cosine_similarity(a, scaled)).epsilon(1e-9));
  }
}

TEST_CASE("embedder input validation") {
  CHECK_THROWS_AS(HashedNgramEmbedder(4), DomainError);
  CHECK_THROWS_AS(HashedNgramEmbedder(64, 0, 3), DomainError);
  CHECK_THROWS_AS(HashedNgramEmbedder(64, 3, 2), DomainError);
  HashedNgramEmbedder embedder(64);
  CHECK_THROWS_AS(embedder.embed(""), EmptyText);
  CHECK_THROWS_AS(embedder.embed("..."), EmptyText);
}

TEST_CASE("vector file read-back") {
  const std::string path = temp_path("lofree_vec_ok.txt");
  write_file(path, "paris 0.1 0.2\nnew_york 0.3 0.4\n");
  const auto provider = load_vectors(path);
  CHECK(provider->dimension() == 2);
  CHECK(provider->embed("paris") == EmbeddingVector{0.1, 0.2});
  // Underscores decode to spaces and lookups normalize first.
  CHECK(provider->embed("New York") == EmbeddingVector{0.3, 0.4});
  std::remove(path.c_str());
}

TEST_CASE("vector file dimension mismatch") {
  const std::string path = temp_path("lofree_vec_bad.txt");
  write_file(path, "a 0.1 0.2\nb 0.1 0.2 0.3\n");
  CHECK_THROWS_AS(load_vectors(path), DimensionMismatch);
  std::remove(path.c_str());
}

TEST_CASE("vector file parse error carries a line number") {
  const std::string path = temp_path("lofree_vec_parse.txt");
  write_file(path, "a 0.1\nb not-a-number\n");
  try {
    load_vectors(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::remove(path.c_str());
}

TEST_CASE("provider specs resolve to the right backends") {
  CHECK(make_provider("hashed", 64)->dimension() == 64);
  CHECK(make_provider("hashed", 64)->name() == "hashed-ngram-64");
  CHECK_THROWS_AS(make_provider("word2vec", 64), DomainError);

  const std::string path = temp_path("lofree_vec_spec.txt");
  write_file(path, "alpha 1 2 3\n");
  const auto provider = make_provider("file:" + path);
  CHECK(provider->dimension() == 3);
  std::remove(path.c_str());
}

TEST_CASE("unknown word falls back to hashed embedding with a warning") {
  const std::string path = temp_path("lofree_vec_fallback.txt");
  write_file(path, "known 1 0 0 0 0 0 0 0\n");
  const auto provider = load_vectors(path);
  int warnings = 0;
  auto previous = set_warning_handler([&](const std::string&) { ++warnings; });
  const auto v = provider->embed("unknown");
  set_warning_handler(previous);
  CHECK(warnings == 1);
  CHECK(v.size() == 8);
  CHECK(v == HashedNgramEmbedder(8).embed("unknown"));
  std::remove(path.c_str());
}
