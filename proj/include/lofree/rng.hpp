#ifndef LOFREE_RNG_HPP
#define LOFREE_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace lofree {

// All randomness in the library flows through these helpers so that a given
// seed produces the same stream on every platform. std::mt19937_64 output is
// fully specified by the standard; std::shuffle and the distribution adaptors
// are not, which is why both are reimplemented here.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a with a splitmix finalizer. Seed constant documented in the embedder
// docs; changing it changes every hashed-n-gram embedding.
inline constexpr std::uint64_t kStableHashSeed = 0x51AFDE6BD57D34D9ULL;

inline std::uint64_t stable_hash64(std::string_view text,
                                   std::uint64_t seed = kStableHashSeed) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double next_double(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates with the deterministic bounded draw above.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace lofree

#endif  // LOFREE_RNG_HPP
