#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

namespace advdet {

// 64-bit FNV-1a. Pinned here (instead of std::hash) so feature indices and
// derived seeds are stable across compilers and builds.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t value, std::uint64_t h) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffull;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer, applied on top of FNV so nearby seeds diverge.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stable seed derivation: every independent random stream in the toolkit is
// keyed by (parent seed, label[, index]) so results do not depend on batch
// order or thread count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(fnv1a64(label, fnv1a64_u64(seed, 14695981039346656037ull)));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                 std::uint64_t index) {
  return mix64(fnv1a64_u64(
      index, fnv1a64(label, fnv1a64_u64(seed, 14695981039346656037ull))));
}

// mt19937_64 with explicit draw helpers. The engine's output sequence is
// pinned by the standard; the helpers below avoid std::*_distribution, whose
// results are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform double in [0, 1), 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t umax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = umax - (umax % n + 1) % n;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r > limit);
    return r % n;
  }

  // Standard normal via Box-Muller (no cached spare, so the draw count per
  // call is fixed and reproducible).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace advdet
