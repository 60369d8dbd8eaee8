#pragma once

// Seed splitting: one 64-bit run seed feeds independent named streams.

#include <cstdint>
#include <random>
#include <string_view>

namespace lsnn {

namespace detail {
// FNV-1a, used only to turn a stream name into seed material.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

class SeedSplitter {
 public:
  explicit SeedSplitter(std::uint64_t seed) : seed_(seed) {}

  std::mt19937_64 stream(std::string_view name) const {
    const std::uint64_t tag = detail::fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace lsnn
