#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace psica {

// SplitMix64 finalizer; used to derive independent sub-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the sub-stream identified by `tags` under `seed`. Streams for
/// different tag tuples are statistically independent, which lets parallel
/// work units draw the same numbers regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(seed);
  for (auto t : tags) h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream-id tags so that the forest, sampler and simulator never share a stream.
enum class StreamTag : std::uint64_t {
  forest_tree = 1,
  method1_fit = 2,
  method2_fit = 3,
  method2_draw = 4,
  simulate = 5,
  evaluate = 6,
  replicate = 7,
};

class RandomStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  RandomStream derive(std::initializer_list<std::uint64_t> tags) const {
    return RandomStream(derive_seed(seed_, tags));
  }

  std::uint64_t seed() const { return seed_; }
  engine_type& engine() { return engine_; }

  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  // Uniform on {0, ..., n-1}; n must be positive.
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

 private:
  std::uint64_t seed_;
  engine_type engine_;
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace psica
