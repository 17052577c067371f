#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace maltml {

// One splitmix64 round; used to hash (seed, stream id) paths into engine seeds.
inline std::uint64_t mix_seed(std::uint64_t state, std::uint64_t salt) {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ULL + salt;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named substream ids. Every random draw in the project is derived from a
// master seed plus a (purpose, index...) path, so changing one consumer
// (e.g. the family batch size) never perturbs draws made for another purpose.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kFamilies = 2;
inline constexpr std::uint64_t kTasks = 3;
inline constexpr std::uint64_t kSamples = 4;
inline constexpr std::uint64_t kEval = 5;
}  // namespace streams

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [lo, hi) from the top 53 bits; avoids the
  // implementation-defined behaviour of std::uniform_real_distribution.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

 private:
  std::mt19937_64 engine_;
};

// Derive an independent stream from a master seed and a purpose/index path.
inline Rng derive_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix_seed(master, 0x6d61746c6d6cULL);  // "maltml"
  for (std::uint64_t id : path) s = mix_seed(s, id);
  return Rng(s);
}

}  // namespace maltml
