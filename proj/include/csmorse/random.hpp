#pragma once

// Seeded random streams. Every consumer derives its own stream from the scenario seed with
// `derive_seed(seed, "<stream name>", index)`, so results never depend on the order in which
// parallel workers run.
//
// Stream names in use:
//   "manifold-sample"   shard index      manifold point sampling
//   "cs-probe"          0 / stratum mask CS-condition probes
//   "stratum-sample"    shard index      points of one stratum (nested under a caller's seed)
//   "search-start"      subset * 2^20 + start   multistart initial points
//   "census"            0 / stratum mask stratum census samples and local PCA clouds
//   "frontier"          stratum mask     perturb-and-project frontier probes
//   "fiber"             level index      fiber candidates

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace csmorse {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(base ^ h) + index);
}

/// mt19937_64 with portable uniform and normal draws (the standard distributions are
/// implementation-defined, which would make outputs differ between standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace csmorse
