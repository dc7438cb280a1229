#pragma once

#include <cstdint>
#include <random>

namespace flora {

using Seed = std::uint64_t;

// splitmix64 finalizer; spreads nearby user seeds over the whole state space.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for an independent stream, e.g. one per party or per fold.
constexpr Seed derive_seed(Seed parent, std::uint64_t stream) {
  return mix_seed(parent ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Deterministic random source. Distribution code is routed through
// boost::random so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(mix_seed(seed)) {}

  // Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer on [0, n).
  std::uint64_t index(std::uint64_t n);
  double normal();
  double gamma(double shape);
  // Symmetric Beta(a, a); the two-class Dirichlet.
  double beta(double a);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace flora
