#pragma once

#include <cstdint>

namespace thinlab {

// Small deterministic generator (splitmix64). We avoid std distributions on
// purpose: their output is implementation-defined and the sweep reports are
// required to be byte-identical for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform in (-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }

  // Independent substream, e.g. one per ensemble member.
  Rng fork(std::uint64_t stream) const {
    Rng r(state_ ^ (0x2545f4914f6cdd1dull * (stream + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::uint64_t state_;
};

}  // namespace thinlab
