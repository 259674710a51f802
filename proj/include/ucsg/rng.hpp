#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ucsg/errors.hpp"

namespace ucsg {

inline uint64_t splitmix64(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ with splitmix64 seeding.  Self-contained so that runs
/// are bit-reproducible across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  uint64_t next() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  int uniform_int(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n)) % n;
  }

  /// Index drawn from a probability vector (assumed to sum to ~1).
  int categorical(const double* p, int n) {
    double u = uniform();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return n - 1;  // guards against round-off in the tail
  }

  /// Exponential(1) variate; uniform() < 1 so the log is finite.
  double exponential() { return -std::log1p(-uniform()); }

  /// Flat Dirichlet row (normalized exponentials), written into out[0..n).
  void dirichlet_flat(double* out, int n) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = exponential();
      sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
  }

  /// Deterministic independent substream for a given tag.
  Rng derive(uint64_t tag) const {
    uint64_t s = seed_;
    uint64_t base = splitmix64(s);
    uint64_t mixed = base ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
    return Rng(mixed);
  }

  uint64_t seed() const { return seed_; }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<uint64_t, 4> state_{};
  uint64_t seed_;
};

}  // namespace ucsg
