#pragma once

#include <cstdint>

namespace hpn {

// splitmix64; used both as a PRNG and a deterministic hash-mixer so results
// do not depend on the standard library's distribution internals.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {
    // warm up so tiny seeds do not produce correlated first draws
    splitmix64(state_);
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0,1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace hpn
