#pragma once

#include <cstdint>

namespace confop {

// Counter-based generator: draw k of stream `seed` is splitmix64(seed + k*PHI).
// Stateless, splittable by trial index, identical across platforms.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  // uniform in [-0.5, 0.5)
  double uniform() {
    std::uint64_t v = splitmix64(seed_ + counter_++ * 0x9e3779b97f4a7c15ULL);
    return double(v >> 11) * (1.0 / 9007199254740992.0) - 0.5;
  }

  std::uint64_t next_seed() { return splitmix64(seed_ + counter_++ * 0x9e3779b97f4a7c15ULL); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace confop
