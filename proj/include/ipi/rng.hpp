#pragma once

#include <cstdint>
#include <random>

namespace ipi {

// Portable draw source for the simulator.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. Standard distributions are implementation-defined, so every
// conversion is spelled out here:
//   uniform()        = (x >> 11) * 2^-53, in [0, 1)
//   chance(p)        = uniform() < p
//   between(lo, hi)  = lo + x % (hi - lo + 1)
// where x is one raw 64-bit engine output per call.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return uniform() < p; }

  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo + 1;
    std::uint64_t x = next();
    return span == 0 ? x : lo + x % span;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ipi
