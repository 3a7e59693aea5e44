#pragma once

#include <cstdint>
#include <utility>

namespace shearflow {

// Counter-based pseudorandom generator.  Output i is a strong 64-bit mix of
// (seed, i), so a stream is fully determined by its seed and the number of
// draws consumed: reruns replay bit-identically, and a consumer can be
// repositioned with set_counter.  The mixer is the splitmix64 finalizer,
// which passes BigCrush as a counter-mode generator and is more than enough
// for Monte Carlo sampling.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // independent standard normal pair (Box-Muller); consumes exactly two draws
  std::pair<double, double> gaussian_pair();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

} // namespace shearflow
