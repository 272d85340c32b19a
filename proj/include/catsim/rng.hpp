#pragma once

#include <cstdint>

namespace catsim {

// splitmix64 (Steele/Lea/Flood).  Chosen over <random> engines because its
// output sequence is fully pinned by the algorithm, not by the standard
// library implementation, which keeps sampled results byte-identical across
// toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Derive an independent stream for a numbered task.  Streams for different
// task ids never share state, so results do not depend on how work is split
// across threads or on evaluation order.
inline SplitMix64 task_stream(std::uint64_t seed, std::uint64_t task) {
  SplitMix64 scramble(seed ^ (0xD1B54A32D192ED03ull * (task + 1)));
  return SplitMix64(scramble.next());
}

}  // namespace catsim
