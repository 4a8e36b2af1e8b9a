#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace uor {

// splitmix64 finalizer; used for seeding and stream derivation.
std::uint64_t mix64(std::uint64_t x);

// Deterministic splittable random stream (xoshiro256** core).
//
// split(key) derives a child stream from the construction seed and the key
// only, independent of how much the parent has generated; fork() derives a
// child from the current state and advances it. All metric/training code
// assigns one stream per unit of work, so results do not depend on thread
// count or evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal (Box-Muller)
  // Index drawn proportionally to weights (nonnegative, not all zero).
  std::size_t categorical(std::span<const double> weights);

  Rng split(std::uint64_t key) const;
  Rng fork();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace uor
