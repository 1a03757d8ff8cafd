#ifndef POCKETGEN_RNG_HPP_
#define POCKETGEN_RNG_HPP_

#include <cstdint>
#include <random>
#include <string>

#include "pocketgen/vec3.hpp"

namespace pocketgen {

// Mixes a parent seed with a stream index (splitmix64 finalizer). Used to give
// every record / sample / epoch its own reproducible stream regardless of the
// order in which workers pick them up.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Thin wrapper over std::mt19937_64. Distributions are computed here rather
// than with <random> distribution objects so results do not depend on the
// standard library implementation and the full state is the engine state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n);
  // Standard normal (Box-Muller, no cached second value).
  double normal();
  Vec3 normal3() { return {normal(), normal(), normal()}; }

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pocketgen

#endif  // POCKETGEN_RNG_HPP_
