#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rhsim {

std::uint64_t splitmix64(std::uint64_t x);

/// Folds a list of integers into one well-mixed 64-bit seed. Order matters.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Seed of replica `k` of a run with base seed `base`. Independent of how many
/// replicas are run or in which order.
std::uint64_t replica_seed(std::uint64_t base, std::uint64_t k);

// Stream tags used with mix_seed so that different consumers of one replica
// seed never share a stream.
enum class Stream : std::uint64_t {
  Scenario = 0x5343454e,
  Subscriptions = 0x53554253,
  Placement = 0x504c4143,
  Destinations = 0x44455354,
  Travellers = 0x5452564c,
  Contacts = 0x434f4e54,
  Encounter = 0x454e4354,
  Hybrid = 0x48594252,
};

std::uint64_t stream_seed(std::uint64_t seed, Stream s, std::uint64_t index = 0);

/// mt19937_64 with distribution transforms written out here, so draws are
/// identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }
  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace rhsim
