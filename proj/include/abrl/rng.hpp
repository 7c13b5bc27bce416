#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>

#include "abrl/errors.hpp"

namespace abrl {

// splitmix64; used to derive independent per-repeat seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix_seed(base + 0x9e3779b97f4a7c15ULL * (index + 1));
}

// Seeded generator with hand-rolled distributions. std::* distributions keep
// hidden state and differ across library versions; everything here is a pure
// function of the mt19937_64 stream, so checkpoints can resume bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // uniform on [0, 1) with 53 random bits
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller, no cached spare
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // uniform integer in [0, n), rejection sampled
  int uniform_int(int n) {
    if (n <= 0) throw InvalidState("uniform_int: n must be positive");
    const std::uint64_t un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return static_cast<int>(v % un);
  }

  // index ~ probs (need not be exactly normalized; tail mass goes to the
  // last positive entry)
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
    const double u = uniform01() * probs.sum();
    double acc = 0.0;
    int last_positive = 0;
    for (int i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) last_positive = i;
      acc += probs[i];
      if (u < acc) return i;
    }
    return last_positive;
  }

  void save(std::ostream& os) const { os << engine_; }
  void load(std::istream& is) { is >> engine_; }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace abrl
