#ifndef SBLAB_RNG_HPP
#define SBLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>

namespace sblab {

// Counter-based generator in the SplitMix64 family: the i-th output is a pure
// function of (key, i), so streams can be replayed and split without shared
// state. Distinct (seed, stream_id) pairs give statistically independent
// sequences.
namespace detail {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_pair(std::uint64_t a, std::uint64_t b) {
  return mix64(a + kGamma * mix64(b + kGamma));
}

}  // namespace detail

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream_id)
      : key_(detail::mix_pair(seed, stream_id)) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + (++counter_) * detail::kGamma); }

  // Uniform on (0,1); never returns 0 so logs are safe.
  double unit_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Marsaglia polar method; the second value of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * unit_double() - 1.0;
      v = 2.0 * unit_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * f;
    have_cached_ = true;
    return u * f;
  }

  void fill_normal(std::span<double> out) {
    for (double& x : out) x = normal();
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Replayable stream handle: (seed, stream_id) fully determines every draw.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  CounterRng rng() const { return CounterRng(seed, stream_id); }

  // Deterministic child stream; used to hand independent streams to replicas,
  // particles, grid sites, etc. without any shared RNG state.
  RngStream child(std::uint64_t tag) const {
    return RngStream{seed, detail::mix_pair(stream_id, tag)};
  }
  RngStream child(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return child(detail::mix_pair(tag_a, tag_b));
  }
};

}  // namespace sblab

#endif
