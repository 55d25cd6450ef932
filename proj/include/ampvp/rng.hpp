#pragma once

#include <cmath>
#include <cstdint>

namespace ampvp {

// Counter-based generator: every output is a stateless hash of
// (seed, stream, counter). Draws for distinct streams are independent for
// all practical purposes, and the value of a given draw never depends on
// the order in which other streams are consumed. Bit-exact reproducibility
// holds within one build of the library.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64() { return hash3(seed_, stream_, counter_++); }

  // uniform on (0,1]: 53-bit mantissa, never 0 so log() is safe
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // standard normal via Box-Muller; one spare is cached per instance
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    have_spare_ = true;
    return rad * std::cos(ang);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t hash3(std::uint64_t a, std::uint64_t b,
                             std::uint64_t c) {
    constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
    std::uint64_t h = mix(a + kGamma);
    h = mix(h ^ (b + 2 * kGamma));
    h = mix(h ^ (c + 3 * kGamma));
    return h;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// canonical stream id for the unordered matrix entry {i, j}; requires n < 2^32
inline std::uint64_t pair_stream(std::uint64_t i, std::uint64_t j) {
  if (i > j) {
    const std::uint64_t t = i;
    i = j;
    j = t;
  }
  return (i << 32) | j;
}

// stream ids for named per-object draws (start vectors, component picks, ...)
inline std::uint64_t named_stream(std::uint64_t tag, std::uint64_t index) {
  return CounterRng::mix(tag) ^ index;
}

}  // namespace ampvp
