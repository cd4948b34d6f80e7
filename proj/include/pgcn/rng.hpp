#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pgcn {

// Counter-based PRNG. Draw i of a stream with key k is
//   mix64(k + (i + 1) * 0x9e3779b97f4a7c15)
// i.e. the SplitMix64 finalizer over an additive golden-gamma counter.
// Streams derive by hashing (key, id), so every draw is addressable by
// (key, counter) and reproducible across platforms and iteration order.
class Rng {
 public:
  explicit Rng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Stateless access: draw `counter` of stream `key`.
  static std::uint64_t at(std::uint64_t key, std::uint64_t counter) {
    return mix64(key + (counter + 1) * 0x9e3779b97f4a7c15ULL);
  }

  static double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0,1), 53 bits
  }

  std::uint64_t next_u64() { return at(key_, counter_++); }

  double next_double() { return to_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Box-Muller, cosine branch only: each gaussian consumes exactly two draws,
  // keeping the stream counter-addressable.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Independent derived stream; id provides the split point.
  Rng stream(std::uint64_t id) const { return Rng(mix64(key_ ^ mix64(id + 0xd1b54a32d192ed03ULL))); }

  std::uint64_t key() const { return key_; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates with the portable generator (std::shuffle is
// implementation-defined and would break cross-platform determinism).
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace pgcn
