#pragma once

#include <cstdint>
#include <initializer_list>

namespace saarb::rng {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Splittable generator: a stream is identified by a 64-bit state derived by
// hashing (seed, key...) so that parallel and serial runs draw identical
// numbers for the same logical stream.
class Stream {
 public:
  explicit Stream(std::uint64_t state) : state_(state) {}

  // Order-sensitive fold: derive(s, {a, b}) != derive(s, {b, a}).
  static Stream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = mix64(seed + kGoldenGamma);
    for (std::uint64_t k : keys) s = mix64(s + kGoldenGamma + mix64(k + kGoldenGamma));
    return Stream(s);
  }

  std::uint64_t next_u64() {
    state_ += kGoldenGamma;
    return mix64(state_);
  }

  // Uniform on [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1); safe for inverse-CDF transforms.
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

 private:
  std::uint64_t state_;
};

}  // namespace saarb::rng
