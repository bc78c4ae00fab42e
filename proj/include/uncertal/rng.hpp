#pragma once

// Portable random streams. Every draw is defined bit-for-bit here so trial
// sequences are identical across compilers and standard libraries; nothing
// in this file touches <random>'s distributions.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <type_traits>
#include <utility>

#include "uncertal/errors.hpp"

namespace uncertal {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// FNV-1a over bytes; used to turn names into stream identifiers.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                       std::uint64_t hash = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  /// Independent stream derived from a base seed and a tuple of labels,
  /// e.g. Rng::stream(seed, "split", dataset, trial).
  template <class... Parts>
  [[nodiscard]] static Rng stream(std::uint64_t base_seed, const Parts&... parts) noexcept {
    std::uint64_t h = base_seed;
    (mix(h, parts), ...);
    return Rng(h);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform integer in [0, bound), unbiased (Lemire's multiply-and-reject).
  std::uint64_t uniform_index(std::uint64_t bound) {
    if (bound == 0) throw PreconditionError("uniform_index: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; one draw per call, the sine branch is discarded.
  double normal() noexcept {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// In-place Fisher-Yates shuffle using uniform_index.
  template <class RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = uniform_index(i);
      std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  static void mix(std::uint64_t& h, std::string_view s) noexcept {
    std::uint64_t sm = h ^ fnv1a64(s);
    h = splitmix64(sm);
  }
  static void mix(std::uint64_t& h, const char* s) noexcept { mix(h, std::string_view(s)); }
  template <class Int>
    requires std::is_integral_v<Int>
  static void mix(std::uint64_t& h, Int v) noexcept {
    std::uint64_t sm = h ^ (static_cast<std::uint64_t>(v) * 0xD1B54A32D192ED03ULL);
    h = splitmix64(sm);
  }

  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

}  // namespace uncertal
