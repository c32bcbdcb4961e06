#pragma once

#include <cstdint>
#include <limits>

namespace tandem {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based random stream. The output at position k is a pure function
/// of (key, k), so any draw can be regenerated from its coordinates and
/// independent streams never share state.
///
/// Satisfies UniformRandomBitGenerator, so it can drive standard and Boost
/// distributions directly.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  constexpr RandomStream() noexcept = default;
  constexpr explicit RandomStream(std::uint64_t key,
                                  std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  /// Stream addressed by up to four coordinates, e.g. (seed, run, queue, job).
  static constexpr RandomStream keyed(std::uint64_t seed, std::uint64_t a,
                                      std::uint64_t b = 0,
                                      std::uint64_t c = 0) noexcept {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ a);
    k = splitmix64(k ^ (b + 0x632BE59BD9B4E019ULL));
    k = splitmix64(k ^ (c + 0x8CB92BA72F3D8DD7ULL));
    return RandomStream(k);
  }

  /// Child stream; children with different tags are independent of each other
  /// and of the parent.
  constexpr RandomStream split(std::uint64_t tag) const noexcept {
    return RandomStream(splitmix64(key_ ^ splitmix64(tag + 0xD1B54A32D192ED03ULL)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return splitmix64(key_ ^ splitmix64(counter_++));
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform01() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace tandem
