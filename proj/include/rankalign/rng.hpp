#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace rankalign {

/// SplitMix64 (Steele, Lea & Flood 2014). Every seeded shuffle and draw in the
/// toolkit goes through this generator so that identical seeds reproduce
/// identical splits, batches and resamples in any implementation.
///
/// Algorithm identifier: "splitmix64". State advances by 0x9E3779B97F4A7C15;
/// output is the standard mix with shifts 30/27/31 and multipliers
/// 0xBF58476D1CE4E5B9 / 0x94D049BB133111EB.
class SplitMix64 {
  __extension__ using wide = unsigned __int128;

 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t operator()() noexcept { return next(); }
  static constexpr std::uint64_t min() noexcept { return 0; }
  static constexpr std::uint64_t max() noexcept { return ~std::uint64_t{0}; }

  /// Integer in [0, bound) by Lemire's multiply-high reduction (no rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<wide>(next()) * bound) >> 64);
  }

  /// Double in [0, 1) from the top 53 bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Independent stream for (seed, index): the index is mixed through one
  /// SplitMix64 output so nearby indices give unrelated states.
  static SplitMix64 stream(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 mixer(seed ^ (index * 0xD1B54A32D192ED03ULL));
    return SplitMix64(mixer.next());
  }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates, descending i from n-1 to 1, j = below(i+1).
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) noexcept {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace rankalign
