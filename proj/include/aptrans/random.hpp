#pragma once

// Counter-based random streams.
//
// A stream is identified by (seed, stream id); the n-th draw of a stream is a
// pure function of (seed, stream id, n). Simulations give each obligor its own
// stream so results do not depend on portfolio size or thread scheduling.

#include <cstdint>
#include <limits>

namespace aptrans {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream-tag constants keep the portfolio, path and sampling draws apart.
enum class StreamDomain : std::uint64_t {
  portfolio = 0x01,
  paths = 0x02,
  sampling = 0x03,
  jitter = 0x04,
  generic = 0x05,
};

class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream,
            StreamDomain domain = StreamDomain::generic) noexcept
      : key_(mix64(mix64(seed ^ kGolden) ^ mix64(stream + kGolden * static_cast<std::uint64_t>(domain)))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ + kGolden * (++counter_)); }

  /// Uniform variate strictly inside (0, 1), 53-bit resolution.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace aptrans
