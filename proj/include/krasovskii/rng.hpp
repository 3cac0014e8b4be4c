#pragma once

#include <cstdint>
#include <string_view>

namespace krasovskii {

/// Counter-based generator: output k of stream (seed, name) is a pure function
/// of (seed, name, k). Streams with different names are independent, so every
/// consumer of randomness gets its own reproducible sequence from one seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream);

  /// Stream derived from this one, e.g. one per restart or ensemble member.
  [[nodiscard]] CounterRng substream(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box–Muller.
  double normal();
  /// Uniform integer in [lo, hi].
  std::int64_t integer(std::int64_t lo, std::int64_t hi);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

 private:
  CounterRng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace krasovskii
