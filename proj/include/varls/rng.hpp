#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace varls {

/// Counter-based random stream. A stream is a (key, counter) pair: the key is
/// derived from (master seed, purpose tag, index) and every draw hashes the
/// key with the next counter value. Copies replay the same sequence, and
/// `child` derives statistically independent substreams without touching the
/// parent, so two code paths can share an identical sample set.
///
/// All distributions are implemented here rather than through <random> so
/// that outputs are bit-identical across standard libraries.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0);

  static Stream from_key(std::uint64_t key) { return Stream(key); }

  Stream child(std::uint64_t index) const;
  Stream child(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();
  std::uint64_t operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; consumes two draws.
  double normal();
  /// Uniform integer in [0, n), unbiased. n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  explicit Stream(std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t hash_tag(std::string_view tag);

}  // namespace varls
