#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace socising {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) pair always yields the same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. A stream is fully determined by
/// (seed, stream id); the draw index is the low half of the Philox counter
/// and the stream id the high half, so streams never overlap and can be
/// created independently on any thread.
class RngStream {
 public:
  using result_type = std::uint64_t;
  static constexpr std::string_view algorithm = "philox4x32-10";

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  bool bernoulli(double p) { return uniform() < p; }
  /// Uniform integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  /// Child stream, deterministic in (this stream's identity, child index).
  RngStream split(std::uint64_t child) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace socising
