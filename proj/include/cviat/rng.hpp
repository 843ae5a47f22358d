// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cviat {

/// Identifies one independent random stream under a master seed.
struct StreamId {
  std::uint64_t iteration = 0;
  std::uint64_t index = 0;

  bool operator==(const StreamId&) const = default;
};

// Reserved stream indices for draws that are not tied to a document.
inline constexpr std::uint64_t kBatchStream = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kInitStream = kBatchStream - 1;
inline constexpr std::uint64_t kSplitStream = kBatchStream - 2;
inline constexpr std::uint64_t kEvalStream = kBatchStream - 3;
inline constexpr std::uint64_t kSynthStream = kBatchStream - 4;

/// Counter-keyed xoshiro256** generator. The state is a pure function of
/// (seed, stream id), so parallel document chains draw the same numbers no
/// matter which worker runs them. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamId id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  StreamId id() const { return id_; }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::array<std::uint64_t, 4> s_;
};

}  // namespace cviat
