#pragma once

#include <cstdint>
#include <limits>

namespace rangeal {

/// Counter-based random stream. The output sequence is a pure function of
/// (seed, sample_id, step), so per-sample streams give identical results no
/// matter how work is scheduled across threads.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t sample_id, std::uint64_t step)
      : seed_(seed), sample_id_(sample_id), step_(step) {
    state_ = mix(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) ^ sample_id) ^ step);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal draw (Box-Muller, no cached second value).
  double normal();

  /// Independent child stream keyed by `tag`; does not advance this stream.
  RngStream derive(std::uint64_t tag) const {
    return RngStream(mix(seed_ ^ (tag * 0xbf58476d1ce4e5b9ULL)), sample_id_, step_);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t sample_id() const { return sample_id_; }
  std::uint64_t step() const { return step_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t sample_id_;
  std::uint64_t step_;
  std::uint64_t state_ = 0;
};

}  // namespace rangeal
