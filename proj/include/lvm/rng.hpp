#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

#include "lvm/types.hpp"

namespace lvm {

/// Counter-based generator: the n-th draw is a SplitMix64 finalizer applied to
/// key + n * golden-gamma. Streams with different keys are independent, so
/// substreams can be derived from a seed and a stable label.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kGamma * ++counter_); }

  /// Independent stream derived from this generator's key and a label.
  Rng substream(std::string_view label) const;
  Rng substream(std::uint64_t index) const;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
  double normal();
  Vec normal_vector(Eigen::Index n);
  /// Index drawn from unnormalized non-negative weights.
  Eigen::Index categorical(const Vec& probs);

  std::uint64_t counter() const { return counter_; }

 private:
  Rng(std::uint64_t key, bool) : key_(key) {}
  static std::uint64_t mix(std::uint64_t z);
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lvm
