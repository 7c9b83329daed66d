#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "cfisac/types.hpp"

namespace cfisac {

/// Derives a child seed from a parent seed, a purpose label and an index.
/// Children of distinct (purpose, index) pairs are decorrelated through
/// SplitMix64 finalization, so streams can be handed to workers in any order.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose, std::uint64_t index = 0);

/// Seedable random stream. All simulation randomness flows through these.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  RandomStream child(std::string_view purpose, std::uint64_t index = 0) const {
    return RandomStream(derive_seed(seed_, purpose, index));
  }

  std::uint64_t seed() const { return seed_; }

  double uniform() { return uniform_(engine_); }
  double normal() { return normal_(engine_); }

  /// CN(0, variance): independent real and imaginary parts of variance/2.
  cdouble complex_normal(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  CVec complex_normal_vector(Eigen::Index n, double variance = 1.0) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal(variance);
    return v;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cfisac
