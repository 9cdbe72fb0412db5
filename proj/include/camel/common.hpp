#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace camel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when an API is used outside its contract (bad call order, bad arguments).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown when vector/matrix dimensions do not chain.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Rng = std::mt19937_64;

/// Derives an independent generator seed from a run seed and a fixed stream label.
/// Streams with different labels never share state, so consuming draws on one
/// stream (e.g. evaluation) cannot perturb another (e.g. exploration noise).
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ull;
  }
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::string_view label) {
  return Rng{stream_seed(seed, label)};
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace camel
