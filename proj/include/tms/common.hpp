#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace tms {

// Error raised when a layer, graph, or config violates a structural
// precondition. Carries the name of the offending field.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Error raised by file parsing and serialization (bad magic, truncation,
// hash mismatch, ...).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* field, const std::string& message) {
  if (!condition) throw ValidationError(field, message);
}

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

// SplitMix64 generator. Weight initialization derives one independent
// stream per tensor via split(seed, tensor_index), so adding or removing
// tensors elsewhere in a model does not perturb unrelated tensors.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static SplitMix64 split(std::uint64_t seed, std::uint64_t index) {
    return SplitMix64(detail::mix64(seed + 0x9E3779B97F4A7C15ull * (index + 1)));
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    return detail::mix64(z);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform in [-bound, bound].
  double next_symmetric(double bound) { return (2.0 * next_unit() - 1.0) * bound; }

  // Standard normal via Box-Muller.
  double next_gauss() {
    double u1 = 0.0;
    do {
      u1 = next_unit();
    } while (u1 <= 0.0);
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t state_;
};

}  // namespace tms
