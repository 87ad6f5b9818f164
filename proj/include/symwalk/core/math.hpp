#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace symwalk {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

// Wraps to (-pi, pi]. Odd except at the branch point: wrap(-pi) = pi.
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a <= 0.0) a += kTwoPi;
  return a - kPi;
}

// Wraps to [0, 2*pi).
inline double wrap_phase(double p) {
  p = std::fmod(p, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

inline double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_finite(const Vec& v, const std::string& what) {
  if (!v.allFinite())
    throw std::invalid_argument("non-finite value in " + what);
}

// FNV-1a over raw bytes; used to detect accidental parameter mutation.
inline std::uint64_t fnv1a_digest(const double* data, std::size_t n) {
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t digest(const Vec& v) {
  return fnv1a_digest(v.data(), static_cast<std::size_t>(v.size()));
}

}  // namespace symwalk
