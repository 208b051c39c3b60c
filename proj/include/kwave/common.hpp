#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace kwave {

/// Gas constant of the monatomic model; with it e = theta and R*theta = 1 at theta = 3/2.
inline constexpr double kGasConstant = 2.0 / 3.0;
inline constexpr double kPi = std::numbers::pi;

/// Invalid user configuration (maps to CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: degenerate moments, NaN, negativity, non-convergence (exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a formula (e.g. theta <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// Japanese bracket <v> = sqrt(1 + |v|^2).
inline double bracket(const Vec3& v) { return std::sqrt(1.0 + norm2(v)); }

namespace log {
/// Warnings go to stderr unless silenced (tests silence the expected ones).
void warn(const std::string& message);
void set_quiet(bool quiet);
bool quiet();
}  // namespace log

}  // namespace kwave
