// Small numerical toolkit shared by the geometry, operator and oracle modules.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kerrdecay {

/// Input outside the domain where a map or stencil is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Parameter outside the admissible range of a model.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace num {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Japanese bracket <x> = sqrt(2 + x^2).
inline double bracket(double x) { return std::sqrt(2.0 + x * x); }

/// Integer power by repeated squaring; exact for small exponents.
inline double ipow(double x, int p) {
  double result = 1.0;
  double base = x;
  unsigned e = static_cast<unsigned>(p < 0 ? -p : p);
  while (e != 0U) {
    if ((e & 1U) != 0U) result *= base;
    base *= base;
    e >>= 1U;
  }
  return p < 0 ? 1.0 / result : result;
}

/// Pairwise (cascade) summation. Fixed evaluation order for a given length.
double pairwise_sum(std::span<const double> values);

// Smooth ramps on [0, 1]: 0 below, 1 above.
// smoothstep5 is C^2 (quintic), smoothstep9 is C^4 (degree 9).
double smoothstep5(double x);
double smoothstep5_d1(double x);
double smoothstep5_d2(double x);
double smoothstep9(double x);
double smoothstep9_d1(double x);
double smoothstep9_d2(double x);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b] with absolute tolerance, floored
/// at 1e-14 relative to the L1 norm.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, unsigned max_depth = 22);

/// Bracketed root of a continuous function with f(lo)*f(hi) <= 0.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double x_tol);

// Centered finite-difference weights, offsets -k..k.
inline constexpr double kD1o4[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
inline constexpr double kD2o4[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
inline constexpr double kD1o6[7] = {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0,
                                    45.0 / 60, -9.0 / 60, 1.0 / 60};

/// 4th-order centered first derivative of f at x with step h.
template <class F>
double diff4(F&& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

/// 6th-order centered first derivative of f at x with step h.
template <class F>
double diff6(F&& f, double x, double h) {
  double s = 0.0;
  for (int k = -3; k <= 3; ++k) {
    if (k != 0) s += kD1o6[k + 3] * f(x + k * h);
  }
  return s / h;
}

/// Piecewise cubic Hermite interpolant with Fritsch-Carlson limiting;
/// preserves monotonicity of monotone data.
class MonotoneSpline {
 public:
  MonotoneSpline() = default;
  MonotoneSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
};

/// Lagrange interpolation through `count` nodes of a uniform grid starting at
/// index `first` (grid x_i = x0 + i*h).
double lagrange_uniform(std::span<const double> values, double x0, double h,
                        std::size_t first, std::size_t count, double x);

/// FNV-1a 64-bit hash, used for config and artifact checksums.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t value);

}  // namespace num
}  // namespace kerrdecay
