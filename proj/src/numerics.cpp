#include "kerrdecay/numerics.hpp"

#include <algorithm>
#include <cstdio>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>

namespace kerrdecay::num {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kBlock = 64;
  if (values.size() <= kBlock) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double smoothstep5(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep5_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double y = x * (1.0 - x);
  return 30.0 * y * y;
}

double smoothstep5_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
}

double smoothstep9(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double x5 = x * x * x * x * x;
  // Cancellation near x = 1 can overshoot by a few ulps.
  return std::min(1.0, x5 * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x)))));
}

double smoothstep9_d1(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double y = x * (1.0 - x);
  return 630.0 * y * y * y * y;
}

double smoothstep9_d2(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double y = x * (1.0 - x);
  return 2520.0 * y * y * y * (1.0 - 2.0 * x);
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, unsigned max_depth) {
  QuadResult out;
  if (a == b) return out;
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  // Boost's tolerance is relative to the L1 norm; a coarse pass estimates it.
  double l1 = 0.0;
  double err = 0.0;
  GK::integrate(f, a, b, 3, 1e-3, &err, &l1);
  const double rel = std::max(abs_tol / std::max(l1, 1e-300), 1e-14);
  out.value = GK::integrate(f, a, b, max_depth, rel, &out.error, &l1);
  return out;
}

double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double x_tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw DomainError("find_root: interval does not bracket a root");
  std::uintmax_t max_iter = 200;
  auto tol = [x_tol](double x0, double x1) { return std::abs(x1 - x0) <= x_tol; };
  const auto bracket =
      boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

MonotoneSpline::MonotoneSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneSpline: need >= 2 nodes");
  std::vector<double> delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dx = x_[i + 1] - x_[i];
    if (!(dx > 0.0)) throw std::invalid_argument("MonotoneSpline: nodes must increase");
    delta[i] = (y_[i + 1] - y_[i]) / dx;
  }
  d_.assign(n, 0.0);
  d_[0] = delta[0];
  d_[n - 1] = delta[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      const double w1 = 2.0 * h1 + h0;
      const double w2 = h1 + 2.0 * h0;
      d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
  }
}

double MonotoneSpline::operator()(double x) const {
  if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front());
  if (x >= x_.back()) return y_.back() + d_.back() * (x - x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
         (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
}

double lagrange_uniform(std::span<const double> values, double x0, double h,
                        std::size_t first, std::size_t count, double x) {
  if (first + count > values.size()) throw DomainError("lagrange_uniform: stencil out of range");
  const double s = (x - x0) / h - static_cast<double>(first);
  double result = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    double w = 1.0;
    for (std::size_t k = 0; k < count; ++k) {
      if (k != j) w *= (s - static_cast<double>(k)) / (static_cast<double>(j) - static_cast<double>(k));
    }
    result += w * values[first + j];
  }
  return result;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace kerrdecay::num
