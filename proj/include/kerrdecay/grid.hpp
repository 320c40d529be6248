// Uniform grids for the 1+1 and 2+1 engines.
#pragma once

#include <cstddef>

#include "kerrdecay/numerics.hpp"

namespace kerrdecay {

/// Uniform grid in the tortoise coordinate.
struct Grid1D {
  double x_min = 0.0;
  double x_max = 0.0;
  std::size_t n = 0;

  double h() const { return (x_max - x_min) / static_cast<double>(n - 1); }
  double x(std::size_t i) const { return x_min + h() * static_cast<double>(i); }
};

/// Uniform r grid from the excision radius, cell-centered theta grid on (0, pi).
struct Grid2D {
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t n_r = 0;
  std::size_t n_theta = 0;

  double h_r() const { return (r_max - r_min) / static_cast<double>(n_r - 1); }
  double h_theta() const { return num::kPi / static_cast<double>(n_theta); }
  double r(std::ptrdiff_t i) const { return r_min + h_r() * static_cast<double>(i); }
  double theta(std::ptrdiff_t j) const { return h_theta() * (static_cast<double>(j) + 0.5); }
  std::size_t size() const { return n_r * n_theta; }
  std::size_t idx(std::size_t i, std::size_t j) const { return i * n_theta + j; }
};

}  // namespace kerrdecay
