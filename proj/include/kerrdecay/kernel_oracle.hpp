// Radial fundamental-solution quadratures for Box v = H, v[0] = 0 on
// Minkowski space with H supported in the forward cone:
//   r v(t, r) = 1/2 int_{D_tr} rho H(s, rho) ds drho,
//   D_tr = {0 <= s - rho <= t - r, t - r <= s + rho <= t + r}.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kerrdecay/numerics.hpp"

namespace kerrdecay {

/// Source as a function of (s, rho); only rho <= s is ever evaluated.
using RadialSource = std::function<double(double, double)>;

/// <rho>^-beta <s>^-gamma_w <s - rho>^-eta, with <x> = sqrt(2 + x^2).
struct WeightedSource {
  double beta = 3.0;
  double gamma_w = 1.0;
  double eta = 2.0;

  double operator()(double s, double rho) const;
};

/// eta - delta - 2 for eta < 1, -1 for eta > 1. Throws ParameterError at eta = 1.
double eta_tilde(double eta, double delta_small);
/// 1 - eta for eta < 1, 0 for eta > 1.
double mu_of_eta(double eta);

struct RectResult {
  double v = 0.0;
  double error = 0.0;  // estimated absolute error of v
};

/// v(t, r) by tensor-product adaptive Gauss-Kronrod in the null coordinates
/// u = s - rho, w = s + rho, relative tolerance `rel_tol`. At r = 0 the limit
/// d_r (r v) = 1/2 int_0^t rho H((t + u)/2, (t - u)/2) du is used.
/// Throws DomainError unless t >= r >= 0, or if the integral is not finite.
RectResult rect_solution(double t, double r, const RadialSource& H, double rel_tol = 1e-10);

struct DyadicRow {
  double R = 0.0;          // cell R <= rho < 2R; the first cell is [0, 2) with R = 1
  bool near = false;       // case R < (t - r)/8
  double integral = 0.0;   // int_{D_tr^R} rho H ds drho
  double predicted = 0.0;  // R^(3-beta) <t-r>^(-1-eta) (near) or R^(1-beta) <t-r>^mu(eta)
  double ratio = 0.0;
};

/// Per-scale integrals of the weighted source over D_tr.
std::vector<DyadicRow> dyadic_breakdown(double t, double r, const WeightedSource& source,
                                        double rel_tol = 1e-11);

struct XiPoint {
  double t = 0.0;
  double r = 0.0;
  double v = 0.0;
  double xi = 0.0;
};

struct BoundReport {
  std::string name;
  double exponent = 0.0;  // power of <t - r> (or t - r) in the weight
  std::vector<XiPoint> points;
  std::vector<double> decade_start;  // 10, 100, ...
  std::vector<double> decade_sup;
  double sup = 0.0;
  // Per-decade sups are non-increasing from the decade starting at t = 100 on.
  bool non_increasing = false;
};

/// Log-spaced times, `per_decade` points per decade including both ends.
std::vector<double> log_times(double t0, double t1, unsigned per_decade);

/// Xi = |v| <r> <t-r>^(beta + eta~) for the weighted source with gamma_w = 1.
/// Throws ParameterError unless 1 < beta <= 3, eta != 1, gamma_w = 1.
BoundReport verify_weighted_source_bound(const WeightedSource& source, double delta_small,
                           const std::vector<double>& times,
                           const std::vector<double>& r_over_t);

/// Source <t - r>^(1/2) / <t> g(r) with g = scale * b((r - 2)/1) / Z, b the
/// standard bump and Z = int r^(gamma-1) b dr, so the weighted radial mass
/// int r^(gamma-1) g dr equals `scale`. Xi_2 = |v| <r> (t - r)^(gamma - 3/2).
/// Throws ParameterError unless gamma < 2.
BoundReport verify_compact_source_bound(double gamma, double scale, const std::vector<double>& times,
                           const std::vector<double>& r_over_t);

std::string kernel_csv(const BoundReport& report);

}  // namespace kerrdecay
