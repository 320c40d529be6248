// Wave operator coefficients: the spherically reduced Schwarzschild operator,
// the axisymmetric Kerr operator on t-tilde slices, and the conjugated operator.
#pragma once

#include <string>
#include <vector>

#include "kerrdecay/geometry.hpp"
#include "kerrdecay/grid.hpp"

namespace kerrdecay {

/// Regge-Wheeler potential (1 - 2M/r)(l(l+1)/r^2 + 2M/r^3) for psi = r phi.
double rw_potential(double M, double r, int ell = 0);

/// Same potential from f = 1 - 2M/r and r, for use when r - 2M underflows.
double rw_potential_from_f(double M, double r, double f, int ell = 0);

/// Power nonlinearity. sign = +1 means Box phi = +phi^p with signature
/// (-+++), which is defocusing.
struct Nonlinearity {
  int p = 3;
  int sign = 1;
  bool enabled = true;
};

void validate(const Nonlinearity& nl);

/// sign * phi^p (zero when disabled).
inline double apply_nonlinearity(const Nonlinearity& nl, double phi) {
  return nl.enabled ? static_cast<double>(nl.sign) * num::ipow(phi, nl.p) : 0.0;
}

/// Coefficients of an axisymmetric operator in (t, r, theta):
///   A^tt u_tt + 2 A^tr u_tr + A^rr u_rr + A^thth u_thth
///     + b^t u_t + b^r u_r + b^th u_th + c u.
struct WaveOpCoeffs {
  Chart chart = Chart::TtildeStar;
  double Att = 0.0, Atr = 0.0, Arr = 0.0, Athth = 0.0;
  double bt = 0.0, br = 0.0, bth = 0.0;
  double c = 0.0;
};

/// Box_K on the t-tilde chart at (r, theta); b by 6th-order differencing of
/// the densities sqrt|g| g^{ab} with steps (h_r, h_theta). The density uses
/// the signed sin(theta), so stencils may cross the axis.
WaveOpCoeffs axisym_coeffs(const KerrParams& params, const RadialMaps& maps, double r,
                           double theta, double h_r = 1e-3, double h_theta = 1e-3);

/// Closed-form b coefficients of Box_K on the t-tilde chart (test oracle).
WaveOpCoeffs axisym_coeffs_closed_form(const KerrParams& params, const RadialMaps& maps,
                                       double r, double theta);

/// Conjugated operator P u = c F^{-1} Box(F u) with c = 1/(-g^tt) and
/// F = (-g^tt)^{-1/2} |g_cart|^{-1/4}; divergence form with respect to the
/// Lebesgue density of x = rtilde * omega, plus the potential V in c.
WaveOpCoeffs conjugated_coeffs(const KerrParams& params, const RadialMaps& maps, double r,
                               double theta, double h_r = 1e-3, double h_theta = 1e-3);

/// Potential of the conjugated operator, V = c F^{-1} Box F.
double conjugation_potential(const KerrParams& params, const RadialMaps& maps, double r,
                             double theta);

/// Coefficient tables on a 2+1 grid.
struct AxisymTables {
  Grid2D grid;
  std::vector<double> Att, Atr, Arr, Athth, bt, br, bth;
  /// 1 / Att, cached for the right-hand side.
  std::vector<double> inv_Att;
};

AxisymTables build_axisym_tables(const KerrParams& params, const RadialMaps& maps,
                                 const Grid2D& grid);

/// Radial characteristic speeds dr/dt of Box_K at a point, sorted ascending.
std::pair<double, double> radial_characteristic_speeds(const MetricPoint& point);

struct ConjugationRow {
  double r = 0.0;
  double r3_glr = 0.0;       // r^3 |gh^thth - 1/rtilde^2| for a = 0
  double r3_V = 0.0;         // r^3 |V|, sup over theta
  double r2_gsr_max = 0.0;   // r^2 max |gh_K - gh_S|, sup over theta and components
};

struct ConjugationReport {
  std::vector<ConjugationRow> rows;
  double sup_r3_glr = 0.0;
  double sup_r3_V = 0.0;
  double sup_r2_gsr = 0.0;
  // Largest ratio of consecutive per-decade sups of (r^3 |g_lr| / log(r/M),
  // r^3 |V|, r^2 |g_sr|); growth is flagged if it exceeds growth_limit.
  double worst_decade_growth = 0.0;
  double growth_limit = 1.5;
  bool flagged = false;
};

ConjugationReport conjugation_check(const KerrParams& params, const RadialMaps& maps,
                                    const std::vector<double>& sample_radii);

/// Second-order operator in divergence form on a doubly periodic box:
///   L u = w^{-1} d_i(w G^{ij} d_j u) + V u,
/// discretized the same way as the evolution operator (4th-order second
/// derivatives, 6th-order differencing of w G for first-order terms).
struct PeriodicBoxOperator {
  std::size_t nx = 0, ny = 0;
  double hx = 0.0, hy = 0.0;
  std::vector<double> w, Gxx, Gxy, Gyy, V;

  std::vector<double> apply(const std::vector<double>& u) const;
};

}  // namespace kerrdecay
