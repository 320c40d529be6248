// Vector field multipliers: energy-momentum tensor, contracted currents
// P[g, X, q, m] and a finite-difference check of their divergence identity.
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "kerrdecay/geometry.hpp"

namespace kerrdecay {

using Vec4 = std::array<double, 4>;

/// X = chi r^gamma d_v, q = chi r^(gamma-1) (1 - 2M/r),
/// m = chi gamma (1 - delta) r^(gamma-2) dv, with d_v = d_t + d_rtilde and
/// chi the C^4 ramp from 0 at R2/2 to 1 at R2.
class MultiplierTriple {
 public:
  /// Throws ParameterError unless 0 < gamma < 2, delta > 0 and
  /// (1 - delta)^2 - 2 (1 - gamma delta) < 0.
  MultiplierTriple(double gamma, double delta, double M = 1.0, double R2 = 20.0);

  /// (1 - delta)^2 - 2 (1 - gamma delta); negative for admissible pairs.
  static double admissibility(double gamma, double delta);

  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  double M() const { return M_; }
  double R2() const { return R2_; }

  double chi(double r) const;
  double dchi(double r) const;

  /// Upper components of X in the t-tilde chart.
  Vec4 X(const RadialMaps& maps, double r) const;
  double q(double r) const;
  /// Lower components of dq.
  Vec4 dq(double r) const;
  /// Lower components of m.
  Vec4 m(const RadialMaps& maps, double r) const;

 private:
  double gamma_, delta_, M_, R2_;
};

/// Q_ab = d_a phi d_b phi - 1/2 g_ab (d phi)^2.
using Sym4 = std::array<std::array<double, 4>, 4>;
Sym4 energy_momentum(const MetricPoint& point, const Vec4& dphi);

struct CurrentPoint {
  Vec4 P{};  // lower components
  Sym4 Q{};
};

/// P_a = Q_ab X^b + q phi d_a phi - 1/2 (d_a q) phi^2 + 1/2 m_a phi^2 for
/// arbitrary X (upper), q, dq (lower), m (lower).
CurrentPoint current(const MetricPoint& point, const Vec4& X, double q, const Vec4& dq,
                     const Vec4& m, double phi, const Vec4& dphi);

/// Current of the triple at the point (r taken from point.x[1]).
CurrentPoint contracted_current(const MetricPoint& point, const RadialMaps& maps,
                                const MultiplierTriple& triple, double phi, const Vec4& dphi);

/// Scalar test field with analytic gradient in (t, r, azimuth, theta).
struct TestField {
  std::string name;
  std::function<double(const Vec4&)> value;
  std::function<Vec4(const Vec4&)> gradient;
};

TestField constant_field(double c);
/// Cubic polynomial in all four coordinates around a base point.
TestField polynomial_field(const Vec4& base);
/// Product of a travelling wave in (t, r) with smooth angular factors.
TestField oscillatory_field();

struct DivergenceCheck {
  double lhs = 0.0;       // div P by 4th-order differences of sqrt|g| P^a
  double rhs = 0.0;       // Box phi (X phi + q phi) + Q[g, X, q, m]
  double residual = 0.0;  // |lhs - rhs|
  // Same check with the coefficient of (div m) phi^2 taken as 1 instead of 1/2.
  double residual_unit_m = 0.0;
};

/// Compares the divergence of the current of `triple` at `probe` with the
/// right-hand side of the identity. The right-hand side uses the coordinate
/// deformation formula with metric derivatives from 6th-order differences
/// at a fine fixed step. Throws DomainError if the stencil leaves
/// r >= R2 or theta in (0, pi).
DivergenceCheck divergence_residual(const KerrParams& params, const RadialMaps& maps,
                                    const MultiplierTriple& triple, const TestField& field,
                                    const Vec4& probe, double h);

struct EnergyIntegrand {
  double model = 0.0;  // r^gamma (|d_v phi|^2 + |angular|^2 + phi^2 / r^2)
  double minus_pairing = 0.0;  // -<d t-tilde, P> = -g^{0b} P_b
};

EnergyIntegrand weighted_energy_integrand(const MetricPoint& point, const RadialMaps& maps,
                                          const MultiplierTriple& triple, double phi,
                                          const Vec4& dphi);

struct MultiplierCheckRow {
  double gamma = 0.0;
  double delta = 0.0;
  double probe_r = 0.0;
  double h = 0.0;
  double residual = 0.0;
  double order_estimate = 0.0;  // log2 of the ratio to the previous (2h) row; 0 on the first
};

/// Residuals at theta = 1.1, azimuth 0.4, t = 0.3 for each radius and each
/// step of `steps` (halving sequence).
std::vector<MultiplierCheckRow> multiplier_convergence(const KerrParams& params,
                                                       const RadialMaps& maps,
                                                       const MultiplierTriple& triple,
                                                       const TestField& field,
                                                       const std::vector<double>& radii,
                                                       const std::vector<double>& steps);

std::string multiplier_csv(const std::vector<MultiplierCheckRow>& rows);

}  // namespace kerrdecay
