// Energies and local energy norms evaluated from solver output.
#pragma once

#include <cstddef>
#include <vector>

#include "kerrdecay/operators.hpp"

namespace kerrdecay {

/// Per-point data of one time slice, in the form every norm consumes.
/// `weight` is the quadrature weight of the point including the volume
/// density, so sum_i weight_i f_i approximates the integral of f over the
/// slice.
struct PointwiseSlice {
  double time = 0.0;
  std::vector<double> weight;
  std::vector<double> r;        // areal radius
  std::vector<double> rtilde;   // hybrid radius, <r> = sqrt(2 + rtilde^2)
  std::vector<double> phi;
  std::vector<double> dt;       // time derivative of phi
  std::vector<double> grad2;    // squared spatial gradient of phi
  std::vector<double> dv;       // (d_t + d_rtilde) phi
  std::vector<double> slash2;   // squared angular gradient, 0 for 1+1 data

  std::size_t size() const { return weight.size(); }
  void resize(std::size_t n);
};

/// Smooth cutoff around the trapped set: 0 outside [2.5M, 3.5M], 1 on
/// [2.8M, 3.2M], C^4 ramps in between.
double chi_ps(double M, double r);

/// Nondegenerate energy: sum of weight (dt^2 + grad2).
double energy(const PointwiseSlice& s);

/// Weighted energy with r^gamma (|d_v phi|^2 + |angular|^2 + r^-2 phi^2).
/// Throws ParameterError unless 0 < gamma < 2.
double energy_gamma(const PointwiseSlice& s, double gamma);

/// Dyadic annuli A_R = {R <= <r> < 2R}, R = 1, 2, 4, ...; points with
/// <r> < 4 are lumped into the cell R = 2.
struct AnnulusDecomposition {
  static std::size_t index(double rtilde);
  static double radius(std::size_t index) { return static_cast<double>(1ULL << index); }
};

/// Spatial integrals over each annulus of one slice.
struct AnnulusIntegrals {
  double time = 0.0;
  // <r>^-1 phi^2
  std::vector<double> u;
  // <r>^-1 (dt^2 + grad2)
  std::vector<double> grad;
  // <r>^-1 (dt^2 + (1 - chi_ps)^2 grad2)
  std::vector<double> grad_weak;
  // <r>^-3 phi^2
  std::vector<double> u_lower;
  // <r> f^2 with f = sign phi^p
  std::vector<double> source;
  // chi_ps^2 |grad f|^2, unweighted
  std::vector<double> source_grad_ps;
};

AnnulusIntegrals annulus_integrals(const PointwiseSlice& s, double M, const Nonlinearity& nl);

struct NormReport {
  double t0 = 0.0;
  double t1 = 0.0;
  double E = 0.0;          // energy at t1
  double gamma = 0.0;
  double E_gamma = 0.0;    // weighted energy at t1
  std::vector<double> LE_annulus;  // per-annulus ||<r>^-1/2 phi||
  double LE = 0.0;
  double LE1 = 0.0;
  double LE1_weak = 0.0;
  double LE_star = 0.0;       // of the nonlinear source
  double LE_star_weak = 0.0;
};

/// Stores annulus integrals at the output cadence and integrates them in
/// time with the trapezoid rule.
class LEAccumulator {
 public:
  void add(const AnnulusIntegrals& row);
  bool empty() const { return rows_.empty(); }
  double first_time() const { return rows_.front().time; }
  double last_time() const { return rows_.back().time; }
  const std::vector<AnnulusIntegrals>& rows() const { return rows_; }

  /// Spacetime norms over [t0, t1]. Both ends must be stored sample times
  /// (within 1e-9 relative); otherwise throws DomainError.
  NormReport window(double t0, double t1) const;

 private:
  std::vector<AnnulusIntegrals> rows_;
};

}  // namespace kerrdecay
