// Kerr / Schwarzschild metric data in three charts and the radial coordinate
// machinery (tortoise coordinates, slicing function, hybrid radius).
//
// Coordinate index order everywhere: 0 = time, 1 = r, 2 = azimuth, 3 = theta.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "kerrdecay/numerics.hpp"

namespace kerrdecay {

/// A geometric object could not be built because an invariant failed.
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KerrParams {
  double M = 1.0;
  double a = 0.0;
};

/// Throws ParameterError unless M > 0 and |a| <= M/2.
void validate(const KerrParams& params);

struct HorizonData {
  double r_plus = 0.0;
  double r_minus = 0.0;
  double r_e = 0.0;
};

/// Roots of Delta plus the excision radius. r_e <= 0 selects the default M.
HorizonData horizon_radii(const KerrParams& params, double r_e = 0.0);

struct DeltaRho2 {
  double delta = 0.0;
  double rho2 = 0.0;
};

DeltaRho2 delta_rho2(const KerrParams& params, double r, double theta);

using Mat4 = std::array<std::array<double, 4>, 4>;

enum class Chart { BoyerLindquist, KerrStar, TtildeStar };

std::string chart_name(Chart chart);

struct MetricPoint {
  Chart chart = Chart::BoyerLindquist;
  std::array<double, 4> x{};  // (time, r, azimuth, theta)
  Mat4 g_lower{};
  Mat4 g_upper{};
  double sqrt_abs_det = 0.0;
};

/// max_ij |(g_lower g_upper - I)_ij| / sum_k |g_ik g^kj|.
double inverse_residual(const MetricPoint& point);

/// Inverts a symmetric 4x4 matrix by Gaussian elimination with partial
/// pivoting; returns the relative identity residual through `residual`.
Mat4 invert4(const Mat4& m, double* residual = nullptr);

class RadialMaps;

MetricPoint bl_metric(const KerrParams& params, double r, double theta);
MetricPoint kerr_star_metric(const KerrParams& params, double r, double theta);
MetricPoint ttilde_star_metric(const KerrParams& params, const RadialMaps& maps, double r,
                               double theta);

/// Lower t-tilde chart components without the r >= r_e domain check; used
/// for ghost layers of coefficient tables.
Mat4 ttilde_star_lower(const KerrParams& params, const RadialMaps& maps, double r,
                       double theta);

/// Closed-form inverse of the t-tilde chart metric. Used only to cross-check
/// the numeric inversion.
Mat4 ttilde_upper_closed_form(const KerrParams& params, const RadialMaps& maps, double r,
                              double theta);

/// Schwarzschild tortoise coordinate r + 2M log(r - 2M), r > 2M.
double rstar_schw(double M, double r);
/// Inverse of rstar_schw, Newton iteration in y = log(r - 2M). Far toward the
/// horizon r rounds to 2M; use the log form there.
double r_from_rstar(double M, double rstar);
double log_r_minus_2M_from_rstar(double M, double rstar);

class RadialMaps {
 public:
  /// Builds the maps and checks every invariant on a 10^4-point sample.
  /// Throws ConstructionError naming the failed condition.
  RadialMaps(const KerrParams& params, double R_switch, double r_e = 0.0,
             double r_max = 1.0e5);

  const KerrParams& params() const { return params_; }
  double R_switch() const { return R_switch_; }
  double r_e() const { return r_e_; }
  double r_max() const { return r_max_; }

  double rstar(double r) const { return rstar_schw(params_.M, r); }
  double drstar(double r) const { return r / (r - 2.0 * params_.M); }

  /// Kerr tortoise coordinate, anchored to rstar at 10M.
  double rstar_kerr(double r) const;
  double drstar_kerr(double r) const;

  double mu(double r) const;
  double dmu(double r) const;
  double d2mu(double r) const;

  double rtilde(double r) const;
  double drtilde(double r) const;
  double d2rtilde(double r) const;

  /// r with rtilde(r) = value, |rtilde(r) - value| <= 1e-12 max(1, |value|).
  double invert_rtilde(double value) const;

 private:
  KerrParams params_;
  double R_switch_;
  double r_e_;
  double r_max_;
  double mu_blend_end_ = 0.0;  // mu at 5M/2
  num::MonotoneSpline rtilde_table_;  // r as a function of rtilde, bracket seed
  std::vector<double> rtilde_nodes_;
  std::vector<double> r_nodes_;

  void check_invariants() const;
};

inline RadialMaps build_radial_maps(const KerrParams& params, double R_switch,
                                    double r_e = 0.0) {
  return RadialMaps(params, R_switch, r_e);
}

struct CheckRow {
  std::string name;
  double worst_r = 0.0;
  double worst_theta = 0.0;
  double residual = 0.0;
  bool pass = false;
};

struct GeometryCheckOptions {
  unsigned random_points = 1000;
  std::uint64_t seed = 12345;
  // 2+1 grid over which slicing conditions are checked
  double r_out = 400.0;
  std::size_t n_r = 1600;
  std::size_t n_theta = 64;
};

/// Full geometry self-check: inverse residuals in all charts, Schwarzschild
/// limit, slicing conditions, Kerr-Schwarzschild closeness, monotonicity.
std::vector<CheckRow> geometry_checks(const KerrParams& params, const RadialMaps& maps,
                                      const GeometryCheckOptions& options = {});

/// Per-decade sups of r^2 |g_K^{ab} - g_S^{ab}| (Boyer-Lindquist raw upper
/// components) on r in [r_lo, r_hi], one row per decade and component.
struct KSDiffDecade {
  double r_lo = 0.0;
  double r_hi = 0.0;
  std::array<double, 5> sup{};  // tt, t-phi, rr, thth, sin^2(theta) phi-phi
};
std::vector<KSDiffDecade> ks_difference_sweep(double M, double a, double r_lo, double r_hi,
                                              std::size_t per_decade = 400,
                                              std::size_t n_theta = 33);

}  // namespace kerrdecay
