// Time-domain solvers.
//
// E1: spherically symmetric Schwarzschild evolution of psi = r phi in
//     (t, r*), 4th-order finite differences, causally padded domain.
// E2: axisymmetric Kerr evolution of phi in (t-tilde, r, theta) with
//     excision inside the horizon.
// Both use method of lines with classical RK4 and Kreiss-Oliger dissipation.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrdecay/geometry.hpp"
#include "kerrdecay/grid.hpp"
#include "kerrdecay/norms.hpp"
#include "kerrdecay/operators.hpp"

namespace kerrdecay {

enum class Engine : std::uint32_t { E1 = 1, E2 = 2 };

std::string engine_name(Engine engine);

/// Non-finite value produced by a step.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(double time, double location, const std::string& what)
      : std::runtime_error(what), time(time), location(location) {}
  double time;
  double location;  // r* for E1, r for E2
};

/// Time-symmetric bump data eps * exp(-1 / (1 - z^2)), z = (r - c) / w.
struct InitialDataSpec {
  double epsilon = 0.1;
  double center = 12.0;
  double width = 4.0;
  bool time_symmetric = true;
};

/// exp(-1 / (1 - z^2)) for |z| < 1, else 0.
double bump_profile(double z);

/// phi: psi = r phi (E1) or phi (E2); pi: d_t psi (E1) or d_t phi (E2).
struct FieldSlice {
  double time = 0.0;
  std::vector<double> phi;
  std::vector<double> pi;
};

struct StateDerivative {
  std::vector<double> phi;
  std::vector<double> pi;
};

class Solver1D {
 public:
  Solver1D(double M, const Grid1D& grid, const Nonlinearity& nl, double ko_sigma = 0.02,
           double R_switch = 8.0);

  const Grid1D& grid() const { return grid_; }
  double M() const { return M_; }
  const RadialMaps& maps() const { return maps_; }
  const std::vector<double>& r() const { return r_; }
  const std::vector<double>& f() const { return f_; }
  const std::vector<double>& potential() const { return V_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  double ko_sigma() const { return ko_sigma_; }

  /// Throws DomainError if the data support is clipped by the grid.
  FieldSlice init_data(const InitialDataSpec& spec) const;

  /// Time derivatives on the whole grid.
  void rhs(const FieldSlice& s, StateDerivative& out) const;

  /// Classical RK4 step. Throws BlowUpError on non-finite values.
  void step(FieldSlice& s, double dt);

  /// Default time step cfl * h.
  double default_dt(double cfl = 0.5) const { return cfl * grid_.h(); }

  /// psi, d_t psi and d_r* psi interpolated to x (6-point Lagrange).
  struct Sample {
    double psi = 0.0, psi_t = 0.0, psi_x = 0.0;
  };
  Sample sample(const FieldSlice& s, double x) const;

  /// Per-point norm data: measure 4 pi r^2 dr*, |d phi|^2 = phi_t^2 + phi_r*^2.
  PointwiseSlice pointwise(const FieldSlice& s) const;

 private:
  double M_;
  Grid1D grid_;
  Nonlinearity nl_;
  double ko_sigma_;
  RadialMaps maps_;
  std::vector<double> r_, f_, V_, nl_coef_;
  // Index range that may hold nonzero values after the next RHS evaluation.
  std::size_t lo_ = 0, hi_ = 0;
  StateDerivative k_[4];
  FieldSlice stage_;

  void rhs_range(const FieldSlice& s, StateDerivative& out, std::size_t lo,
                 std::size_t hi) const;
  void update_active_range(const FieldSlice& s);
};

class Solver2D {
 public:
  Solver2D(const KerrParams& params, const Grid2D& grid, const Nonlinearity& nl,
           double ko_sigma = 0.02, double R_switch = 8.0);

  const Grid2D& grid() const { return grid_; }
  const KerrParams& params() const { return params_; }
  const RadialMaps& maps() const { return maps_; }
  const AxisymTables& tables() const { return tables_; }
  const Nonlinearity& nonlinearity() const { return nl_; }
  double ko_sigma() const { return ko_sigma_; }
  /// Outgoing radial characteristic speed at the outer edge, per theta.
  const std::vector<double>& outer_speed() const { return outer_speed_; }

  FieldSlice init_data(const InitialDataSpec& spec) const;
  void rhs(const FieldSlice& s, StateDerivative& out) const;
  void step(FieldSlice& s, double dt);
  double default_dt(double cfl = 0.25) const;

  /// phi, d_t phi, d_r phi at (r, theta = pi/2); 6-point Lagrange in r,
  /// symmetric 4-point interpolation in theta.
  struct Sample {
    double phi = 0.0, phi_t = 0.0, phi_r = 0.0;
  };
  Sample sample(const FieldSlice& s, double r) const;

  /// Per-point norm data: measure rho^2 sin(theta) 2 pi dr dtheta,
  /// |d phi|^2 = phi_t^2 + phi_r^2 + phi_theta^2 / r^2.
  PointwiseSlice pointwise(const FieldSlice& s) const;

  /// d_theta phi at the cells adjacent to the axis, max over r.
  double axis_derivative_max(const FieldSlice& s) const;

 private:
  KerrParams params_;
  Grid2D grid_;
  Nonlinearity nl_;
  double ko_sigma_;
  RadialMaps maps_;
  AxisymTables tables_;
  std::vector<double> outer_speed_;
  // Rows with g^rr < 0 (inside r_+) use upwind-biased radial derivatives,
  // with phi_rr = D1(D1 phi); centered stencils are unstable there.
  std::size_t n_inner_ = 0;
  std::size_t hi_ = 0;  // last radial index that may be nonzero
  mutable std::vector<double> phi_r_;
  StateDerivative k_[4];
  FieldSlice stage_;

  void update_active_range(const FieldSlice& s);
};

struct EvolutionConfig {
  Engine engine = Engine::E1;
  KerrParams params;
  double r_e = 0.0;  // E2 excision radius, 0 selects M
  double R_switch = 8.0;
  // E1 grid in r*
  double rstar_min = -1400.0;
  double rstar_max = 2600.0;
  double h = 0.1;
  // E2 grid
  double r_out = 230.0;
  double h_r = 0.05;
  std::size_t n_theta = 16;
  double cfl = 0.0;  // 0 selects the engine default
  double ko_sigma = 0.02;
  InitialDataSpec data;
  double R1 = 16.0;
  Nonlinearity nl;
  double T_final = 100.0;
  double dt_out = 1.0;
  std::vector<double> probe_x;  // r* (E1) or r (E2) stations
  std::vector<double> probe_u;  // u = t - rtilde stations
  std::vector<double> cut_times;
  std::vector<double> snapshot_times;
  std::vector<double> gammas;   // weighted energies to monitor
  bool monitor_norms = true;
  // Called with (time, wall seconds) roughly every progress_interval seconds.
  std::function<void(double, double)> progress;
  double progress_interval = 10.0;
};

/// Throws ParameterError listing every violated constraint.
void validate(const EvolutionConfig& config);

enum class StationKind { Interior, Cone };

struct StationInfo {
  int id = 0;
  StationKind kind = StationKind::Interior;
  double position = 0.0;     // r* (E1) / r (E2) or u
  double clean_until = 0.0;  // latest time with no boundary influence
};

struct ProbeSample {
  double t = 0.0;
  int station = 0;
  double phi = 0.0;
  double dphi_dt = 0.0;
  double dphi_dr = 0.0;  // areal r derivative
};

struct NormSample {
  double t = 0.0;
  double E = 0.0;
  std::vector<double> E_gamma;
};

/// Radial cut at fixed time; E2 cuts are taken at theta = pi/2.
struct RadialCut {
  double t = 0.0;
  std::vector<double> r, rtilde, phi, dphi_dt;
  std::vector<unsigned char> clean;  // 1 where no boundary influence has arrived
};

enum class Outcome { Completed, BlowUp };

std::string outcome_name(Outcome outcome);

struct EvolutionResult {
  Outcome outcome = Outcome::Completed;
  double final_time = 0.0;
  double blowup_time = 0.0;
  double blowup_location = 0.0;
  std::string message;
  std::vector<StationInfo> stations;
  std::vector<ProbeSample> probes;
  std::vector<NormSample> norms;
  LEAccumulator le;
  std::vector<RadialCut> cuts;
  std::vector<FieldSlice> snapshots;
  double dt = 0.0;
  std::size_t steps = 0;
};

EvolutionResult evolve(const EvolutionConfig& config);

/// Probe series of one station from a result, in time order.
std::vector<ProbeSample> station_series(const EvolutionResult& result, int station);

}  // namespace kerrdecay
