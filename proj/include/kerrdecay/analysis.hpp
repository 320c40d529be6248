// Decay-rate extraction from probe series and radial cuts.
#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kerrdecay/evolution.hpp"

namespace kerrdecay {

/// Too few usable samples (or too little signal) for a fit.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// min{2, p - 2}. Throws ParameterError for p < 3.
int kappa(int p);
/// min{gamma, p gamma - 1}.
double gamma_one(double gamma, int p);

struct TheoremTarget {
  int p = 3;
  int kappa = 1;
  double interior_exponent = -2.0;  // -(1 + kappa) in t
  double cone_exponent = -1.0;      // -kappa in <u> at fixed t
};

TheoremTarget theorem_target(int p);

struct FitOptions {
  double x_min = 0.0;
  double x_max = std::numeric_limits<double>::infinity();
  double floor = 1e-280;  // |y| <= floor is dropped and counted
  std::size_t min_samples = 20;
  double min_decades = 1.0;
  // If y changes sign, fit the |y| maxima between zero crossings, or the
  // tail after the last crossing when there are too few maxima.
  bool envelope = true;
};

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;  // log |y| at log x = 0
  double stderr_slope = 0.0;
  double x_a = 0.0, x_b = 0.0;  // span of the samples actually used
  double residual_rms = 0.0;
  std::size_t used = 0;
  std::size_t below_floor = 0;
  bool envelope = false;
  bool trailing = false;  // only the samples after the last zero crossing
};

/// OLS fit of log|y| against log x on x in [x_min, x_max].
/// Throws InsufficientData on fewer than min_samples usable samples or a
/// used span shorter than min_decades.
DecayFit fit_powerlaw(std::span<const double> x, std::span<const double> y, const FitOptions& options);

struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;
};

enum class ProbeQuantity { Phi, DphiDt, DphiDr };

/// Values of one station up to its clean_until time.
TimeSeries clean_series(const EvolutionResult& run, int station, ProbeQuantity q);

/// |phi| (or phi_t) against <u> = <t - rtilde> on a radial cut, restricted to
/// clean points with u in [u_min, u_max] and resampled at `n` log-spaced u.
TimeSeries cone_profile(const RadialCut& cut, double u_min, double u_max, std::size_t n,
                        bool time_derivative = false);

struct TheoremCheck {
  double t_min = 300.0, t_max = 2000.0;
  double interior_tol = 0.2;
  double cone_time = 1500.0;
  double u_min = 20.0, u_max = 700.0;
  std::size_t cone_samples = 60;
  double cone_tol = 0.25;
  FitOptions fit;
};

struct Verdict {
  std::string station;
  std::string quantity;
  double predicted = 0.0;
  double fitted = 0.0;
  double stderr_slope = 0.0;
  double window_a = 0.0, window_b = 0.0;
  bool pass = false;
  std::string note;
};

struct TheoremReport {
  TheoremTarget target;
  std::vector<Verdict> rows;
  bool vacuous = false;  // every sample identically zero
  bool pass = false;
};

/// Interior stations: slope of |phi| in t against -(1 + kappa). Each cut at
/// cone_time: slope in <u> against -kappa. Windows are clipped to the clean
/// region; a station without enough clean samples fails with a note.
TheoremReport verify_theorem(const EvolutionResult& run, int p, const TheoremCheck& check);

struct DerivativeReport {
  DecayFit phi;
  DecayFit derivative;
  double gain = 0.0;      // phi slope - derivative slope
  double expected = 1.0;  // one power of t (interior) or <u> (cone)
  double gamma1 = 0.0;
  bool vacuous = false;
  bool pass = false;
};

/// Fits |phi| and |d phi| on the same window; passes when the derivative
/// decays `expected` powers faster within `tol`.
DerivativeReport derivative_gain(const TimeSeries& phi, const TimeSeries& dphi, const FitOptions& options,
                                 double expected = 1.0, double tol = 0.3, double gamma = 1.0, int p = 3);

/// log(A1 / A2) / log(eps1 / eps2) with A the RMS of |v| over [t_a, t_b].
/// Samples are matched by time. Throws InsufficientData if either amplitude
/// is below `floor` or the window holds no common samples.
double epsilon_scaling(const TimeSeries& run1, const TimeSeries& run2, double eps1, double eps2,
                       double t_a, double t_b, double floor = 1e-200);

struct ConvergenceReport {
  std::vector<double> t;
  std::vector<double> order;  // log2 |c - m| / |m - f| per time
  double median = 0.0;
  bool degenerate = false;  // all differences zero
  bool collapsed = false;   // median below half the expected order
};

/// Richardson triple on coarse/medium/fine series sampled at the same times.
/// Times where |m - f| or |c - m| is below `floor` are skipped.
/// Throws DomainError if the time samples differ.
ConvergenceReport convergence_order(const TimeSeries& coarse, const TimeSeries& medium, const TimeSeries& fine,
                                    double expected = 4.0, double floor = 1e-300);

/// run_id,station,quantity,predicted,fitted,stderr,window,pass
std::string verdict_csv(const std::string& run_id, const std::vector<Verdict>& rows);

}  // namespace kerrdecay
