#include "kerrdecay/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kerrdecay {

int kappa(int p) {
  if (p < 3) throw ParameterError("kappa: need p >= 3, got " + std::to_string(p));
  return std::min(2, p - 2);
}

double gamma_one(double gamma, int p) { return std::min(gamma, p * gamma - 1.0); }

TheoremTarget theorem_target(int p) {
  TheoremTarget t;
  t.p = p;
  t.kappa = kappa(p);
  t.interior_exponent = -(1.0 + t.kappa);
  t.cone_exponent = -static_cast<double>(t.kappa);
  return t;
}

DecayFit fit_powerlaw(std::span<const double> x, std::span<const double> y, const FitOptions& o) {
  if (x.size() != y.size()) throw DomainError("fit_powerlaw: x and y differ in length");
  DecayFit fit;
  std::vector<double> wx, wy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < o.x_min || x[i] > o.x_max) continue;
    if (!(x[i] > 0.0)) throw DomainError("fit_powerlaw: x must be positive");
    wx.push_back(x[i]);
    wy.push_back(y[i]);
  }
  bool sign_change = false;
  for (std::size_t i = 1; i < wy.size(); ++i) {
    if (wy[i] * wy[i - 1] < 0.0) sign_change = true;
  }
  std::vector<double> lx, ly;
  auto use = [&](double xv, double yv) {
    if (!(std::abs(yv) > o.floor)) {
      ++fit.below_floor;
      return;
    }
    lx.push_back(std::log(xv));
    ly.push_back(std::log(std::abs(yv)));
  };
  if (sign_change && o.envelope) {
    // Largest |y| in each run of constant sign; the first and last runs are
    // cut by the window and skipped.
    fit.envelope = true;
    std::size_t start = 0;
    bool first = true;
    for (std::size_t i = 1; i <= wy.size(); ++i) {
      if (i < wy.size() && !(wy[i] * wy[start] < 0.0)) continue;
      if (!first && i < wy.size()) {
        std::size_t best = start;
        for (std::size_t k = start; k < i; ++k) {
          if (std::abs(wy[k]) > std::abs(wy[best])) best = k;
        }
        use(wx[best], wy[best]);
      }
      first = false;
      start = i;
    }
    if (lx.size() < std::max<std::size_t>(o.min_samples, 3)) {
      // Too few oscillations: a ringdown that has ended inside the window.
      // Fit the constant-sign tail after the last zero crossing instead.
      lx.clear();
      ly.clear();
      fit.below_floor = 0;
      fit.envelope = false;
      fit.trailing = true;
      std::size_t last = wy.size() - 1;
      while (last > 0 && !(wy[last - 1] * wy.back() < 0.0)) --last;
      for (std::size_t i = last; i < wx.size(); ++i) use(wx[i], wy[i]);
    }
  } else {
    for (std::size_t i = 0; i < wx.size(); ++i) use(wx[i], wy[i]);
  }
  const std::size_t n = lx.size();
  if (n < o.min_samples || n < 3) {
    throw InsufficientData("fit_powerlaw: " + std::to_string(n) + " usable samples, need " +
                           std::to_string(o.min_samples) + " (" + std::to_string(fit.below_floor) +
                           " below floor)");
  }
  fit.used = n;
  fit.x_a = std::exp(*std::min_element(lx.begin(), lx.end()));
  fit.x_b = std::exp(*std::max_element(lx.begin(), lx.end()));
  if (std::log10(fit.x_b / fit.x_a) < o.min_decades * (1.0 - 1e-12)) {
    throw InsufficientData("fit_powerlaw: samples span " + std::to_string(std::log10(fit.x_b / fit.x_a)) +
                           " decades, need " + std::to_string(o.min_decades));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ly[i] - fit.intercept - fit.slope * lx[i];
    ssr += e * e;
  }
  fit.residual_rms = std::sqrt(ssr / static_cast<double>(n));
  fit.stderr_slope = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

TimeSeries clean_series(const EvolutionResult& run, int station, ProbeQuantity q) {
  double until = -1.0;
  for (const StationInfo& s : run.stations) {
    if (s.id == station) until = s.clean_until;
  }
  if (until < 0.0) throw DomainError("clean_series: no station " + std::to_string(station));
  TimeSeries out;
  for (const ProbeSample& p : station_series(run, station)) {
    if (p.t > until) break;
    out.t.push_back(p.t);
    out.v.push_back(q == ProbeQuantity::Phi ? p.phi : q == ProbeQuantity::DphiDt ? p.dphi_dt : p.dphi_dr);
  }
  return out;
}

TimeSeries cone_profile(const RadialCut& cut, double u_min, double u_max, std::size_t n, bool time_derivative) {
  if (!(u_max > u_min) || !(u_min > 0.0) || n < 2) throw ParameterError("cone_profile: need 0 < u_min < u_max, n >= 2");
  // u decreases along the cut; collect the clean part in increasing u.
  std::vector<double> u, v;
  for (std::size_t i = cut.r.size(); i-- > 0;) {
    if (!cut.clean.empty() && cut.clean[i] == 0) continue;
    const double ui = cut.t - cut.rtilde[i];
    if (!u.empty() && !(ui > u.back())) continue;
    u.push_back(ui);
    v.push_back(time_derivative ? cut.dphi_dt[i] : cut.phi[i]);
  }
  TimeSeries out;
  if (u.size() < 2 || u.front() > u_min || u.back() < u_max) {
    throw InsufficientData("cone_profile: clean cut does not cover u in [" + std::to_string(u_min) + ", " +
                           std::to_string(u_max) + "]");
  }
  const double lr = std::log(u_max / u_min);
  for (std::size_t k = 0; k < n; ++k) {
    const double target = u_min * std::exp(lr * static_cast<double>(k) / static_cast<double>(n - 1));
    const auto it = std::lower_bound(u.begin(), u.end(), target);
    const std::size_t j = std::clamp<std::size_t>(static_cast<std::size_t>(it - u.begin()), 1, u.size() - 1);
    const double w = (target - u[j - 1]) / (u[j] - u[j - 1]);
    out.t.push_back(num::bracket(target));
    out.v.push_back((1.0 - w) * v[j - 1] + w * v[j]);
  }
  return out;
}

namespace {

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

}  // namespace

TheoremReport verify_theorem(const EvolutionResult& run, int p, const TheoremCheck& check) {
  TheoremReport rep;
  rep.target = theorem_target(p);
  bool zero = true;
  for (const ProbeSample& s : run.probes) zero = zero && s.phi == 0.0;
  for (const RadialCut& c : run.cuts) zero = zero && all_zero(c.phi);
  if (zero) {
    rep.vacuous = true;
    rep.pass = true;
    return rep;
  }
  rep.pass = true;
  for (const StationInfo& st : run.stations) {
    if (st.kind != StationKind::Interior) continue;
    Verdict v;
    v.station = "interior:" + std::to_string(st.position);
    v.quantity = "phi";
    v.predicted = rep.target.interior_exponent;
    FitOptions o = check.fit;
    o.x_min = check.t_min;
    o.x_max = std::min(check.t_max, st.clean_until);
    v.window_a = o.x_min;
    v.window_b = o.x_max;
    try {
      const TimeSeries s = clean_series(run, st.id, ProbeQuantity::Phi);
      const DecayFit f = fit_powerlaw(s.t, s.v, o);
      v.fitted = f.slope;
      v.stderr_slope = f.stderr_slope;
      v.pass = std::abs(f.slope - v.predicted) <= check.interior_tol;
      if (f.envelope) v.note = "envelope";
    } catch (const InsufficientData& e) {
      v.note = e.what();
    }
    rep.pass = rep.pass && v.pass;
    rep.rows.push_back(v);
  }
  for (const RadialCut& c : run.cuts) {
    if (std::abs(c.t - check.cone_time) > 1e-9 * std::max(1.0, c.t)) continue;
    Verdict v;
    v.station = "cut:t=" + std::to_string(c.t);
    v.quantity = "phi(u)";
    v.predicted = rep.target.cone_exponent;
    v.window_a = check.u_min;
    v.window_b = check.u_max;
    try {
      const TimeSeries s = cone_profile(c, check.u_min, check.u_max, check.cone_samples);
      FitOptions o = check.fit;
      o.x_min = 0.0;
      const DecayFit f = fit_powerlaw(s.t, s.v, o);
      v.fitted = f.slope;
      v.stderr_slope = f.stderr_slope;
      v.pass = std::abs(f.slope - v.predicted) <= check.cone_tol;
    } catch (const InsufficientData& e) {
      v.note = e.what();
    }
    rep.pass = rep.pass && v.pass;
    rep.rows.push_back(v);
  }
  if (rep.rows.empty()) rep.pass = false;
  return rep;
}

DerivativeReport derivative_gain(const TimeSeries& phi, const TimeSeries& dphi, const FitOptions& options,
                                 double expected, double tol, double gamma, int p) {
  DerivativeReport rep;
  rep.expected = expected;
  rep.gamma1 = gamma_one(gamma, p);
  if (all_zero(phi.v) && all_zero(dphi.v)) {
    rep.vacuous = true;
    rep.pass = true;
    return rep;
  }
  rep.phi = fit_powerlaw(phi.t, phi.v, options);
  rep.derivative = fit_powerlaw(dphi.t, dphi.v, options);
  rep.gain = rep.phi.slope - rep.derivative.slope;
  rep.pass = std::abs(rep.gain - expected) <= tol;
  return rep;
}

double epsilon_scaling(const TimeSeries& run1, const TimeSeries& run2, double eps1, double eps2, double t_a,
                       double t_b, double floor) {
  if (!(eps1 > 0.0 && eps2 > 0.0) || eps1 == eps2) throw ParameterError("epsilon_scaling: need distinct eps > 0");
  double s1 = 0.0, s2 = 0.0;
  std::size_t n = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < run1.t.size(); ++i) {
    const double t = run1.t[i];
    if (t < t_a || t > t_b) continue;
    while (j < run2.t.size() && run2.t[j] < t - 1e-9 * std::max(1.0, t)) ++j;
    if (j == run2.t.size() || std::abs(run2.t[j] - t) > 1e-9 * std::max(1.0, t)) continue;
    s1 += run1.v[i] * run1.v[i];
    s2 += run2.v[j] * run2.v[j];
    ++n;
  }
  if (n == 0) throw InsufficientData("epsilon_scaling: no common samples in the window");
  const double a1 = std::sqrt(s1 / static_cast<double>(n)), a2 = std::sqrt(s2 / static_cast<double>(n));
  if (!(a1 > floor && a2 > floor)) throw InsufficientData("epsilon_scaling: tail amplitude below floor");
  return std::log(a1 / a2) / std::log(eps1 / eps2);
}

ConvergenceReport convergence_order(const TimeSeries& coarse, const TimeSeries& medium, const TimeSeries& fine,
                                    double expected, double floor) {
  if (coarse.t.size() != medium.t.size() || medium.t.size() != fine.t.size()) {
    throw DomainError("convergence_order: series are not sampled at the same times");
  }
  for (std::size_t i = 0; i < coarse.t.size(); ++i) {
    const double tol = 1e-9 * std::max(1.0, std::abs(coarse.t[i]));
    if (std::abs(coarse.t[i] - medium.t[i]) > tol || std::abs(medium.t[i] - fine.t[i]) > tol) {
      throw DomainError("convergence_order: series are not sampled at the same times");
    }
  }
  ConvergenceReport rep;
  bool any = false;
  for (std::size_t i = 0; i < coarse.t.size(); ++i) {
    const double d1 = std::abs(coarse.v[i] - medium.v[i]);
    const double d2 = std::abs(medium.v[i] - fine.v[i]);
    if (d1 != 0.0 || d2 != 0.0) any = true;
    if (!(d1 > floor && d2 > floor)) continue;
    rep.t.push_back(coarse.t[i]);
    rep.order.push_back(std::log2(d1 / d2));
  }
  rep.degenerate = !any;
  if (!rep.order.empty()) {
    std::vector<double> o = rep.order;
    std::nth_element(o.begin(), o.begin() + static_cast<std::ptrdiff_t>(o.size() / 2), o.end());
    rep.median = o[o.size() / 2];
  }
  rep.collapsed = !rep.degenerate && rep.median < 0.5 * expected;
  return rep;
}

std::string verdict_csv(const std::string& run_id, const std::vector<Verdict>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "run_id,station,quantity,predicted,fitted,stderr,window,pass\n";
  for (const Verdict& v : rows) {
    os << run_id << ',' << v.station << ',' << v.quantity << ',' << v.predicted << ',' << v.fitted << ','
       << v.stderr_slope << ',' << v.window_a << ':' << v.window_b << ',' << (v.pass ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace kerrdecay
