#include "kerrdecay/kernel_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kerrdecay/evolution.hpp"

namespace kerrdecay {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Globally adaptive GK15 (bisect the interval with the largest error) over
// [a, b] split at `cuts`. Stops at rel_tol |I| or at a roundoff floor on the
// L1 norm; Boost's local recursion cannot reach a relative target on
// segments where the integrand is negligible.
num::QuadResult segmented(const std::function<double(double)>& f, double a, double b,
                          std::vector<double> cuts, double rel_tol) {
  num::QuadResult out;
  if (!(b > a)) return out;
  cuts.push_back(a);
  cuts.push_back(b);
  std::erase_if(cuts, [a, b](double x) { return !(x >= a && x <= b); });
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  struct Piece {
    double a, b, value, error, l1;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  auto eval = [&f](double lo, double hi) {
    Piece p{lo, hi, 0.0, 0.0, 0.0};
    p.value = GK::integrate(f, lo, hi, 0, 0.0, &p.error, &p.l1);
    return p;
  };
  std::priority_queue<Piece> heap;
  double value = 0.0, error = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Piece p = eval(cuts[i], cuts[i + 1]);
    value += p.value;
    error += p.error;
    l1 += p.l1;
    heap.push(p);
  }
  constexpr std::size_t kMaxPieces = 4000;
  while (error > std::max(rel_tol * std::abs(value), 1e2 * kEps * l1) && heap.size() < kMaxPieces) {
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    const Piece left = eval(worst.a, mid), right = eval(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to drop the running-update rounding.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error = error;
  return out;
}

// Dyadic scales 1, 2, 4, ... up to `limit`.
std::vector<double> scales(double limit) {
  std::vector<double> s;
  for (double b = 1.0; b <= limit; b *= 2.0) s.push_back(b);
  return s;
}

void check_finite(double value, const char* where) {
  if (!std::isfinite(value)) {
    throw DomainError(std::string(where) + ": source is not integrable over the rectangle");
  }
}

}  // namespace

double WeightedSource::operator()(double s, double rho) const {
  if (rho > s || rho < 0.0) return 0.0;
  return std::pow(num::bracket(rho), -beta) * std::pow(num::bracket(s), -gamma_w) *
         std::pow(num::bracket(s - rho), -eta);
}

double eta_tilde(double eta, double delta_small) {
  if (eta == 1.0) throw ParameterError("eta_tilde: eta = 1 is excluded");
  return eta < 1.0 ? eta - delta_small - 2.0 : -1.0;
}

double mu_of_eta(double eta) {
  if (eta == 1.0) throw ParameterError("mu_of_eta: eta = 1 is excluded");
  return eta < 1.0 ? 1.0 - eta : 0.0;
}

RectResult rect_solution(double t, double r, const RadialSource& H, double rel_tol) {
  if (!(r >= 0.0) || !(t >= r)) throw DomainError("rect_solution: need t >= r >= 0");
  RectResult out;
  if (t == r) return out;
  const std::vector<double> b = scales(t + r);
  if (r == 0.0) {
    // d/dr (r v) at r = 0: the w-integral collapses to w = t with length 2r.
    std::vector<double> cuts;
    for (double x : b) cuts.push_back(x), cuts.push_back(t - 2.0 * x);
    const auto q = segmented(
        [&](double u) {
          const double rho = 0.5 * (t - u);
          return rho * H(0.5 * (t + u), rho);
        },
        0.0, t, cuts, rel_tol);
    out.v = 0.5 * q.value;
    out.error = 0.5 * q.error;
    check_finite(out.v, "rect_solution");
    return out;
  }
  // r v = 1/4 int_0^{t-r} int_{t-r}^{t+r} rho H ds drho in null coordinates.
  const double lo = t - r, hi = t + r;
  std::vector<double> ucuts;
  for (double x : b) {
    ucuts.push_back(x);
    ucuts.push_back(lo - 2.0 * x);
    ucuts.push_back(hi - 2.0 * x);
  }
  double inner_error = 0.0;
  const auto outer = segmented(
      [&](double u) {
        std::vector<double> wcuts;
        for (double x : b) wcuts.push_back(u + 2.0 * x);
        const auto q = segmented(
            [&](double w) {
              const double rho = 0.5 * (w - u);
              return rho * H(0.5 * (w + u), rho);
            },
            lo, hi, wcuts, 0.1 * rel_tol);
        inner_error = std::max(inner_error, q.error);
        return q.value;
      },
      0.0, lo, ucuts, rel_tol);
  out.v = 0.25 * outer.value / r;
  out.error = 0.25 * (outer.error + inner_error * lo) / r;
  check_finite(out.v, "rect_solution");
  return out;
}

std::vector<DyadicRow> dyadic_breakdown(double t, double r, const WeightedSource& source,
                                        double rel_tol) {
  if (!(r >= 0.0) || !(t >= r)) throw DomainError("dyadic_breakdown: need t >= r >= 0");
  std::vector<DyadicRow> rows;
  const double rho_max = 0.5 * (t + r);
  if (r == 0.0 || t == r) return rows;
  const double tr = t - r;
  const double mu = mu_of_eta(source.eta);
  const std::vector<double> b = scales(2.0 * t);
  // rho-slice of D_tr: s in [max(rho, t-r-rho), min(rho+t-r, t+r-rho)].
  auto slice = [&](double rho) {
    const double s0 = std::max(rho, tr - rho);
    const double s1 = std::min(rho + tr, t + r - rho);
    if (!(s1 > s0)) return 0.0;
    std::vector<double> cuts;
    for (double x : b) cuts.push_back(rho + x);
    return rho * segmented([&](double s) { return source(s, rho); }, s0, s1, cuts, 0.1 * rel_tol).value;
  };
  for (double R = 1.0; (R == 1.0 ? 0.0 : R) < rho_max; R *= 2.0) {
    const double a = R == 1.0 ? 0.0 : R;
    const double c = std::min(2.0 * R, rho_max);
    DyadicRow row;
    row.R = R;
    row.near = R < tr / 8.0;
    row.integral = segmented(slice, a, c, {0.5 * tr, r, a + 1.0}, rel_tol).value;
    row.predicted = row.near ? std::pow(R, 3.0 - source.beta) * std::pow(num::bracket(tr), -1.0 - source.eta)
                             : std::pow(R, 1.0 - source.beta) * std::pow(num::bracket(tr), mu);
    row.ratio = row.integral / row.predicted;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> log_times(double t0, double t1, unsigned per_decade) {
  if (!(t0 > 0.0) || !(t1 > t0) || per_decade < 2) {
    throw ParameterError("log_times: need 0 < t0 < t1 and per_decade >= 2");
  }
  const double step = 1.0 / static_cast<double>(per_decade - 1);
  const double span = std::log10(t1 / t0);
  const auto n = static_cast<std::size_t>(std::llround(span / step));
  std::vector<double> t;
  for (std::size_t i = 0; i <= n; ++i) t.push_back(t0 * std::pow(10.0, span * static_cast<double>(i) / n));
  t.back() = t1;
  return t;
}

namespace {

BoundReport collect(std::string name, double exponent, const std::vector<double>& times,
                    const std::vector<double>& r_over_t, const RadialSource& H,
                    const std::function<double(double, double)>& weight) {
  if (times.empty() || r_over_t.empty()) throw ParameterError(name + ": empty grid");
  for (double q : r_over_t) {
    if (!(q >= 0.0 && q < 1.0)) throw ParameterError(name + ": r/t must lie in [0, 1)");
  }
  BoundReport rep;
  rep.name = std::move(name);
  rep.exponent = exponent;
  rep.points.resize(times.size() * r_over_t.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const double t = times[k / r_over_t.size()];
    const double r = t * r_over_t[k % r_over_t.size()];
    const double v = rect_solution(t, r, H).v;
    rep.points[k] = {t, r, v, std::abs(v) * weight(t, r)};
  }
  for (const XiPoint& p : rep.points) {
    rep.sup = std::max(rep.sup, p.xi);
    const double start = std::pow(10.0, std::floor(std::log10(p.t) + 1e-12));
    auto it = std::find(rep.decade_start.begin(), rep.decade_start.end(), start);
    // The right end of the grid closes the previous decade.
    if (it == rep.decade_start.end() && !rep.decade_start.empty() && p.t == times.back()) {
      it = rep.decade_start.end() - 1;
    }
    if (it == rep.decade_start.end()) {
      rep.decade_start.push_back(start);
      rep.decade_sup.push_back(p.xi);
    } else {
      double& s = rep.decade_sup[static_cast<std::size_t>(it - rep.decade_start.begin())];
      s = std::max(s, p.xi);
    }
  }
  rep.non_increasing = true;
  for (std::size_t i = 1; i < rep.decade_start.size(); ++i) {
    if (rep.decade_start[i] >= 100.0 && rep.decade_sup[i] > rep.decade_sup[i - 1]) rep.non_increasing = false;
  }
  return rep;
}

}  // namespace

BoundReport verify_weighted_source_bound(const WeightedSource& source, double delta_small,
                           const std::vector<double>& times, const std::vector<double>& r_over_t) {
  std::string errors;
  if (!(source.beta > 1.0 && source.beta <= 3.0)) errors += " need 1 < beta <= 3;";
  if (source.eta == 1.0) errors += " eta = 1 is excluded;";
  if (source.gamma_w != 1.0) errors += " need gamma_w = 1;";
  if (!(delta_small > 0.0)) errors += " need delta_small > 0;";
  if (!errors.empty()) throw ParameterError("verify_weighted_source_bound:" + errors);
  const double e = source.beta + eta_tilde(source.eta, delta_small);
  return collect("weighted_source", e, times, r_over_t, source, [e](double t, double r) {
    return num::bracket(r) * std::pow(num::bracket(t - r), e);
  });
}

BoundReport verify_compact_source_bound(double gamma, double scale, const std::vector<double>& times,
                           const std::vector<double>& r_over_t) {
  if (!(gamma < 2.0) || !(gamma > 0.0)) throw ParameterError("verify_compact_source_bound: need 0 < gamma < 2");
  const double Z = num::integrate(
      [gamma](double r) { return std::pow(r, gamma - 1.0) * bump_profile(r - 2.0); }, 1.0, 3.0, 1e-15).value;
  const double c = scale / Z;
  const RadialSource H = [c](double s, double rho) {
    if (rho > s || c == 0.0) return 0.0;
    return std::sqrt(num::bracket(s - rho)) / num::bracket(s) * c * bump_profile(rho - 2.0);
  };
  const double e = gamma - 1.5;
  return collect("compact_source", e, times, r_over_t, H, [e](double t, double r) {
    return num::bracket(r) * std::pow(t - r, e);
  });
}

std::string kernel_csv(const BoundReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "t,r,v,Xi\n";
  for (const XiPoint& p : report.points) os << p.t << ',' << p.r << ',' << p.v << ',' << p.xi << '\n';
  return os.str();
}

}  // namespace kerrdecay
