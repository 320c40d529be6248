#include "kerrdecay/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace kerrdecay {

namespace {

// Degree-9 Hermite blend of mu' on sigma = (r - 2M)/M in [0, 1/2]:
// C^4 match to 1 at sigma = 0 and to r/(r - 2M) at sigma = 1/2.
constexpr double kMuBlend[10] = {1.0,      0.0,       0.0,       0.0,       0.0,
                                 26880.0,  -184320.0, 483840.0,  -573440.0, 258048.0};

double blend_poly(double s) {
  double v = 0.0;
  for (int i = 9; i >= 0; --i) v = v * s + kMuBlend[i];
  return v;
}

double blend_poly_d1(double s) {
  double v = 0.0;
  for (int i = 9; i >= 1; --i) v = v * s + i * kMuBlend[i];
  return v;
}

// Antiderivative of blend_poly vanishing at 0.
double blend_poly_int(double s) {
  double v = 0.0;
  for (int i = 9; i >= 0; --i) v = v * s + kMuBlend[i] / (i + 1);
  return v * s;
}

double sqr(double x) { return x * x; }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void validate(const KerrParams& params) {
  if (!(params.M > 0.0) || !std::isfinite(params.M)) {
    throw ParameterError("mass M must be positive and finite");
  }
  if (!(std::abs(params.a) <= 0.5 * params.M)) {
    throw ParameterError("|a| = " + fmt_double(std::abs(params.a)) +
                         " exceeds 0.5 M: outside the small-a regime");
  }
}

HorizonData horizon_radii(const KerrParams& params, double r_e) {
  validate(params);
  const double root = std::sqrt(params.M * params.M - params.a * params.a);
  HorizonData h;
  h.r_plus = params.M + root;
  // Stable form of M - root for small a.
  h.r_minus = params.a * params.a / h.r_plus;
  h.r_e = r_e > 0.0 ? r_e : params.M;
  if (!(h.r_e > h.r_minus && h.r_e < h.r_plus)) {
    throw ParameterError("excision radius r_e = " + fmt_double(h.r_e) +
                         " must lie strictly between r_- and r_+");
  }
  return h;
}

DeltaRho2 delta_rho2(const KerrParams& params, double r, double theta) {
  const double c = std::cos(theta);
  return {r * r - 2.0 * params.M * r + params.a * params.a,
          r * r + params.a * params.a * c * c};
}

std::string chart_name(Chart chart) {
  switch (chart) {
    case Chart::BoyerLindquist:
      return "BoyerLindquist";
    case Chart::KerrStar:
      return "KerrStar";
    case Chart::TtildeStar:
      return "TtildeStar";
  }
  return "unknown";
}

double inverse_residual(const MetricPoint& point) {
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      double scale = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double term = point.g_lower[i][k] * point.g_upper[k][j];
        s += term;
        scale += std::abs(term);
      }
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(s - target) / std::max(scale, 1.0e-300));
    }
  }
  return worst;
}

Mat4 invert4(const Mat4& m, double* residual) {
  std::array<std::array<double, 8>, 4> aug{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) aug[i][j] = m[i][j];
    aug[i][4 + i] = 1.0;
  }
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int row = col + 1; row < 4; ++row) {
      if (std::abs(aug[row][col]) > std::abs(aug[piv][col])) piv = row;
    }
    if (aug[piv][col] == 0.0) throw ConstructionError("singular 4x4 metric");
    std::swap(aug[piv], aug[col]);
    const double inv = 1.0 / aug[col][col];
    for (auto& v : aug[col]) v *= inv;
    for (int row = 0; row < 4; ++row) {
      if (row == col) continue;
      const double f = aug[row][col];
      if (f == 0.0) continue;
      for (int j = 0; j < 8; ++j) aug[row][j] -= f * aug[col][j];
    }
  }
  Mat4 out{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out[i][j] = aug[i][4 + j];
  }
  // Symmetrize: the exact inverse of a symmetric matrix is symmetric.
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double v = 0.5 * (out[i][j] + out[j][i]);
      out[i][j] = v;
      out[j][i] = v;
    }
  }
  if (residual != nullptr) {
    MetricPoint tmp;
    tmp.g_lower = m;
    tmp.g_upper = out;
    *residual = inverse_residual(tmp);
  }
  return out;
}

MetricPoint bl_metric(const KerrParams& params, double r, double theta) {
  const HorizonData h = horizon_radii(params);
  if (!(r > h.r_plus)) {
    throw DomainError("Boyer-Lindquist chart needs r > r_+, got r = " + fmt_double(r));
  }
  const double M = params.M;
  const double a = params.a;
  const auto [D, rho2] = delta_rho2(params, r, theta);
  const double s = std::sin(theta);
  const double s2 = s * s;
  const double A = sqr(r * r + a * a) - a * a * D * s2;

  MetricPoint p;
  p.chart = Chart::BoyerLindquist;
  p.x = {0.0, r, 0.0, theta};
  auto& g = p.g_lower;
  g[0][0] = -(1.0 - 2.0 * M * r / rho2);
  g[0][2] = g[2][0] = -2.0 * M * a * r * s2 / rho2;
  g[1][1] = rho2 / D;
  g[2][2] = A * s2 / rho2;
  g[3][3] = rho2;

  auto& u = p.g_upper;
  u[0][0] = -A / (rho2 * D);
  u[0][2] = u[2][0] = -2.0 * M * a * r / (rho2 * D);
  u[1][1] = D / rho2;
  u[2][2] = (D - a * a * s2) / (rho2 * D * s2);
  u[3][3] = 1.0 / rho2;
  p.sqrt_abs_det = rho2 * std::abs(s);
  return p;
}

MetricPoint kerr_star_metric(const KerrParams& params, double r, double theta) {
  const double M = params.M;
  const double a = params.a;
  const auto [D, rho2] = delta_rho2(params, r, theta);
  const double s = std::sin(theta);
  const double s2 = s * s;

  MetricPoint p;
  p.chart = Chart::KerrStar;
  p.x = {0.0, r, 0.0, theta};
  auto& g = p.g_lower;
  g[0][0] = -(1.0 - 2.0 * M * r / rho2);
  g[0][1] = g[1][0] = 1.0;
  g[0][2] = g[2][0] = -2.0 * a * M * r * s2 / rho2;
  g[1][2] = g[2][1] = -a * s2;
  g[2][2] = (sqr(r * r + a * a) - D * a * a * s2) * s2 / rho2;
  g[3][3] = rho2;

  auto& u = p.g_upper;
  u[0][0] = a * a * s2 / rho2;
  u[0][1] = u[1][0] = (r * r + a * a) / rho2;
  u[0][2] = u[2][0] = a / rho2;
  u[1][1] = D / rho2;
  u[1][2] = u[2][1] = a / rho2;
  u[2][2] = 1.0 / (rho2 * s2);
  u[3][3] = 1.0 / rho2;
  p.sqrt_abs_det = rho2 * std::abs(s);
  return p;
}

Mat4 ttilde_star_lower(const KerrParams& params, const RadialMaps& maps, double r,
                       double theta) {
  const double M = params.M;
  const double a = params.a;
  const auto [D, rho2] = delta_rho2(params, r, theta);
  const double s2 = sqr(std::sin(theta));
  const double mp = maps.dmu(r);
  const double lapse = 1.0 - 2.0 * M * r / rho2;
  Mat4 g{};
  g[0][0] = -lapse;
  g[0][1] = g[1][0] = 1.0 - lapse * mp;
  g[1][1] = 2.0 * mp - lapse * mp * mp;
  g[0][2] = g[2][0] = -2.0 * a * M * r * s2 / rho2;
  g[1][2] = g[2][1] = -a * s2 * (1.0 + 2.0 * M * r * mp / rho2);
  g[2][2] = (sqr(r * r + a * a) - D * a * a * s2) * s2 / rho2;
  g[3][3] = rho2;
  return g;
}

MetricPoint ttilde_star_metric(const KerrParams& params, const RadialMaps& maps, double r,
                               double theta) {
  if (!(r >= maps.r_e() * (1.0 - 1e-14))) {
    throw DomainError("t-tilde chart needs r >= r_e, got r = " + fmt_double(r));
  }
  MetricPoint p;
  p.chart = Chart::TtildeStar;
  p.x = {0.0, r, 0.0, theta};
  p.g_lower = ttilde_star_lower(params, maps, r, theta);
  double residual = 0.0;
  p.g_upper = invert4(p.g_lower, &residual);
  if (!(residual <= 1e-10)) {
    throw ConstructionError("t-tilde metric inversion residual " + fmt_double(residual) +
                            " at r = " + fmt_double(r));
  }
  p.sqrt_abs_det = delta_rho2(params, r, theta).rho2 * std::abs(std::sin(theta));
  return p;
}

Mat4 ttilde_upper_closed_form(const KerrParams& params, const RadialMaps& maps, double r,
                              double theta) {
  const double a = params.a;
  const auto [D, rho2] = delta_rho2(params, r, theta);
  const double s2 = sqr(std::sin(theta));
  const double mp = maps.dmu(r);
  Mat4 u{};
  u[0][0] = (a * a * s2 - 2.0 * mp * (r * r + a * a) + mp * mp * D) / rho2;
  u[0][1] = u[1][0] = ((r * r + a * a) - mp * D) / rho2;
  u[0][2] = u[2][0] = a * (1.0 - mp) / rho2;
  u[1][1] = D / rho2;
  u[1][2] = u[2][1] = a / rho2;
  u[2][2] = 1.0 / (rho2 * s2);
  u[3][3] = 1.0 / rho2;
  return u;
}

double rstar_schw(double M, double r) {
  if (!(r > 2.0 * M)) throw DomainError("r* needs r > 2M, got r = " + fmt_double(r));
  return r + 2.0 * M * std::log(r - 2.0 * M);
}

double log_r_minus_2M_from_rstar(double M, double rstar) {
  // Solve e^y + 2M y = x with x = r* - 2M; the left side is increasing and
  // convex, so Newton from a point with positive residual converges monotonically.
  const double x = rstar - 2.0 * M;
  double y = x > 1.0 ? std::log(x) : x / (2.0 * M);
  for (int it = 0; it < 200; ++it) {
    const double e = std::exp(y);
    const double F = e + 2.0 * M * y - x;
    const double dy = F / (e + 2.0 * M);
    y -= dy;
    if (std::abs(dy) <= 1e-16 * (1.0 + std::abs(y))) break;
  }
  return y;
}

double r_from_rstar(double M, double rstar) {
  return 2.0 * M + std::exp(log_r_minus_2M_from_rstar(M, rstar));
}

RadialMaps::RadialMaps(const KerrParams& params, double R_switch, double r_e, double r_max)
    : params_(params), R_switch_(R_switch), r_max_(r_max) {
  const HorizonData h = horizon_radii(params, r_e);
  r_e_ = h.r_e;
  if (!(R_switch >= 4.0 * params.M)) {
    throw ParameterError("R_switch must be at least 4M");
  }
  if (!(r_max > 2.0 * R_switch)) throw ParameterError("r_max must exceed 2 R_switch");
  const double M = params.M;
  mu_blend_end_ = rstar_schw(M, 2.5 * M);

  // Log-spaced nodes for bracketing the rtilde inverse.
  const std::size_t n = 4000;
  r_nodes_.resize(n);
  rtilde_nodes_.resize(n);
  const double l0 = std::log(R_switch);
  const double l1 = std::log(r_max);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / (n - 1));
    r_nodes_[i] = r;
    rtilde_nodes_[i] = rtilde(r);
  }
  r_nodes_.back() = r_max;
  rtilde_nodes_.back() = rtilde(r_max);
  for (std::size_t i = 1; i < n; ++i) {
    if (!(rtilde_nodes_[i] > rtilde_nodes_[i - 1])) {
      throw ConstructionError("rtilde is not strictly increasing near r = " +
                              fmt_double(r_nodes_[i]));
    }
  }
  rtilde_table_ = num::MonotoneSpline(rtilde_nodes_, r_nodes_);
  check_invariants();
}

double RadialMaps::rstar_kerr(double r) const {
  const double rp = horizon_radii(params_, r_e_).r_plus;
  if (!(r > rp)) throw DomainError("r*_K needs r > r_+");
  const double M = params_.M;
  const double a2 = params_.a * params_.a;
  const double anchor = 10.0 * M;
  auto f = [&](double x) { return (x * x + a2) / (x * x - 2.0 * M * x + a2); };
  const num::QuadResult q = num::integrate(f, anchor, r, 1e-13);
  return rstar_schw(M, anchor) + q.value;
}

double RadialMaps::drstar_kerr(double r) const {
  const double a2 = params_.a * params_.a;
  return (r * r + a2) / (r * r - 2.0 * params_.M * r + a2);
}

double RadialMaps::mu(double r) const {
  const double M = params_.M;
  if (r >= 2.5 * M) return rstar_schw(M, r);
  const double at2M = mu_blend_end_ - M * blend_poly_int(0.5);
  if (r <= 2.0 * M) return at2M + (r - 2.0 * M);
  return at2M + M * blend_poly_int((r - 2.0 * M) / M);
}

double RadialMaps::dmu(double r) const {
  const double M = params_.M;
  if (r >= 2.5 * M) return r / (r - 2.0 * M);
  if (r <= 2.0 * M) return 1.0;
  return blend_poly((r - 2.0 * M) / M);
}

double RadialMaps::d2mu(double r) const {
  const double M = params_.M;
  if (r >= 2.5 * M) return -2.0 * M / sqr(r - 2.0 * M);
  if (r <= 2.0 * M) return 0.0;
  return blend_poly_d1((r - 2.0 * M) / M) / M;
}

double RadialMaps::rtilde(double r) const {
  if (r <= R_switch_) return r;
  const double S = num::smoothstep9((r - R_switch_) / R_switch_);
  return r + S * (rstar(r) - r);
}

double RadialMaps::drtilde(double r) const {
  if (r <= R_switch_) return 1.0;
  const double z = (r - R_switch_) / R_switch_;
  const double S = num::smoothstep9(z);
  const double dS = num::smoothstep9_d1(z) / R_switch_;
  return 1.0 + dS * (rstar(r) - r) + S * (drstar(r) - 1.0);
}

double RadialMaps::d2rtilde(double r) const {
  if (r <= R_switch_) return 0.0;
  const double M = params_.M;
  const double z = (r - R_switch_) / R_switch_;
  const double S = num::smoothstep9(z);
  const double dS = num::smoothstep9_d1(z) / R_switch_;
  const double d2S = num::smoothstep9_d2(z) / (R_switch_ * R_switch_);
  const double d2rs = -2.0 * M / sqr(r - 2.0 * M);
  return d2S * (rstar(r) - r) + 2.0 * dS * (drstar(r) - 1.0) + S * d2rs;
}

double RadialMaps::invert_rtilde(double value) const {
  if (!(value >= r_e_) || !(value <= rtilde_nodes_.back())) {
    throw DomainError("rtilde value " + fmt_double(value) + " outside map range [" +
                      fmt_double(r_e_) + ", " + fmt_double(rtilde_nodes_.back()) + "]");
  }
  if (value <= R_switch_) return value;
  const auto it = std::lower_bound(rtilde_nodes_.begin(), rtilde_nodes_.end(), value);
  const std::size_t hi = static_cast<std::size_t>(it - rtilde_nodes_.begin());
  if (rtilde_nodes_[hi] == value) return r_nodes_[hi];
  const std::size_t lo = hi == 0 ? 0 : hi - 1;
  auto f = [&](double r) { return rtilde(r) - value; };
  double r = num::find_root(f, r_nodes_[lo], r_nodes_[hi], 0.0);
  // One Newton polish step on the exact map.
  r -= f(r) / drtilde(r);
  return r;
}

void RadialMaps::check_invariants() const {
  const double M = params_.M;
  const double a = params_.a;
  const std::size_t n = 10000;
  std::vector<double> sample;
  sample.reserve(n);
  // Half the points resolve [r_e, 3M], half are log-spaced to r_max.
  for (std::size_t i = 0; i < n / 2; ++i) {
    sample.push_back(r_e_ + (3.0 * M - r_e_) * static_cast<double>(i) / (n / 2 - 1));
  }
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double t = static_cast<double>(i) / (n / 2 - 1);
    sample.push_back(3.0 * M * std::pow(r_max_ / (3.0 * M), t));
  }
  const double thetas[] = {0.0, 0.25 * num::kPi, 0.5 * num::kPi, 0.75 * num::kPi, num::kPi};
  const double rp = M + std::sqrt(M * M - a * a);
  for (double r : sample) {
    if (!(drtilde(r) > 0.0)) {
      throw ConstructionError("condition drtilde/dr > 0 fails at r = " + fmt_double(r));
    }
    if (!(dmu(r) > 0.0)) {
      throw ConstructionError("condition mu' > 0 fails at r = " + fmt_double(r));
    }
    for (double th : thetas) {
      const double rho2 = r * r + a * a * sqr(std::cos(th));
      if (!(2.0 - (1.0 - 2.0 * M * r / rho2) * dmu(r) > 0.0)) {
        throw ConstructionError("condition 2 - (1 - 2Mr/rho^2) mu' > 0 fails at r = " +
                                fmt_double(r));
      }
    }
    if (r > 2.0 * M && r <= 2.5 * M && !(mu(r) >= rstar(r) - 1e-12)) {
      throw ConstructionError("condition mu >= r* fails at r = " + fmt_double(r));
    }
    if (r >= 2.5 * M && mu(r) != rstar(r)) {
      throw ConstructionError("condition mu = r* beyond 5M/2 fails at r = " + fmt_double(r));
    }
    if (r <= R_switch_ && rtilde(r) != r) {
      throw ConstructionError("condition rtilde = r below R_switch fails");
    }
    if (r >= 2.0 * R_switch_ && rtilde(r) != rstar(r)) {
      throw ConstructionError("condition rtilde = r* beyond 2 R_switch fails");
    }
    if (r > rp && !(drstar_kerr(r) > 0.0)) {
      throw ConstructionError("condition dr*_K/dr > 0 fails at r = " + fmt_double(r));
    }
  }
  // Continuity of mu at the blend end.
  const double jump = std::abs(mu(2.5 * M * (1.0 - 1e-15)) - rstar(2.5 * M));
  if (!(jump <= 1e-10 * std::max(1.0, std::abs(rstar(2.5 * M))))) {
    throw ConstructionError("condition mu(5M/2) = r*(5M/2) fails");
  }
}

std::vector<KSDiffDecade> ks_difference_sweep(double M, double a, double r_lo, double r_hi,
                                              std::size_t per_decade, std::size_t n_theta) {
  const KerrParams kerr{M, a};
  const KerrParams schw{M, 0.0};
  std::vector<KSDiffDecade> out;
  double lo = r_lo;
  while (lo < r_hi * (1.0 - 1e-12)) {
    const double hi = std::min(lo * 10.0, r_hi);
    KSDiffDecade row;
    row.r_lo = lo;
    row.r_hi = hi;
    for (std::size_t i = 0; i < per_decade; ++i) {
      const double r = lo * std::pow(hi / lo, static_cast<double>(i) / per_decade);
      for (std::size_t j = 0; j < n_theta; ++j) {
        const double th = num::kPi * (j + 0.5) / n_theta;
        const MetricPoint k = bl_metric(kerr, r, th);
        const MetricPoint s = bl_metric(schw, r, th);
        const double s2 = sqr(std::sin(th));
        const double d[5] = {k.g_upper[0][0] - s.g_upper[0][0], k.g_upper[0][2] - s.g_upper[0][2],
                             k.g_upper[1][1] - s.g_upper[1][1], k.g_upper[3][3] - s.g_upper[3][3],
                             s2 * (k.g_upper[2][2] - s.g_upper[2][2])};
        for (int c = 0; c < 5; ++c) row.sup[c] = std::max(row.sup[c], r * r * std::abs(d[c]));
      }
    }
    out.push_back(row);
    lo = hi;
  }
  return out;
}

std::vector<CheckRow> geometry_checks(const KerrParams& params, const RadialMaps& maps,
                                      const GeometryCheckOptions& options) {
  const double M = params.M;
  const HorizonData h = horizon_radii(params, maps.r_e());
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto random_theta = [&] { return 0.01 + (num::kPi - 0.02) * unit(rng); };
  std::vector<CheckRow> rows;

  auto sweep_inverse = [&](const std::string& name, double r_lo, auto metric) {
    CheckRow row{name, 0, 0, 0, false};
    for (unsigned i = 0; i < options.random_points; ++i) {
      const double r = r_lo + (1000.0 * M - r_lo) * std::pow(unit(rng), 3.0);
      const double th = random_theta();
      const double res = inverse_residual(metric(r, th));
      if (res >= row.residual) row = {name, r, th, res, false};
    }
    row.pass = row.residual <= 1e-12;
    rows.push_back(row);
  };
  sweep_inverse("inverse_boyer_lindquist", h.r_plus + 1e-3 * M,
                [&](double r, double th) { return bl_metric(params, r, th); });
  sweep_inverse("inverse_kerr_star", h.r_e,
                [&](double r, double th) { return kerr_star_metric(params, r, th); });
  sweep_inverse("inverse_ttilde", h.r_e,
                [&](double r, double th) { return ttilde_star_metric(params, maps, r, th); });

  {
    CheckRow row{"ttilde_closed_form_inverse", 0, 0, 0, false};
    for (unsigned i = 0; i < options.random_points; ++i) {
      const double r = h.r_e + (1000.0 * M - h.r_e) * std::pow(unit(rng), 3.0);
      const double th = random_theta();
      const MetricPoint p = ttilde_star_metric(params, maps, r, th);
      const Mat4 u = ttilde_upper_closed_form(params, maps, r, th);
      double scale = 0.0;
      double diff = 0.0;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          scale = std::max(scale, std::abs(u[a][b]));
          diff = std::max(diff, std::abs(u[a][b] - p.g_upper[a][b]));
        }
      }
      const double res = diff / scale;
      if (res >= row.residual) row = {row.name, r, th, res, false};
    }
    row.pass = row.residual <= 1e-10;
    rows.push_back(row);
  }

  {
    CheckRow row{"schwarzschild_limit", 0, 0, 0, false};
    const KerrParams schw{M, 0.0};
    for (unsigned i = 0; i < options.random_points; ++i) {
      const double r = 2.0 * M * (1.0 + 1e-3) + 1000.0 * M * std::pow(unit(rng), 3.0);
      const double th = random_theta();
      const MetricPoint p = bl_metric(schw, r, th);
      const double f = 1.0 - 2.0 * M / r;
      const double s2 = sqr(std::sin(th));
      const double expect_lo[4] = {-f, 1.0 / f, r * r * s2, r * r};
      const double expect_up[4] = {-1.0 / f, f, 1.0 / (r * r * s2), 1.0 / (r * r)};
      double res = std::max(std::abs(p.g_lower[0][2]), std::abs(p.g_upper[0][2]));
      for (int k = 0; k < 4; ++k) {
        res = std::max(res, std::abs(p.g_lower[k][k] - expect_lo[k]) / std::abs(expect_lo[k]));
        res = std::max(res, std::abs(p.g_upper[k][k] - expect_up[k]) / std::abs(expect_up[k]));
      }
      if (res >= row.residual) row = {row.name, r, th, res, false};
    }
    row.pass = row.residual <= 1e-12;
    rows.push_back(row);
  }

  {
    // Slicing conditions on the full 2+1 grid.
    CheckRow spacelike{"slices_spacelike_max_g_tt_upper", 0, 0, -1e300, false};
    CheckRow dmu_row{"mu_prime_min", 0, 0, 1e300, false};
    CheckRow cond2{"two_minus_lapse_mu_prime_min", 0, 0, 1e300, false};
    CheckRow mu_geq{"mu_minus_rstar_min_on_blend", 0, 0, 1e300, false};
    for (std::size_t i = 0; i < options.n_r; ++i) {
      const double r =
          h.r_e + (options.r_out - h.r_e) * static_cast<double>(i) / (options.n_r - 1);
      const double mp = maps.dmu(r);
      if (mp < dmu_row.residual) dmu_row = {dmu_row.name, r, 0, mp, false};
      if (r > 2.0 * M && r <= 2.5 * M) {
        const double d = maps.mu(r) - maps.rstar(r);
        if (d < mu_geq.residual) mu_geq = {mu_geq.name, r, 0, d, false};
      }
      for (std::size_t j = 0; j < options.n_theta; ++j) {
        const double th = num::kPi * (j + 0.5) / options.n_theta;
        const MetricPoint p = ttilde_star_metric(params, maps, r, th);
        if (p.g_upper[0][0] > spacelike.residual) {
          spacelike = {spacelike.name, r, th, p.g_upper[0][0], false};
        }
        const auto [D, rho2] = delta_rho2(params, r, th);
        (void)D;
        const double c2 = 2.0 - (1.0 - 2.0 * M * r / rho2) * mp;
        if (c2 < cond2.residual) cond2 = {cond2.name, r, th, c2, false};
      }
    }
    spacelike.pass = spacelike.residual < 0.0;
    dmu_row.pass = dmu_row.residual > 0.0;
    cond2.pass = cond2.residual > 0.0;
    mu_geq.pass = mu_geq.residual >= -1e-12;
    rows.push_back(spacelike);
    rows.push_back(dmu_row);
    rows.push_back(cond2);
    rows.push_back(mu_geq);
    const double end_gap = std::abs(maps.mu(2.5 * M * (1.0 - 1e-15)) - maps.rstar(2.5 * M));
    rows.push_back({"mu_equals_rstar_at_5M_over_2", 2.5 * M, 0, end_gap, end_gap <= 1e-10});
  }

  {
    CheckRow row{"drtilde_min", 0, 0, 1e300, false};
    CheckRow rk{"drstar_kerr_min", 0, 0, 1e300, false};
    for (int i = 0; i <= 4000; ++i) {
      const double r = h.r_plus * (1.0 + 1e-6) * std::pow(1e4 * M / h.r_plus, i / 4000.0);
      if (maps.drtilde(r) < row.residual) row = {row.name, r, 0, maps.drtilde(r), false};
      if (maps.drstar_kerr(r) < rk.residual) rk = {rk.name, r, 0, maps.drstar_kerr(r), false};
    }
    row.pass = row.residual > 0.0;
    rk.pass = rk.residual > 0.0;
    rows.push_back(row);
    rows.push_back(rk);
  }

  {
    const auto decades = ks_difference_sweep(M, params.a, 10.0 * M, 1e4 * M);
    double sup = 0.0;
    for (const auto& d : decades) {
      for (double v : d.sup) sup = std::max(sup, v);
    }
    rows.push_back({"ksdiff_r2_sup_bounded", 10.0 * M, 0, sup, std::isfinite(sup)});
    // Non-increasing per component for decades starting at or beyond 100M.
    double worst_growth = 0.0;
    double worst_r = 0.0;
    for (std::size_t k = 1; k < decades.size(); ++k) {
      if (decades[k - 1].r_lo < 100.0 * M) continue;
      for (int c = 0; c < 5; ++c) {
        const double prev = decades[k - 1].sup[c];
        const double growth = prev > 0.0 ? decades[k].sup[c] / prev - 1.0 : 0.0;
        if (growth > worst_growth) {
          worst_growth = growth;
          worst_r = decades[k].r_lo;
        }
      }
    }
    rows.push_back({"ksdiff_r2_nonincreasing_beyond_100M", worst_r, 0, worst_growth,
                    worst_growth <= 1e-6});
  }
  return rows;
}

}  // namespace kerrdecay
