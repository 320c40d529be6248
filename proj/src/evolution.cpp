#include "kerrdecay/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace kerrdecay {

std::string engine_name(Engine engine) { return engine == Engine::E1 ? "E1" : "E2"; }

std::string outcome_name(Outcome outcome) {
  return outcome == Outcome::Completed ? "completed" : "blow-up";
}

double bump_profile(double z) {
  if (!(std::abs(z) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - z * z));
}

namespace {

// Values below this magnitude are set to zero after each step. They are far
// under every tolerance in use and would otherwise decay into subnormals
// ahead of the wave front, where arithmetic is very slow.
constexpr double kFlushFloor = 1e-250;

inline double ko6(const double* v, std::ptrdiff_t stride) {
  return v[-3 * stride] - 6.0 * v[-2 * stride] + 15.0 * v[-stride] - 20.0 * v[0] +
         15.0 * v[stride] - 6.0 * v[2 * stride] + v[3 * stride];
}

// First derivative used for norm evaluation and probes: 6th order in the
// interior, 4th and 2nd order next to the edges, first order at the edges.
double d1_norm(const double* v, std::ptrdiff_t stride, std::size_t i, std::size_t n, double h) {
  auto at = [&](std::ptrdiff_t k) { return v[(static_cast<std::ptrdiff_t>(i) + k) * stride]; };
  if (i >= 3 && i + 3 < n) {
    return (-at(-3) + 9.0 * at(-2) - 45.0 * at(-1) + 45.0 * at(1) - 9.0 * at(2) + at(3)) /
           (60.0 * h);
  }
  if (i >= 2 && i + 2 < n) return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
  if (i >= 1 && i + 1 < n) return (at(1) - at(-1)) / (2.0 * h);
  if (i == 0) return (at(1) - at(0)) / h;
  return (at(0) - at(-1)) / h;
}

void flush_small(std::vector<double>& v, std::size_t lo, std::size_t hi) {
  for (std::size_t i = lo; i <= hi; ++i) {
    if (std::abs(v[i]) < kFlushFloor) v[i] = 0.0;
  }
}

// First/last index with a nonzero entry in either array, or nullopt.
std::optional<std::pair<std::size_t, std::size_t>> nonzero_range(const std::vector<double>& a,
                                                                 const std::vector<double>& b) {
  const std::size_t n = a.size();
  std::size_t lo = n, hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != 0.0 || b[i] != 0.0) {
      lo = i;
      break;
    }
  }
  if (lo == n) return std::nullopt;
  for (std::size_t i = n; i-- > 0;) {
    if (a[i] != 0.0 || b[i] != 0.0) {
      hi = i;
      break;
    }
  }
  return std::make_pair(lo, hi);
}

void check_finite(const FieldSlice& s, std::size_t lo, std::size_t hi, std::size_t stride,
                  const std::function<double(std::size_t)>& location) {
  for (std::size_t k = lo * stride; k < (hi + 1) * stride; ++k) {
    if (!std::isfinite(s.phi[k]) || !std::isfinite(s.pi[k])) {
      const double where = location(k / stride);
      std::ostringstream msg;
      msg << "non-finite field at t = " << s.time << ", position " << where;
      throw BlowUpError(s.time, where, msg.str());
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- E1

Solver1D::Solver1D(double M, const Grid1D& grid, const Nonlinearity& nl, double ko_sigma,
                   double R_switch)
    : M_(M), grid_(grid), nl_(nl), ko_sigma_(ko_sigma), maps_(KerrParams{M, 0.0}, R_switch) {
  validate(nl);
  if (grid.n < 16 || !(grid.x_max > grid.x_min)) {
    throw ParameterError("Solver1D: grid needs at least 16 points and x_max > x_min");
  }
  if (!(ko_sigma >= 0.0)) throw ParameterError("Solver1D: ko_sigma must be non-negative");
  const std::size_t n = grid.n;
  r_.resize(n);
  f_.resize(n);
  V_.resize(n);
  nl_coef_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rm = std::exp(log_r_minus_2M_from_rstar(M, grid.x(i)));
    r_[i] = 2.0 * M + rm;
    f_[i] = rm / r_[i];
    V_[i] = rw_potential_from_f(M, r_[i], f_[i], 0);
    // d_t^2 psi = ... - r f sign (psi / r)^p
    nl_coef_[i] = -static_cast<double>(nl.sign) * f_[i] * num::ipow(r_[i], 1 - nl.p);
  }
  for (auto& k : k_) {
    k.phi.assign(n, 0.0);
    k.pi.assign(n, 0.0);
  }
  stage_.phi.assign(n, 0.0);
  stage_.pi.assign(n, 0.0);
  lo_ = n;
  hi_ = 0;
}

FieldSlice Solver1D::init_data(const InitialDataSpec& spec) const {
  const std::size_t n = grid_.n;
  if (!(spec.width > 0.0)) throw ParameterError("init_data: width must be positive");
  const double r_lo = r_[3];
  const double r_hi = r_[n - 4];
  if (spec.epsilon != 0.0 && (spec.center - spec.width <= r_lo || spec.center + spec.width >= r_hi)) {
    std::ostringstream msg;
    msg << "init_data: support [" << spec.center - spec.width << ", " << spec.center + spec.width
        << "] is clipped by the grid (r in [" << r_lo << ", " << r_hi << "])";
    throw DomainError(msg.str());
  }
  FieldSlice s;
  s.phi.assign(n, 0.0);
  s.pi.assign(n, 0.0);
  if (spec.epsilon == 0.0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    s.phi[i] = r_[i] * spec.epsilon * bump_profile((r_[i] - spec.center) / spec.width);
  }
  if (!spec.time_symmetric) {
    // Outgoing data: d_t psi = -d_r* psi.
    for (std::size_t i = 0; i < n; ++i) s.pi[i] = -d1_norm(s.phi.data(), 1, i, n, grid_.h());
  }
  return s;
}

void Solver1D::rhs_range(const FieldSlice& s, StateDerivative& out, std::size_t lo,
                         std::size_t hi) const {
  const std::size_t n = grid_.n;
  const double h = grid_.h();
  const double inv12h2 = 1.0 / (12.0 * h * h);
  const double invh2 = 1.0 / (h * h);
  const double ko = ko_sigma_ / (64.0 * h);
  const double* psi = s.phi.data();
  const double* pi = s.pi.data();
  const auto ilo = static_cast<std::ptrdiff_t>(lo);
  const auto ihi = static_cast<std::ptrdiff_t>(hi);
  const auto in = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = ilo; i <= ihi; ++i) {
    double dpsi = 0.0;
    double dpi = 0.0;
    if (i == 0) {
      // Ingoing advection u_t = u_x at the inner edge.
      dpsi = (-3.0 * psi[0] + 4.0 * psi[1] - psi[2]) / (2.0 * h);
      dpi = (-3.0 * pi[0] + 4.0 * pi[1] - pi[2]) / (2.0 * h);
    } else if (i == in - 1) {
      // Outgoing advection u_t = -u_x at the outer edge.
      dpsi = -(3.0 * psi[i] - 4.0 * psi[i - 1] + psi[i - 2]) / (2.0 * h);
      dpi = -(3.0 * pi[i] - 4.0 * pi[i - 1] + pi[i - 2]) / (2.0 * h);
    } else {
      double lap;
      if (i >= 2 && i <= in - 3) {
        lap = (-psi[i - 2] + 16.0 * psi[i - 1] - 30.0 * psi[i] + 16.0 * psi[i + 1] - psi[i + 2]) *
              inv12h2;
      } else {
        lap = (psi[i - 1] - 2.0 * psi[i] + psi[i + 1]) * invh2;
      }
      dpsi = pi[i];
      dpi = lap - V_[i] * psi[i];
      if (nl_.enabled) dpi += nl_coef_[i] * num::ipow(psi[i], nl_.p);
      if (i >= 3 && i <= in - 4) {
        dpsi += ko * ko6(psi + i, 1);
        dpi += ko * ko6(pi + i, 1);
      }
    }
    out.phi[i] = dpsi;
    out.pi[i] = dpi;
  }
}

void Solver1D::rhs(const FieldSlice& s, StateDerivative& out) const {
  out.phi.assign(grid_.n, 0.0);
  out.pi.assign(grid_.n, 0.0);
  rhs_range(s, out, 0, grid_.n - 1);
}

void Solver1D::update_active_range(const FieldSlice& s) {
  const auto nz = nonzero_range(s.phi, s.pi);
  if (!nz) return;
  // Four stages, each widening the support by the 7-point stencil reach.
  constexpr std::size_t reach = 12;
  const std::size_t n = grid_.n;
  const std::size_t lo = nz->first > reach ? nz->first - reach : 0;
  const std::size_t hi = std::min(n - 1, nz->second + reach);
  lo_ = std::min(lo_, lo);
  hi_ = std::max(hi_, hi);
}

void Solver1D::step(FieldSlice& s, double dt) {
  update_active_range(s);
  if (lo_ > hi_) {
    s.time += dt;
    return;
  }
  const std::size_t lo = lo_, hi = hi_;
  static constexpr double c[3] = {0.5, 0.5, 1.0};
  rhs_range(s, k_[0], lo, hi);
  for (int st = 0; st < 3; ++st) {
    const double a = c[st] * dt;
    for (std::size_t i = lo; i <= hi; ++i) {
      stage_.phi[i] = s.phi[i] + a * k_[st].phi[i];
      stage_.pi[i] = s.pi[i] + a * k_[st].pi[i];
    }
    rhs_range(stage_, k_[st + 1], lo, hi);
  }
  const double w = dt / 6.0;
  for (std::size_t i = lo; i <= hi; ++i) {
    s.phi[i] += w * (k_[0].phi[i] + 2.0 * k_[1].phi[i] + 2.0 * k_[2].phi[i] + k_[3].phi[i]);
    s.pi[i] += w * (k_[0].pi[i] + 2.0 * k_[1].pi[i] + 2.0 * k_[2].pi[i] + k_[3].pi[i]);
  }
  s.time += dt;
  check_finite(s, lo, hi, 1, [&](std::size_t i) { return grid_.x(i); });
  flush_small(s.phi, lo, hi);
  flush_small(s.pi, lo, hi);
}

Solver1D::Sample Solver1D::sample(const FieldSlice& s, double x) const {
  const std::size_t n = grid_.n;
  const double h = grid_.h();
  if (!(x >= grid_.x_min && x <= grid_.x_max)) throw DomainError("Solver1D::sample: x off grid");
  const auto i0 = static_cast<std::ptrdiff_t>(std::floor((x - grid_.x_min) / h));
  const auto first = static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(i0 - 2, 0, static_cast<std::ptrdiff_t>(n) - 6));
  double dx[6];
  for (std::size_t k = 0; k < 6; ++k) dx[k] = d1_norm(s.phi.data(), 1, first + k, n, h);
  Sample out;
  out.psi = num::lagrange_uniform(s.phi, grid_.x_min, h, first, 6, x);
  out.psi_t = num::lagrange_uniform(s.pi, grid_.x_min, h, first, 6, x);
  out.psi_x = num::lagrange_uniform(std::span<const double>(dx, 6),
                                    grid_.x_min + h * static_cast<double>(first), h, 0, 6, x);
  return out;
}

PointwiseSlice Solver1D::pointwise(const FieldSlice& s) const {
  const std::size_t n = grid_.n;
  const double h = grid_.h();
  PointwiseSlice p;
  p.resize(n);
  p.time = s.time;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = r_[i];
    const double trap = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
    p.weight[i] = 4.0 * num::kPi * r * r * h * trap;
    p.r[i] = r;
    p.rtilde[i] = maps_.rtilde(r);
    const double phi = s.phi[i] / r;
    const double phi_x = (d1_norm(s.phi.data(), 1, i, n, h) - f_[i] * s.phi[i] / r) / r;
    p.phi[i] = phi;
    p.dt[i] = s.pi[i] / r;
    p.grad2[i] = phi_x * phi_x;
    p.dv[i] = p.dt[i] + phi_x;
  }
  return p;
}

// ---------------------------------------------------------------- E2

namespace {

// One-sided 4th-order radial stencils at the first two points of an edge.
constexpr double kD1Edge0[5] = {-25.0, 48.0, -36.0, 16.0, -3.0};        // /12h, offsets 0..4
constexpr double kD1Edge1[5] = {-3.0, -10.0, 18.0, -6.0, 1.0};          // /12h, offsets -1..3
constexpr double kD2Edge0[6] = {45.0, -154.0, 214.0, -156.0, 61.0, -10.0};  // /12h^2, 0..5
constexpr double kD2Edge1[6] = {10.0, -15.0, -4.0, 14.0, -6.0, 1.0};        // /12h^2, -1..4

// Radial first and second derivative of a field stored with row stride `rs`
// at radial index i.
struct RadialStencil {
  std::size_t n;
  std::ptrdiff_t rs;
  double h;

  double d1(const double* v, std::size_t i) const {
    const auto at = [&](std::ptrdiff_t k) { return v[k * rs]; };
    if (i >= 2 && i + 2 < n) return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
    double s = 0.0;
    if (i == 0) {
      for (int k = 0; k < 5; ++k) s += kD1Edge0[k] * at(k);
    } else if (i == 1) {
      for (int k = 0; k < 5; ++k) s += kD1Edge1[k] * at(k - 1);
    } else if (i + 1 == n) {
      for (int k = 0; k < 5; ++k) s -= kD1Edge0[k] * at(-k);
    } else {
      for (int k = 0; k < 5; ++k) s -= kD1Edge1[k] * at(1 - k);
    }
    return s / (12.0 * h);
  }

  // Upwind-biased 4th-order first derivative (offsets -1..3) for regions
  // where every characteristic moves toward smaller r.
  double d1_up(const double* v, std::size_t i) const {
    const auto at = [&](std::ptrdiff_t k) { return v[k * rs]; };
    if (i + 3 >= n) return d1(v, i);
    double s = 0.0;
    if (i == 0) {
      for (int k = 0; k < 5; ++k) s += kD1Edge0[k] * at(k);
    } else {
      for (int k = 0; k < 5; ++k) s += kD1Edge1[k] * at(k - 1);
    }
    return s / (12.0 * h);
  }

  double d2(const double* v, std::size_t i) const {
    const auto at = [&](std::ptrdiff_t k) { return v[k * rs]; };
    if (i >= 2 && i + 2 < n) {
      return (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h * h);
    }
    double s = 0.0;
    if (i == 0) {
      for (int k = 0; k < 6; ++k) s += kD2Edge0[k] * at(k);
    } else if (i == 1) {
      for (int k = 0; k < 6; ++k) s += kD2Edge1[k] * at(k - 1);
    } else if (i + 1 == n) {
      for (int k = 0; k < 6; ++k) s += kD2Edge0[k] * at(-k);
    } else {
      for (int k = 0; k < 6; ++k) s += kD2Edge1[k] * at(1 - k);
    }
    return s / (12.0 * h * h);
  }
};

// Even reflection of a theta index across the axis cells.
inline std::size_t reflect(std::ptrdiff_t j, std::ptrdiff_t nt) {
  if (j < 0) return static_cast<std::size_t>(-1 - j);
  if (j >= nt) return static_cast<std::size_t>(2 * nt - 1 - j);
  return static_cast<std::size_t>(j);
}

}  // namespace

Solver2D::Solver2D(const KerrParams& params, const Grid2D& grid, const Nonlinearity& nl,
                   double ko_sigma, double R_switch)
    : params_(params),
      grid_(grid),
      nl_(nl),
      ko_sigma_(ko_sigma),
      maps_(params, R_switch, grid.r_min) {
  validate(nl);
  if (grid.n_r < 12) throw ParameterError("Solver2D: need at least 12 radial points");
  if (grid.n_theta < 4 || grid.n_theta % 2 != 0) {
    throw ParameterError("Solver2D: n_theta must be even and at least 4");
  }
  if (!(ko_sigma >= 0.0)) throw ParameterError("Solver2D: ko_sigma must be non-negative");
  if (std::abs(maps_.r_e() - grid.r_min) > 1e-12 * grid.r_min) {
    throw ParameterError("Solver2D: grid must start at the excision radius");
  }
  tables_ = build_axisym_tables(params, maps_, grid);
  // Excision is only valid if every characteristic leaves through r_e.
  for (std::size_t j = 0; j < grid.n_theta; ++j) {
    const auto sp = radial_characteristic_speeds(
        ttilde_star_metric(params, maps_, grid.r_min, grid.theta(static_cast<std::ptrdiff_t>(j))));
    if (!(sp.second < 0.0)) {
      throw ConstructionError("Solver2D: outgoing characteristic speed at r_e is not negative");
    }
  }
  outer_speed_.resize(grid.n_theta);
  for (std::size_t j = 0; j < grid.n_theta; ++j) {
    const auto sp = radial_characteristic_speeds(
        ttilde_star_metric(params, maps_, grid.r_max, grid.theta(static_cast<std::ptrdiff_t>(j))));
    outer_speed_[j] = sp.second;
  }
  for (std::size_t i = 0; i < grid.n_r; ++i) {
    bool inner = false;
    for (std::size_t j = 0; j < grid.n_theta; ++j) inner = inner || tables_.Arr[grid.idx(i, j)] < 0.0;
    if (!inner) break;
    n_inner_ = i + 1;
  }
  phi_r_.assign(grid.size(), 0.0);
  for (auto& k : k_) {
    k.phi.assign(grid.size(), 0.0);
    k.pi.assign(grid.size(), 0.0);
  }
  stage_.phi.assign(grid.size(), 0.0);
  stage_.pi.assign(grid.size(), 0.0);
}

double Solver2D::default_dt(double cfl) const {
  return cfl * std::min(grid_.h_r(), grid_.r_min * grid_.h_theta());
}

FieldSlice Solver2D::init_data(const InitialDataSpec& spec) const {
  if (!(spec.width > 0.0)) throw ParameterError("init_data: width must be positive");
  const double r_hi = grid_.r(static_cast<std::ptrdiff_t>(grid_.n_r) - 4);
  if (spec.epsilon != 0.0 && spec.center + spec.width >= r_hi) {
    std::ostringstream msg;
    msg << "init_data: support edge " << spec.center + spec.width
        << " is clipped by the outer grid edge (" << r_hi << ")";
    throw DomainError(msg.str());
  }
  FieldSlice s;
  s.phi.assign(grid_.size(), 0.0);
  s.pi.assign(grid_.size(), 0.0);
  if (spec.epsilon == 0.0) return s;
  const std::size_t nt = grid_.n_theta;
  for (std::size_t i = 0; i < grid_.n_r; ++i) {
    const double r = grid_.r(static_cast<std::ptrdiff_t>(i));
    const double v = spec.epsilon * bump_profile((r - spec.center) / spec.width);
    for (std::size_t j = 0; j < nt; ++j) s.phi[grid_.idx(i, j)] = v;
  }
  if (!spec.time_symmetric) {
    // Outgoing data: d_t (r phi) = -d_r (r phi).
    const double h = grid_.h_r();
    for (std::size_t i = 0; i < grid_.n_r; ++i) {
      const double r = grid_.r(static_cast<std::ptrdiff_t>(i));
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t k = grid_.idx(i, j);
        const double dr = d1_norm(s.phi.data() + j, static_cast<std::ptrdiff_t>(nt), i, grid_.n_r, h);
        s.pi[k] = -(dr + s.phi[k] / r);
      }
    }
  }
  return s;
}

void Solver2D::rhs(const FieldSlice& s, StateDerivative& out) const {
  const std::size_t nr = grid_.n_r;
  const std::size_t nt = grid_.n_theta;
  if (out.phi.size() != grid_.size()) {
    out.phi.assign(grid_.size(), 0.0);
    out.pi.assign(grid_.size(), 0.0);
  }
  const double hr = grid_.h_r();
  const double ht = grid_.h_theta();
  const double ko_r = ko_sigma_ / (64.0 * hr);
  const double ko_t = ko_sigma_ / (64.0 * ht);
  const RadialStencil rad{nr, static_cast<std::ptrdiff_t>(nt), hr};
  const auto nti = static_cast<std::ptrdiff_t>(nt);
  const std::size_t i_hi = std::min(nr - 1, hi_ == 0 ? nr - 1 : hi_);
  const auto ihi = static_cast<std::ptrdiff_t>(i_hi);
  const auto& T = tables_;
  if (phi_r_.size() != grid_.size()) phi_r_.assign(grid_.size(), 0.0);
  // First radial derivative on the rows that feed the composed stencil.
  const std::size_t n_pre = std::min(nr, n_inner_ + 4);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_pre); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = grid_.idx(i, j);
      phi_r_[k] = rad.d1_up(s.phi.data() + k, i);
    }
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii <= ihi; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double r = grid_.r(ii);
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = grid_.idx(i, j);
      const double* phi = s.phi.data() + k;
      const double* pi = s.pi.data() + k;
      const auto jj = static_cast<std::ptrdiff_t>(j);
      // theta neighbours through the axis reflection
      double ph[7], pt[7];
      for (int m = -3; m <= 3; ++m) {
        const std::size_t km = grid_.idx(i, reflect(jj + m, nti));
        ph[m + 3] = s.phi[km];
        pt[m + 3] = s.pi[km];
      }
      const bool inner = i < n_inner_;
      const double phi_r = inner ? phi_r_[k] : rad.d1(phi, i);
      const double pi_r = inner ? rad.d1_up(pi, i) : rad.d1(pi, i);
      double dphi, dpi;
      if (i + 1 == nr) {
        // Sommerfeld condition on r phi at the outer edge.
        const double v = outer_speed_[j];
        dphi = -v * (phi_r + phi[0] / r);
        dpi = -v * (pi_r + pi[0] / r);
      } else {
        const double phi_rr = inner ? rad.d1_up(phi_r_.data() + k, i) : rad.d2(phi, i);
        const double phi_t = (ph[1] - 8.0 * ph[2] + 8.0 * ph[4] - ph[5]) / (12.0 * ht);
        const double phi_tt =
            (-ph[1] + 16.0 * ph[2] - 30.0 * ph[3] + 16.0 * ph[4] - ph[5]) / (12.0 * ht * ht);
        const double src = apply_nonlinearity(nl_, phi[0]);
        dphi = pi[0];
        dpi = T.inv_Att[k] * (src - T.Arr[k] * phi_rr - T.Athth[k] * phi_tt -
                              2.0 * T.Atr[k] * pi_r - T.bt[k] * pi[0] - T.br[k] * phi_r -
                              T.bth[k] * phi_t);
      }
      if (i >= 3 && i + 4 <= nr) {
        dphi += ko_r * ko6(phi, nti);
        dpi += ko_r * ko6(pi, nti);
      }
      dphi += ko_t * ko6(ph + 3, 1);
      dpi += ko_t * ko6(pt + 3, 1);
      out.phi[k] = dphi;
      out.pi[k] = dpi;
    }
  }
}

void Solver2D::update_active_range(const FieldSlice& s) {
  const auto nz = nonzero_range(s.phi, s.pi);
  if (!nz) return;
  const std::size_t last_row = nz->second / grid_.n_theta;
  hi_ = std::max(hi_, std::min(grid_.n_r - 1, last_row + 12));
}

void Solver2D::step(FieldSlice& s, double dt) {
  update_active_range(s);
  if (hi_ == 0) {
    s.time += dt;
    return;
  }
  const std::size_t end = (hi_ + 1) * grid_.n_theta;
  static constexpr double c[3] = {0.5, 0.5, 1.0};
  rhs(s, k_[0]);
  for (int st = 0; st < 3; ++st) {
    const double a = c[st] * dt;
    for (std::size_t k = 0; k < end; ++k) {
      stage_.phi[k] = s.phi[k] + a * k_[st].phi[k];
      stage_.pi[k] = s.pi[k] + a * k_[st].pi[k];
    }
    rhs(stage_, k_[st + 1]);
  }
  const double w = dt / 6.0;
  for (std::size_t k = 0; k < end; ++k) {
    s.phi[k] += w * (k_[0].phi[k] + 2.0 * k_[1].phi[k] + 2.0 * k_[2].phi[k] + k_[3].phi[k]);
    s.pi[k] += w * (k_[0].pi[k] + 2.0 * k_[1].pi[k] + 2.0 * k_[2].pi[k] + k_[3].pi[k]);
  }
  s.time += dt;
  check_finite(s, 0, hi_, grid_.n_theta,
               [&](std::size_t i) { return grid_.r(static_cast<std::ptrdiff_t>(i)); });
  flush_small(s.phi, 0, end - 1);
  flush_small(s.pi, 0, end - 1);
}

Solver2D::Sample Solver2D::sample(const FieldSlice& s, double r) const {
  const std::size_t nr = grid_.n_r;
  const std::size_t nt = grid_.n_theta;
  const double hr = grid_.h_r();
  if (!(r >= grid_.r_min && r <= grid_.r_max)) throw DomainError("Solver2D::sample: r off grid");
  const std::size_t jc = nt / 2 - 1;  // theta = pi/2 lies between jc and jc + 1
  auto equator = [&](const std::vector<double>& v, std::size_t i) {
    return (-v[grid_.idx(i, jc - 1)] + 9.0 * v[grid_.idx(i, jc)] + 9.0 * v[grid_.idx(i, jc + 1)] -
            v[grid_.idx(i, jc + 2)]) /
           16.0;
  };
  const auto i0 = static_cast<std::ptrdiff_t>(std::floor((r - grid_.r_min) / hr));
  const auto first = static_cast<std::size_t>(
      std::clamp<std::ptrdiff_t>(i0 - 2, 0, static_cast<std::ptrdiff_t>(nr) - 6));
  // Equatorial rows over a window wide enough for the derivative stencils.
  const std::size_t w_lo = first >= 3 ? first - 3 : 0;
  const std::size_t w_hi = std::min(nr - 1, first + 8);
  std::vector<double> row_phi(w_hi - w_lo + 1), row_pi(w_hi - w_lo + 1);
  for (std::size_t i = w_lo; i <= w_hi; ++i) {
    row_phi[i - w_lo] = equator(s.phi, i);
    row_pi[i - w_lo] = equator(s.pi, i);
  }
  double dr[6], ph[6], pt[6];
  for (std::size_t k = 0; k < 6; ++k) {
    const std::size_t i = first + k;
    ph[k] = row_phi[i - w_lo];
    pt[k] = row_pi[i - w_lo];
    // derivative with global-edge awareness
    if (i >= 2 && i + 2 < nr) {
      const double* p = row_phi.data() + (i - w_lo);
      dr[k] = (p[-2] - 8.0 * p[-1] + 8.0 * p[1] - p[2]) / (12.0 * hr);
    } else {
      const RadialStencil rad{nr, 1, hr};
      dr[k] = rad.d1(row_phi.data() + (i - w_lo), i);
    }
  }
  const double x0 = grid_.r(static_cast<std::ptrdiff_t>(first));
  Sample out;
  out.phi = num::lagrange_uniform(std::span<const double>(ph, 6), x0, hr, 0, 6, r);
  out.phi_t = num::lagrange_uniform(std::span<const double>(pt, 6), x0, hr, 0, 6, r);
  out.phi_r = num::lagrange_uniform(std::span<const double>(dr, 6), x0, hr, 0, 6, r);
  return out;
}

PointwiseSlice Solver2D::pointwise(const FieldSlice& s) const {
  const std::size_t nr = grid_.n_r;
  const std::size_t nt = grid_.n_theta;
  const double hr = grid_.h_r();
  const double ht = grid_.h_theta();
  const auto nti = static_cast<std::ptrdiff_t>(nt);
  PointwiseSlice p;
  p.resize(grid_.size());
  p.time = s.time;
  for (std::size_t i = 0; i < nr; ++i) {
    const double r = grid_.r(static_cast<std::ptrdiff_t>(i));
    const double rt = maps_.rtilde(r);
    const double drt = maps_.drtilde(r);
    const double trap = (i == 0 || i + 1 == nr) ? 0.5 : 1.0;
    for (std::size_t j = 0; j < nt; ++j) {
      const std::size_t k = grid_.idx(i, j);
      const double th = grid_.theta(static_cast<std::ptrdiff_t>(j));
      const DeltaRho2 dr2 = delta_rho2(params_, r, th);
      const auto jj = static_cast<std::ptrdiff_t>(j);
      double ph[7];
      for (int m = -3; m <= 3; ++m) ph[m + 3] = s.phi[grid_.idx(i, reflect(jj + m, nti))];
      const double phi_th =
          (-ph[0] + 9.0 * ph[1] - 45.0 * ph[2] + 45.0 * ph[4] - 9.0 * ph[5] + ph[6]) / (60.0 * ht);
      const double phi_r = d1_norm(s.phi.data() + j, nti, i, nr, hr);
      p.weight[k] = 2.0 * num::kPi * dr2.rho2 * std::sin(th) * hr * ht * trap;
      p.r[k] = r;
      p.rtilde[k] = rt;
      p.phi[k] = s.phi[k];
      p.dt[k] = s.pi[k];
      p.slash2[k] = phi_th * phi_th / (r * r);
      p.grad2[k] = phi_r * phi_r + p.slash2[k];
      p.dv[k] = s.pi[k] + phi_r / drt;
    }
  }
  return p;
}

double Solver2D::axis_derivative_max(const FieldSlice& s) const {
  // One-sided derivative at theta = 0 and pi from the first four cells,
  // without using the reflection: weights of the cubic through
  // theta = h/2, 3h/2, 5h/2, 7h/2 differentiated at 0.
  static constexpr double w[4] = {-71.0 / 24.0, 47.0 / 8.0, -31.0 / 8.0, 23.0 / 24.0};
  const std::size_t nt = grid_.n_theta;
  const double ht = grid_.h_theta();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid_.n_r; ++i) {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
      d0 += w[m] * s.phi[grid_.idx(i, m)];
      d1 += w[m] * s.phi[grid_.idx(i, nt - 1 - m)];
    }
    worst = std::max({worst, std::abs(d0) / ht, std::abs(d1) / ht});
  }
  return worst;
}

// ---------------------------------------------------------------- driver

void validate(const EvolutionConfig& c) {
  std::vector<std::string> errs;
  try {
    validate(c.params);
  } catch (const std::exception& e) {
    errs.emplace_back(e.what());
  }
  try {
    validate(c.nl);
  } catch (const std::exception& e) {
    errs.emplace_back(e.what());
  }
  if (c.engine == Engine::E1 && c.params.a != 0.0) errs.emplace_back("E1 requires a = 0");
  if (!(c.T_final > 0.0)) errs.emplace_back("T_final must be positive");
  if (!(c.dt_out > 0.0)) {
    errs.emplace_back("dt_out must be positive");
  } else {
    const double q = c.T_final / c.dt_out;
    if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q)) {
      errs.emplace_back("T_final must be a multiple of dt_out");
    }
    for (double t : c.cut_times) {
      const double qt = t / c.dt_out;
      if (t < 0.0 || t > c.T_final || std::abs(qt - std::round(qt)) > 1e-9 * std::max(1.0, qt)) {
        errs.emplace_back("cut time " + std::to_string(t) + " is not an output time");
      }
    }
    for (double t : c.snapshot_times) {
      const double qt = t / c.dt_out;
      if (t < 0.0 || t > c.T_final || std::abs(qt - std::round(qt)) > 1e-9 * std::max(1.0, qt)) {
        errs.emplace_back("snapshot time " + std::to_string(t) + " is not an output time");
      }
    }
  }
  if (c.cfl < 0.0 || c.cfl > 1.0) errs.emplace_back("cfl must lie in [0, 1]");
  if (!(c.ko_sigma >= 0.0)) errs.emplace_back("ko_sigma must be non-negative");
  if (!(c.data.width > 0.0)) errs.emplace_back("data width must be positive");
  if (c.data.center + c.data.width > c.R1 + 1e-12) {
    errs.emplace_back("data support (center + width) exceeds R1");
  }
  for (double g : c.gammas) {
    if (!(g > 0.0 && g < 2.0)) errs.emplace_back("gamma " + std::to_string(g) + " outside (0, 2)");
  }
  if (c.engine == Engine::E1) {
    if (!(c.h > 0.0) || !(c.rstar_max > c.rstar_min)) {
      errs.emplace_back("E1 grid needs h > 0 and rstar_max > rstar_min");
    } else {
      const double M = c.params.M;
      const double x_hi = rstar_schw(M, c.R1);
      if (c.R1 <= 2.0 * M) {
        errs.emplace_back("R1 must exceed 2M for E1");
      } else if (x_hi + 3.0 * c.h >= c.rstar_max) {
        errs.emplace_back("R1 beyond grid: r*(R1) exceeds rstar_max");
      }
      for (double x : c.probe_x) {
        if (x <= c.rstar_min + 3.0 * c.h || x >= c.rstar_max - 3.0 * c.h) {
          errs.emplace_back("probe r* = " + std::to_string(x) + " outside the grid");
        }
      }
      // Causal padding: outer boundary light ray must not return to the
      // support before T_final.
      if (2.0 * c.rstar_max - 2.0 * x_hi < c.T_final) {
        errs.emplace_back("rstar_max too small for causal padding at T_final");
      }
    }
  } else {
    if (!(c.h_r > 0.0)) errs.emplace_back("h_r must be positive");
    if (c.n_theta < 4 || c.n_theta % 2 != 0) errs.emplace_back("n_theta must be even and >= 4");
    try {
      const HorizonData hd = horizon_radii(c.params, c.r_e);
      if (!(c.r_out > c.R1 + 3.0 * c.h_r)) errs.emplace_back("R1 beyond grid: R1 exceeds r_out");
      for (double x : c.probe_x) {
        if (x <= hd.r_e || x >= c.r_out) {
          errs.emplace_back("probe r = " + std::to_string(x) + " outside the grid");
        }
      }
    } catch (const std::exception& e) {
      errs.emplace_back(e.what());
    }
  }
  if (!errs.empty()) {
    std::string msg = "invalid evolution config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ParameterError(msg);
  }
}

namespace {

bool is_time(const std::vector<double>& times, double t) {
  for (double x : times) {
    if (std::abs(x - t) <= 1e-9 * std::max(1.0, std::abs(t))) return true;
  }
  return false;
}

template <class Solver>
void record_norms(const Solver& solver, const FieldSlice& s, const EvolutionConfig& c,
                  double M, EvolutionResult& res) {
  const PointwiseSlice p = solver.pointwise(s);
  NormSample ns;
  ns.t = s.time;
  ns.E = energy(p);
  for (double g : c.gammas) ns.E_gamma.push_back(energy_gamma(p, g));
  res.norms.push_back(std::move(ns));
  res.le.add(annulus_integrals(p, M, c.nl));
}

}  // namespace

EvolutionResult evolve(const EvolutionConfig& c) {
  validate(c);
  EvolutionResult res;
  const double M = c.params.M;
  const auto wall0 = std::chrono::steady_clock::now();
  double last_report = 0.0;
  const auto n_out = static_cast<std::size_t>(std::llround(c.T_final / c.dt_out));

  auto run = [&](auto& solver, double dt_max, auto&& emit_probes, auto&& make_cut) {
    const auto sub = static_cast<std::size_t>(std::ceil(c.dt_out / dt_max - 1e-12));
    const double dt = c.dt_out / static_cast<double>(sub);
    res.dt = dt;
    FieldSlice s = solver.init_data(c.data);
    auto output = [&](std::size_t k) {
      s.time = static_cast<double>(k) * c.dt_out;
      emit_probes(s);
      if (c.monitor_norms) record_norms(solver, s, c, M, res);
      if (is_time(c.cut_times, s.time)) res.cuts.push_back(make_cut(s));
      if (is_time(c.snapshot_times, s.time)) res.snapshots.push_back(s);
    };
    output(0);
    for (std::size_t k = 1; k <= n_out; ++k) {
      for (std::size_t m = 0; m < sub; ++m) {
        try {
          solver.step(s, dt);
        } catch (const BlowUpError& e) {
          res.outcome = Outcome::BlowUp;
          res.blowup_time = e.time;
          res.blowup_location = e.location;
          res.message = e.what();
          res.final_time = e.time;
          return;
        }
        ++res.steps;
      }
      output(k);
      res.final_time = s.time;
      if (c.progress) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
        if (wall - last_report >= c.progress_interval || k == n_out) {
          last_report = wall;
          c.progress(s.time, wall);
        }
      }
    }
  };

  if (c.engine == Engine::E1) {
    const auto n = static_cast<std::size_t>(std::llround((c.rstar_max - c.rstar_min) / c.h)) + 1;
    Solver1D solver(M, Grid1D{c.rstar_min, c.rstar_max, n}, c.nl, c.ko_sigma, c.R_switch);
    const Grid1D& g = solver.grid();
    const double x_lo = rstar_schw(M, std::max(c.data.center - c.data.width, 2.0 * M + 1e-9));
    const double x_hi = rstar_schw(M, c.data.center + c.data.width);
    int id = 0;
    for (double x : c.probe_x) {
      StationInfo st{id++, StationKind::Interior, x, 0.0};
      st.clean_until = std::min((x_lo - g.x_min) + (x - g.x_min), (g.x_max - x_hi) + (g.x_max - x));
      res.stations.push_back(st);
    }
    for (double u : c.probe_u) {
      StationInfo st{id++, StationKind::Cone, u, 0.0};
      st.clean_until = u <= x_lo - 2.0 * g.x_min ? 0.5 * (2.0 * g.x_max - x_hi + u) : 0.0;
      res.stations.push_back(st);
    }
    const double dt_max = solver.default_dt(c.cfl > 0.0 ? c.cfl : 0.5);
    const double margin = 3.0 * g.h();
    auto emit = [&](const FieldSlice& s) {
      for (const auto& st : res.stations) {
        double x = st.position;
        if (st.kind == StationKind::Cone) {
          const double rt = s.time - st.position;
          if (rt < 3.0 * M) continue;
          x = rstar_schw(M, solver.maps().invert_rtilde(rt));
        }
        if (x < g.x_min + margin || x > g.x_max - margin) continue;
        const auto v = solver.sample(s, x);
        const double rm = std::exp(log_r_minus_2M_from_rstar(M, x));
        const double r = 2.0 * M + rm;
        const double f = rm / r;
        res.probes.push_back({s.time, st.id, v.psi / r, v.psi_t / r, v.psi_x / (f * r) - v.psi / (r * r)});
      }
    };
    auto cut = [&](const FieldSlice& s) {
      RadialCut rc;
      rc.t = s.time;
      for (std::size_t i = 0; i < g.n; ++i) {
        const double r = solver.r()[i];
        rc.r.push_back(r);
        rc.rtilde.push_back(solver.maps().rtilde(r));
        rc.phi.push_back(s.phi[i] / r);
        rc.dphi_dt.push_back(s.pi[i] / r);
        const double x = g.x(i);
        const double until = std::min((x_lo - g.x_min) + (x - g.x_min), (g.x_max - x_hi) + (g.x_max - x));
        rc.clean.push_back(s.time <= until ? 1 : 0);
      }
      return rc;
    };
    run(solver, dt_max, emit, cut);
  } else {
    const HorizonData hd = horizon_radii(c.params, c.r_e);
    const auto n_r = static_cast<std::size_t>(std::llround((c.r_out - hd.r_e) / c.h_r)) + 1;
    Solver2D solver(c.params, Grid2D{hd.r_e, c.r_out, n_r, c.n_theta}, c.nl, c.ko_sigma,
                    c.R_switch);
    const Grid2D& g = solver.grid();
    const RadialMaps& maps = solver.maps();
    const double rt_out = maps.rtilde(g.r_max);
    const double rt_hi = maps.rtilde(c.data.center + c.data.width);
    // Coordinate light speed in rtilde is 1 far out; 10% slack for the
    // interior region.
    constexpr double kSlack = 0.9;
    int id = 0;
    for (double x : c.probe_x) {
      StationInfo st{id++, StationKind::Interior, x, 0.0};
      st.clean_until = kSlack * (2.0 * rt_out - rt_hi - maps.rtilde(x));
      res.stations.push_back(st);
    }
    for (double u : c.probe_u) {
      StationInfo st{id++, StationKind::Cone, u, 0.0};
      st.clean_until = kSlack * 0.5 * (2.0 * rt_out - rt_hi + u);
      res.stations.push_back(st);
    }
    const double dt_max = solver.default_dt(c.cfl > 0.0 ? c.cfl : 0.25);
    const double margin = 3.0 * g.h_r();
    auto emit = [&](const FieldSlice& s) {
      for (const auto& st : res.stations) {
        double r = st.position;
        if (st.kind == StationKind::Cone) {
          const double rt = s.time - st.position;
          if (rt < maps.rtilde(g.r_min + margin)) continue;
          r = maps.invert_rtilde(rt);
        }
        if (r < g.r_min + margin || r > g.r_max - margin) continue;
        const auto v = solver.sample(s, r);
        res.probes.push_back({s.time, st.id, v.phi, v.phi_t, v.phi_r});
      }
    };
    auto cut = [&](const FieldSlice& s) {
      RadialCut rc;
      rc.t = s.time;
      for (std::size_t i = 0; i < g.n_r; ++i) {
        const double r = g.r(static_cast<std::ptrdiff_t>(i));
        const auto v = solver.sample(s, r);
        rc.r.push_back(r);
        rc.rtilde.push_back(maps.rtilde(r));
        rc.phi.push_back(v.phi);
        rc.dphi_dt.push_back(v.phi_t);
        rc.clean.push_back(s.time <= kSlack * (2.0 * rt_out - rt_hi - maps.rtilde(r)) ? 1 : 0);
      }
      return rc;
    };
    run(solver, dt_max, emit, cut);
  }
  return res;
}

std::vector<ProbeSample> station_series(const EvolutionResult& result, int station) {
  std::vector<ProbeSample> out;
  for (const auto& p : result.probes) {
    if (p.station == station) out.push_back(p);
  }
  return out;
}

}  // namespace kerrdecay
