#include "kerrdecay/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kerrdecay {

namespace {

// Upper t-tilde components without the domain check, plus the signed density
// rho^2 sin(theta) (odd across the axis, so ghost values stay smooth).
struct UpperPoint {
  Mat4 g;
  double sigma;
};

UpperPoint upper_point(const KerrParams& params, const RadialMaps& maps, double r,
                       double theta) {
  double residual = 0.0;
  UpperPoint p;
  p.g = invert4(ttilde_star_lower(params, maps, r, theta), &residual);
  if (!(residual <= 1e-10)) throw ConstructionError("metric inversion failed in coefficients");
  p.sigma = delta_rho2(params, r, theta).rho2 * std::sin(theta);
  return p;
}

template <class F>
double d6(F&& f, double x, double h) {
  return num::diff6(std::forward<F>(f), x, h);
}

double lebesgue_density(const RadialMaps& maps, double r, double theta) {
  const double rt = maps.rtilde(r);
  return rt * rt * maps.drtilde(r) * std::sin(theta);
}

}  // namespace

double rw_potential(double M, double r, int ell) {
  if (!(r > 0.0)) throw DomainError("rw_potential needs r > 0");
  return rw_potential_from_f(M, r, 1.0 - 2.0 * M / r, ell);
}

double rw_potential_from_f(double M, double r, double f, int ell) {
  return f * (ell * (ell + 1) / (r * r) + 2.0 * M / (r * r * r));
}

void validate(const Nonlinearity& nl) {
  if (nl.p < 3) throw ParameterError("nonlinearity power p must be an integer >= 3");
  if (nl.sign != 1 && nl.sign != -1) throw ParameterError("nonlinearity sign must be +1 or -1");
}

WaveOpCoeffs axisym_coeffs(const KerrParams& params, const RadialMaps& maps, double r,
                           double theta, double h_r, double h_theta) {
  if (r - 3.0 * h_r < maps.r_e() * 0.5) {
    throw DomainError("coefficient stencil leaves the table range near r_e");
  }
  const UpperPoint p = upper_point(params, maps, r, theta);
  WaveOpCoeffs c;
  c.chart = Chart::TtildeStar;
  c.Att = p.g[0][0];
  c.Atr = p.g[0][1];
  c.Arr = p.g[1][1];
  c.Athth = p.g[3][3];
  auto dens_r = [&](int a, int b) {
    return [&, a, b](double x) {
      const UpperPoint q = upper_point(params, maps, x, theta);
      return q.sigma * q.g[a][b];
    };
  };
  auto dens_th = [&](int a, int b) {
    return [&, a, b](double x) {
      const UpperPoint q = upper_point(params, maps, r, x);
      return q.sigma * q.g[a][b];
    };
  };
  c.bt = d6(dens_r(1, 0), r, h_r) / p.sigma;
  c.br = d6(dens_r(1, 1), r, h_r) / p.sigma;
  c.bth = d6(dens_th(3, 3), theta, h_theta) / p.sigma;
  return c;
}

WaveOpCoeffs axisym_coeffs_closed_form(const KerrParams& params, const RadialMaps& maps,
                                       double r, double theta) {
  const double M = params.M;
  const double a = params.a;
  const auto [D, rho2] = delta_rho2(params, r, theta);
  const double mp = maps.dmu(r);
  const double mpp = maps.d2mu(r);
  const Mat4 u = ttilde_upper_closed_form(params, maps, r, theta);
  WaveOpCoeffs c;
  c.Att = u[0][0];
  c.Atr = u[0][1];
  c.Arr = u[1][1];
  c.Athth = u[3][3];
  c.bt = (2.0 * r - mpp * D - mp * (2.0 * r - 2.0 * M)) / rho2;
  c.br = (2.0 * r - 2.0 * M) / rho2;
  c.bth = std::cos(theta) / (rho2 * std::sin(theta));
  (void)a;
  return c;
}

double conjugation_potential(const KerrParams& params, const RadialMaps& maps, double r,
                             double theta) {
  auto F = [&](double x, double th) {
    const UpperPoint q = upper_point(params, maps, x, th);
    const double w = lebesgue_density(maps, x, th);
    return std::sqrt(w / (q.sigma * -q.g[0][0]));
  };
  const double hr = std::min(0.02 * r, 0.05 * (r - maps.r_e()) + 1e-3);
  const double ht = 1e-2;
  const WaveOpCoeffs b = axisym_coeffs_closed_form(params, maps, r, theta);
  const double F0 = F(r, theta);
  auto Fr = [&](double x) { return F(x, theta); };
  auto Ft = [&](double x) { return F(r, x); };
  const double dFr = d6(Fr, r, hr);
  const double dFt = d6(Ft, theta, ht);
  auto d2 = [](auto&& f, double x, double h) {
    // 6th-order centered second derivative.
    return (2.0 * f(x - 3 * h) - 27.0 * f(x - 2 * h) + 270.0 * f(x - h) - 490.0 * f(x) +
            270.0 * f(x + h) - 27.0 * f(x + 2 * h) + 2.0 * f(x + 3 * h)) /
           (180.0 * h * h);
  };
  const double boxF = b.Arr * d2(Fr, r, hr) + b.Athth * d2(Ft, theta, ht) + b.br * dFr +
                      b.bth * dFt;
  return boxF / (F0 * -b.Att);
}

WaveOpCoeffs conjugated_coeffs(const KerrParams& params, const RadialMaps& maps, double r,
                               double theta, double h_r, double h_theta) {
  const UpperPoint p = upper_point(params, maps, r, theta);
  const double c = 1.0 / -p.g[0][0];
  WaveOpCoeffs out;
  out.chart = Chart::TtildeStar;
  out.Att = -1.0;
  out.Atr = p.g[0][1] * c;
  out.Arr = p.g[1][1] * c;
  out.Athth = p.g[3][3] * c;
  const double w0 = lebesgue_density(maps, r, theta);
  auto dens_r = [&](int a, int b) {
    return [&, a, b](double x) {
      const UpperPoint q = upper_point(params, maps, x, theta);
      return lebesgue_density(maps, x, theta) * q.g[a][b] / -q.g[0][0];
    };
  };
  auto dens_th = [&](int a, int b) {
    return [&, a, b](double x) {
      const UpperPoint q = upper_point(params, maps, r, x);
      return lebesgue_density(maps, r, x) * q.g[a][b] / -q.g[0][0];
    };
  };
  out.bt = d6(dens_r(1, 0), r, h_r) / w0;
  out.br = d6(dens_r(1, 1), r, h_r) / w0;
  out.bth = d6(dens_th(3, 3), theta, h_theta) / w0;
  out.c = conjugation_potential(params, maps, r, theta);
  return out;
}

AxisymTables build_axisym_tables(const KerrParams& params, const RadialMaps& maps,
                                 const Grid2D& grid) {
  if (grid.n_r < 8 || grid.n_theta < 2 || grid.n_theta % 2 != 0) {
    throw ParameterError("2+1 grid needs n_r >= 8 and an even n_theta >= 2");
  }
  // First-order coefficients come from 6th-order differences on a table much
  // finer than the evolution grid, so the slicing blend on [2M, 5M/2] is
  // resolved independently of the evolution resolution.
  const double h_fine_r = 1e-3 * params.M;
  const double h_fine_t = 1e-3;
  AxisymTables t;
  t.grid = grid;
  const std::size_t n = grid.size();
  for (auto* v : {&t.Att, &t.Atr, &t.Arr, &t.Athth, &t.bt, &t.br, &t.bth, &t.inv_Att}) {
    v->assign(n, 0.0);
  }
  const auto nr = static_cast<std::ptrdiff_t>(grid.n_r);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < grid.n_theta; ++j) {
      const WaveOpCoeffs c = axisym_coeffs(params, maps, grid.r(i),
                                           grid.theta(static_cast<std::ptrdiff_t>(j)),
                                           h_fine_r, h_fine_t);
      const std::size_t o = grid.idx(static_cast<std::size_t>(i), j);
      t.Att[o] = c.Att;
      t.Atr[o] = c.Atr;
      t.Arr[o] = c.Arr;
      t.Athth[o] = c.Athth;
      t.bt[o] = c.bt;
      t.br[o] = c.br;
      t.bth[o] = c.bth;
      t.inv_Att[o] = 1.0 / c.Att;
    }
  }
  for (std::size_t o = 0; o < n; ++o) {
    if (!(t.Att[o] < 0.0)) {
      throw ConstructionError("slicing error: g^tt >= 0 at r = " +
                              std::to_string(grid.r(static_cast<std::ptrdiff_t>(o / grid.n_theta))));
    }
  }
  return t;
}

std::pair<double, double> radial_characteristic_speeds(const MetricPoint& point) {
  // Surfaces r - v t = const are characteristic when
  // g^tt v^2 - 2 g^tr v + g^rr = 0.
  const double A = point.g_upper[0][0];
  const double B = point.g_upper[0][1];
  const double C = point.g_upper[1][1];
  const double disc = std::sqrt(std::max(B * B - A * C, 0.0));
  double v1 = (B + disc) / A;
  double v2 = (B - disc) / A;
  if (v1 > v2) std::swap(v1, v2);
  return {v1, v2};
}

ConjugationReport conjugation_check(const KerrParams& params, const RadialMaps& maps,
                                    const std::vector<double>& sample_radii) {
  const KerrParams schw{params.M, 0.0};
  const RadialMaps maps_s(schw, maps.R_switch(), maps.r_e(), maps.r_max());
  ConjugationReport rep;
  constexpr int kTheta = 16;
  // Conjugated inverse metric g^{ab}/(-g^tt) in raw (t, rtilde, phi, theta)
  // coordinate components.
  auto frame = [](const KerrParams& P, const RadialMaps& m, double r, double th) {
    const UpperPoint q = upper_point(P, m, r, th);
    const double c = 1.0 / -q.g[0][0];
    const double drt = m.drtilde(r);
    std::array<double, 7> v{};
    v[0] = q.g[0][1] * drt * c;
    v[1] = q.g[1][1] * drt * drt * c;
    v[2] = q.g[0][2] * c;
    v[3] = q.g[1][2] * drt * c;
    v[4] = q.g[2][2] * c;
    v[5] = q.g[3][3] * c;
    v[6] = c;
    return v;
  };
  std::map<int, std::array<double, 3>> decade_sup;
  for (double r : sample_radii) {
    if (r < 5.0 * params.M) throw DomainError("conjugation_check samples must satisfy r >= 5M");
    ConjugationRow row;
    row.r = r;
    {
      const UpperPoint q = upper_point(schw, maps_s, r, 0.5 * num::kPi);
      const double gh = q.g[3][3] / -q.g[0][0];
      const double rt = maps_s.rtilde(r);
      row.r3_glr = r * r * r * std::abs(gh - 1.0 / (rt * rt));
    }
    for (int j = 0; j < kTheta; ++j) {
      const double th = num::kPi * (j + 0.5) / kTheta;
      row.r3_V = std::max(row.r3_V, r * r * r * std::abs(conjugation_potential(params, maps, r, th)));
      const auto k = frame(params, maps, r, th);
      const auto s = frame(schw, maps_s, r, th);
      for (std::size_t c = 0; c < k.size(); ++c) {
        row.r2_gsr_max = std::max(row.r2_gsr_max, r * r * std::abs(k[c] - s[c]));
      }
    }
    rep.rows.push_back(row);
    rep.sup_r3_glr = std::max(rep.sup_r3_glr, row.r3_glr);
    rep.sup_r3_V = std::max(rep.sup_r3_V, row.r3_V);
    rep.sup_r2_gsr = std::max(rep.sup_r2_gsr, row.r2_gsr_max);
    auto& d = decade_sup[static_cast<int>(std::floor(std::log10(r / params.M)))];
    // r^3 g_lr grows like log r (rtilde = r* differs from r by 2M log r), so
    // growth is judged on the log-compensated value.
    d[0] = std::max(d[0], row.r3_glr / std::log(r / params.M));
    d[1] = std::max(d[1], row.r3_V);
    d[2] = std::max(d[2], row.r2_gsr_max);
  }
  const std::array<double, 3>* prev = nullptr;
  for (const auto& [dec, sup] : decade_sup) {
    if (prev != nullptr) {
      for (int c = 0; c < 3; ++c) {
        if ((*prev)[c] > 0.0) {
          rep.worst_decade_growth = std::max(rep.worst_decade_growth, sup[c] / (*prev)[c]);
        }
      }
    }
    prev = &sup;
  }
  const bool finite = std::isfinite(rep.sup_r3_glr) && std::isfinite(rep.sup_r3_V) &&
                      std::isfinite(rep.sup_r2_gsr);
  rep.flagged = !finite || rep.worst_decade_growth > rep.growth_limit;
  return rep;
}

std::vector<double> PeriodicBoxOperator::apply(const std::vector<double>& u) const {
  const std::size_t n = nx * ny;
  if (u.size() != n || w.size() != n || Gxx.size() != n || Gxy.size() != n ||
      Gyy.size() != n || V.size() != n) {
    throw ParameterError("PeriodicBoxOperator: table sizes do not match the box");
  }
  auto at = [&](const std::vector<double>& f, std::ptrdiff_t i, std::ptrdiff_t j) {
    const auto ii = static_cast<std::size_t>((i % static_cast<std::ptrdiff_t>(nx) + nx) % nx);
    const auto jj = static_cast<std::size_t>((j % static_cast<std::ptrdiff_t>(ny) + ny) % ny);
    return f[ii * ny + jj];
  };
  std::vector<double> wxx(n), wxy(n), wyy(n);
  for (std::size_t k = 0; k < n; ++k) {
    wxx[k] = w[k] * Gxx[k];
    wxy[k] = w[k] * Gxy[k];
    wyy[k] = w[k] * Gyy[k];
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const auto I = static_cast<std::ptrdiff_t>(i);
      const auto J = static_cast<std::ptrdiff_t>(j);
      auto dx6 = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (int m = -3; m <= 3; ++m) s += num::kD1o6[m + 3] * at(f, I + m, J);
        return s / hx;
      };
      auto dy6 = [&](const std::vector<double>& f) {
        double s = 0.0;
        for (int m = -3; m <= 3; ++m) s += num::kD1o6[m + 3] * at(f, I, J + m);
        return s / hy;
      };
      double ux = 0.0, uy = 0.0, uxx = 0.0, uyy = 0.0, uxy = 0.0;
      for (int m = -2; m <= 2; ++m) {
        ux += num::kD1o4[m + 2] * at(u, I + m, J);
        uy += num::kD1o4[m + 2] * at(u, I, J + m);
        uxx += num::kD2o4[m + 2] * at(u, I + m, J);
        uyy += num::kD2o4[m + 2] * at(u, I, J + m);
        double inner = 0.0;
        for (int q = -2; q <= 2; ++q) inner += num::kD1o4[q + 2] * at(u, I + m, J + q);
        uxy += num::kD1o4[m + 2] * inner;
      }
      ux /= hx;
      uy /= hy;
      uxx /= hx * hx;
      uyy /= hy * hy;
      uxy /= hx * hy;
      const std::size_t k = i * ny + j;
      const double bx = (dx6(wxx) + dy6(wxy)) / w[k];
      const double by = (dx6(wxy) + dy6(wyy)) / w[k];
      out[k] = Gxx[k] * uxx + 2.0 * Gxy[k] * uxy + Gyy[k] * uyy + bx * ux + by * uy + V[k] * u[k];
    }
  }
  return out;
}

}  // namespace kerrdecay
