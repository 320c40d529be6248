#include "kerrdecay/multipliers.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace kerrdecay {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

double contract(const MetricPoint& p, const Vec4& a, const Vec4& b) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) s += p.g_upper[i][j] * a[i] * b[j];
  }
  return s;
}

MetricPoint metric_at(const KerrParams& params, const RadialMaps& maps, const Vec4& x) {
  MetricPoint p = ttilde_star_metric(params, maps, x[1], x[3]);
  p.x = x;
  return p;
}

Vec4 shifted(Vec4 x, int dir, double d) {
  x[dir] += d;
  return x;
}

}  // namespace

MultiplierTriple::MultiplierTriple(double gamma, double delta, double M, double R2)
    : gamma_(gamma), delta_(delta), M_(M), R2_(R2) {
  std::string errors;
  if (!(gamma > 0.0 && gamma < 2.0)) errors += " gamma = " + fmt(gamma) + " not in (0, 2);";
  if (!(delta > 0.0)) errors += " delta = " + fmt(delta) + " must be positive;";
  if (!(admissibility(gamma, delta) < 0.0)) {
    errors += " (1-delta)^2 - 2(1-gamma delta) = " + fmt(admissibility(gamma, delta)) +
              " is not negative;";
  }
  if (!(M > 0.0)) errors += " M must be positive;";
  if (!(R2 > 0.0)) errors += " R2 must be positive;";
  if (!errors.empty()) throw ParameterError("MultiplierTriple:" + errors);
}

double MultiplierTriple::admissibility(double gamma, double delta) {
  return (1.0 - delta) * (1.0 - delta) - 2.0 * (1.0 - gamma * delta);
}

double MultiplierTriple::chi(double r) const {
  return num::smoothstep9((r - 0.5 * R2_) / (0.5 * R2_));
}

double MultiplierTriple::dchi(double r) const {
  return num::smoothstep9_d1((r - 0.5 * R2_) / (0.5 * R2_)) / (0.5 * R2_);
}

Vec4 MultiplierTriple::X(const RadialMaps& maps, double r) const {
  const double s = chi(r) * std::pow(r, gamma_);
  return {s, s / maps.drtilde(r), 0.0, 0.0};
}

double MultiplierTriple::q(double r) const {
  return chi(r) * (std::pow(r, gamma_ - 1.0) - 2.0 * M_ * std::pow(r, gamma_ - 2.0));
}

Vec4 MultiplierTriple::dq(double r) const {
  const double base = std::pow(r, gamma_ - 1.0) - 2.0 * M_ * std::pow(r, gamma_ - 2.0);
  const double dbase =
      (gamma_ - 1.0) * std::pow(r, gamma_ - 2.0) - 2.0 * M_ * (gamma_ - 2.0) * std::pow(r, gamma_ - 3.0);
  return {0.0, dchi(r) * base + chi(r) * dbase, 0.0, 0.0};
}

Vec4 MultiplierTriple::m(const RadialMaps& maps, double r) const {
  const double s = chi(r) * gamma_ * (1.0 - delta_) * std::pow(r, gamma_ - 2.0);
  return {s, s * maps.drtilde(r), 0.0, 0.0};
}

Sym4 energy_momentum(const MetricPoint& point, const Vec4& dphi) {
  const double grad2 = contract(point, dphi, dphi);
  Sym4 Q{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      Q[a][b] = dphi[a] * dphi[b] - 0.5 * point.g_lower[a][b] * grad2;
    }
  }
  return Q;
}

CurrentPoint current(const MetricPoint& point, const Vec4& X, double q, const Vec4& dq,
                     const Vec4& m, double phi, const Vec4& dphi) {
  CurrentPoint c;
  c.Q = energy_momentum(point, dphi);
  for (int a = 0; a < 4; ++a) {
    double s = 0.0;
    for (int b = 0; b < 4; ++b) s += c.Q[a][b] * X[b];
    c.P[a] = s + q * phi * dphi[a] - 0.5 * dq[a] * phi * phi + 0.5 * m[a] * phi * phi;
  }
  return c;
}

CurrentPoint contracted_current(const MetricPoint& point, const RadialMaps& maps,
                                const MultiplierTriple& triple, double phi, const Vec4& dphi) {
  const double r = point.x[1];
  return current(point, triple.X(maps, r), triple.q(r), triple.dq(r), triple.m(maps, r), phi,
                 dphi);
}

TestField constant_field(double c) {
  return {"constant", [c](const Vec4&) { return c; },
          [](const Vec4&) { return Vec4{0.0, 0.0, 0.0, 0.0}; }};
}

TestField polynomial_field(const Vec4& base) {
  // 1 + 0.2 T - 0.1 R + 0.05 T R + 0.03 R^2 Th + 0.01 T^3 + 0.02 A Th - 0.04 R^3
  // in shifted coordinates T = t - t0, R = r - r0, A, Th.
  auto value = [base](const Vec4& x) {
    const double T = x[0] - base[0], R = x[1] - base[1], A = x[2] - base[2], Th = x[3] - base[3];
    return 1.0 + 0.2 * T - 0.1 * R + 0.05 * T * R + 0.03 * R * R * Th + 0.01 * T * T * T +
           0.02 * A * Th - 0.04 * R * R * R;
  };
  auto gradient = [base](const Vec4& x) {
    const double T = x[0] - base[0], R = x[1] - base[1], A = x[2] - base[2], Th = x[3] - base[3];
    return Vec4{0.2 + 0.05 * R + 0.03 * T * T,
                -0.1 + 0.05 * T + 0.06 * R * Th - 0.12 * R * R,
                0.02 * Th,
                0.03 * R * R + 0.02 * A};
  };
  return {"polynomial", value, gradient};
}

TestField oscillatory_field() {
  // sin(0.4 t + 0.7 r + 0.3) cos(theta - 0.2) (1 + 0.3 cos(azimuth))
  auto value = [](const Vec4& x) {
    return std::sin(0.4 * x[0] + 0.7 * x[1] + 0.3) * std::cos(x[3] - 0.2) *
           (1.0 + 0.3 * std::cos(x[2]));
  };
  auto gradient = [](const Vec4& x) {
    const double w = 0.4 * x[0] + 0.7 * x[1] + 0.3;
    const double s = std::sin(w), c = std::cos(w);
    const double ct = std::cos(x[3] - 0.2), st = std::sin(x[3] - 0.2);
    const double az = 1.0 + 0.3 * std::cos(x[2]);
    return Vec4{0.4 * c * ct * az, 0.7 * c * ct * az, -0.3 * s * ct * std::sin(x[2]),
                -s * st * az};
  };
  return {"oscillatory", value, gradient};
}

DivergenceCheck divergence_residual(const KerrParams& params, const RadialMaps& maps,
                                    const MultiplierTriple& triple, const TestField& field,
                                    const Vec4& probe, double h) {
  const double hf = 1e-3 * params.M;
  const double reach = 2.0 * h + 3.0 * hf;
  if (!(h > 0.0)) throw DomainError("divergence_residual: step must be positive");
  if (probe[1] - reach < triple.R2() || probe[3] - reach <= 0.0 ||
      probe[3] + reach >= num::kPi) {
    throw DomainError("divergence_residual: stencil of step " + fmt(h) + " around r = " +
                      fmt(probe[1]) + ", theta = " + fmt(probe[3]) +
                      " leaves r >= R2 or (0, pi)");
  }

  // Vector density sqrt|g| g^{ab} P_b of the triple's current.
  auto density = [&](const Vec4& x) {
    const MetricPoint p = metric_at(params, maps, x);
    const CurrentPoint c = contracted_current(p, maps, triple, field.value(x), field.gradient(x));
    Vec4 J{};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) J[a] += p.g_upper[a][b] * c.P[b];
      J[a] *= p.sqrt_abs_det;
    }
    return J;
  };

  const MetricPoint p0 = metric_at(params, maps, probe);
  DivergenceCheck out;
  for (int dir = 0; dir < 4; ++dir) {
    double s = 0.0;
    for (int k = -2; k <= 2; ++k) {
      if (k != 0) s += num::kD1o4[k + 2] * density(shifted(probe, dir, k * h))[dir];
    }
    out.lhs += s / h;
  }
  out.lhs /= p0.sqrt_abs_det;

  // Fine-step divergence of a vector density given pointwise.
  auto fine_divergence = [&](const std::function<Vec4(const Vec4&)>& J) {
    double s = 0.0;
    for (int dir = 0; dir < 4; ++dir) {
      s += num::diff6([&](double y) { return J(shifted(probe, dir, y - probe[dir]))[dir]; },
                      probe[dir], hf);
    }
    return s / p0.sqrt_abs_det;
  };
  auto raise_density = [&](const Vec4& x, const Vec4& lower) {
    const MetricPoint p = metric_at(params, maps, x);
    Vec4 J{};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) J[a] += p.g_upper[a][b] * lower[b];
      J[a] *= p.sqrt_abs_det;
    }
    return J;
  };

  const double r = probe[1];
  const double phi = field.value(probe);
  const Vec4 dphi = field.gradient(probe);
  const Vec4 X = triple.X(maps, r);
  const Vec4 m = triple.m(maps, r);
  const double q = triple.q(r);
  const double grad2 = contract(p0, dphi, dphi);

  const double box_phi =
      fine_divergence([&](const Vec4& x) { return raise_density(x, field.gradient(x)); });
  const double div_m = fine_divergence([&](const Vec4& x) { return raise_density(x, triple.m(maps, x[1])); });
  const double box_q = fine_divergence([&](const Vec4& x) { return raise_density(x, triple.dq(x[1])); });

  // Q[g, X] = -|g|^-1/2 X(sqrt|g| g^ab) + 2 g^{ac} d_c X^b - d_c X^c g^ab,
  // contracted with d_a phi d_b phi. The metric and X depend on r and theta only.
  double deformation = 0.0;
  {
    double X_density = 0.0;
    for (int dir : {1, 3}) {
      if (X[dir] == 0.0) continue;
      const double d = num::diff6(
          [&](double y) {
            const MetricPoint p = metric_at(params, maps, shifted(probe, dir, y - probe[dir]));
            double s = 0.0;
            for (int a = 0; a < 4; ++a) {
              for (int b = 0; b < 4; ++b) s += p.sqrt_abs_det * p.g_upper[a][b] * dphi[a] * dphi[b];
            }
            return s;
          },
          probe[dir], hf);
      X_density += X[dir] * d;
    }
    Vec4 dX{};  // d_r X^b
    for (int b = 0; b < 4; ++b) {
      dX[b] = num::diff6([&](double y) { return triple.X(maps, y)[b]; }, r, hf);
    }
    double cross = 0.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) cross += p0.g_upper[a][1] * dX[b] * dphi[a] * dphi[b];
    }
    deformation = -X_density / p0.sqrt_abs_det + 2.0 * cross - dX[1] * grad2;
  }

  double X_phi = 0.0;
  for (int a = 0; a < 4; ++a) X_phi += X[a] * dphi[a];
  const double m_dphi = contract(p0, m, dphi);
  const double common = box_phi * (X_phi + q * phi) + 0.5 * deformation + q * grad2 +
                        m_dphi * phi - 0.5 * box_q * phi * phi;
  out.rhs = common + 0.5 * div_m * phi * phi;
  out.residual = std::abs(out.lhs - out.rhs);
  out.residual_unit_m = std::abs(out.lhs - (common + div_m * phi * phi));
  return out;
}

EnergyIntegrand weighted_energy_integrand(const MetricPoint& point, const RadialMaps& maps,
                                          const MultiplierTriple& triple, double phi,
                                          const Vec4& dphi) {
  const double r = point.x[1];
  const double theta = point.x[3];
  const double dv = dphi[0] + dphi[1] / maps.drtilde(r);
  const double s = std::sin(theta);
  const double slash2 = (dphi[3] * dphi[3] + dphi[2] * dphi[2] / (s * s)) / (r * r);
  EnergyIntegrand out;
  out.model = std::pow(r, triple.gamma()) * (dv * dv + slash2 + phi * phi / (r * r));
  const CurrentPoint c = contracted_current(point, maps, triple, phi, dphi);
  for (int b = 0; b < 4; ++b) out.minus_pairing -= point.g_upper[0][b] * c.P[b];
  return out;
}

std::vector<MultiplierCheckRow> multiplier_convergence(const KerrParams& params,
                                                       const RadialMaps& maps,
                                                       const MultiplierTriple& triple,
                                                       const TestField& field,
                                                       const std::vector<double>& radii,
                                                       const std::vector<double>& steps) {
  std::vector<MultiplierCheckRow> rows;
  for (double r : radii) {
    double previous = 0.0;
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const Vec4 probe{0.3, r, 0.4, 1.1};
      const DivergenceCheck d = divergence_residual(params, maps, triple, field, probe, steps[k]);
      MultiplierCheckRow row{triple.gamma(), triple.delta(), r, steps[k], d.residual, 0.0};
      if (k > 0) {
        row.order_estimate = std::log(previous / d.residual) / std::log(steps[k - 1] / steps[k]);
      }
      previous = d.residual;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string multiplier_csv(const std::vector<MultiplierCheckRow>& rows) {
  std::ostringstream os;
  os << "gamma,delta,probe_r,h,residual,order_estimate\n";
  os << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.gamma << ',' << r.delta << ',' << r.probe_r << ',' << r.h << ',' << r.residual << ','
       << r.order_estimate << '\n';
  }
  return os.str();
}

}  // namespace kerrdecay
