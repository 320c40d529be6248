#include "kerrdecay/norms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kerrdecay {

void PointwiseSlice::resize(std::size_t n) {
  weight.assign(n, 0.0);
  r.assign(n, 0.0);
  rtilde.assign(n, 0.0);
  phi.assign(n, 0.0);
  dt.assign(n, 0.0);
  grad2.assign(n, 0.0);
  dv.assign(n, 0.0);
  slash2.assign(n, 0.0);
}

double chi_ps(double M, double r) {
  const double x = r / M;
  if (x <= 2.5 || x >= 3.5) return 0.0;
  if (x < 2.8) return num::smoothstep9((x - 2.5) / 0.3);
  if (x <= 3.2) return 1.0;
  return 1.0 - num::smoothstep9((x - 3.2) / 0.3);
}

double energy(const PointwiseSlice& s) {
  std::vector<double> terms(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    terms[i] = s.weight[i] * (s.dt[i] * s.dt[i] + s.grad2[i]);
  }
  return num::pairwise_sum(terms);
}

double energy_gamma(const PointwiseSlice& s, double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw ParameterError("energy_gamma: gamma must lie in (0, 2), got " + std::to_string(gamma));
  }
  std::vector<double> terms(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.r[i];
    terms[i] = s.weight[i] * std::pow(r, gamma) *
               (s.dv[i] * s.dv[i] + s.slash2[i] + s.phi[i] * s.phi[i] / (r * r));
  }
  return num::pairwise_sum(terms);
}

std::size_t AnnulusDecomposition::index(double rtilde) {
  const double b = num::bracket(rtilde);
  if (b < 4.0) return 1;
  return static_cast<std::size_t>(std::floor(std::log2(b)));
}

namespace {

// Per-annulus pairwise sums of a per-point integrand.
std::vector<double> per_annulus(const std::vector<std::size_t>& cell, std::size_t n_cells,
                                const std::vector<double>& integrand) {
  std::vector<std::vector<double>> buckets(n_cells);
  for (std::size_t i = 0; i < cell.size(); ++i) buckets[cell[i]].push_back(integrand[i]);
  std::vector<double> out(n_cells, 0.0);
  for (std::size_t k = 0; k < n_cells; ++k) out[k] = num::pairwise_sum(buckets[k]);
  return out;
}

}  // namespace

AnnulusIntegrals annulus_integrals(const PointwiseSlice& s, double M, const Nonlinearity& nl) {
  const std::size_t n = s.size();
  std::vector<std::size_t> cell(n);
  std::size_t n_cells = 2;
  for (std::size_t i = 0; i < n; ++i) {
    cell[i] = AnnulusDecomposition::index(s.rtilde[i]);
    n_cells = std::max(n_cells, cell[i] + 1);
  }
  std::vector<double> u(n), grad(n), grad_weak(n), u_lower(n), source(n), source_grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = num::bracket(s.rtilde[i]);
    const double w = s.weight[i];
    const double chi = chi_ps(M, s.r[i]);
    const double phi = s.phi[i];
    const double dt2 = s.dt[i] * s.dt[i];
    u[i] = w * phi * phi / b;
    grad[i] = w * (dt2 + s.grad2[i]) / b;
    grad_weak[i] = w * (dt2 + (1.0 - chi) * (1.0 - chi) * s.grad2[i]) / b;
    u_lower[i] = w * phi * phi / (b * b * b);
    const double f = apply_nonlinearity(nl, phi);
    source[i] = w * b * f * f;
    // |grad f|^2 = p^2 phi^(2p-2) |grad phi|^2, time derivative included
    const double df = nl.enabled ? nl.p * num::ipow(phi, nl.p - 1) : 0.0;
    source_grad[i] = w * chi * chi * df * df * (dt2 + s.grad2[i]);
  }
  AnnulusIntegrals out;
  out.time = s.time;
  out.u = per_annulus(cell, n_cells, u);
  out.grad = per_annulus(cell, n_cells, grad);
  out.grad_weak = per_annulus(cell, n_cells, grad_weak);
  out.u_lower = per_annulus(cell, n_cells, u_lower);
  out.source = per_annulus(cell, n_cells, source);
  out.source_grad_ps = per_annulus(cell, n_cells, source_grad);
  return out;
}

void LEAccumulator::add(const AnnulusIntegrals& row) {
  if (!rows_.empty() && !(row.time > rows_.back().time)) {
    throw DomainError("LEAccumulator: sample times must increase");
  }
  rows_.push_back(row);
}

namespace {

std::size_t find_time(const std::vector<AnnulusIntegrals>& rows, double t) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (std::abs(rows[k].time - t) <= 1e-9 * std::max(1.0, std::abs(t))) return k;
  }
  throw DomainError("LE window end " + std::to_string(t) + " is not a stored sample time");
}

double at(const std::vector<double>& v, std::size_t k) { return k < v.size() ? v[k] : 0.0; }

}  // namespace

NormReport LEAccumulator::window(double t0, double t1) const {
  if (rows_.empty()) throw DomainError("LE window: no stored samples");
  if (t1 < t0) throw DomainError("LE window: t1 < t0");
  const std::size_t k0 = find_time(rows_, t0);
  const std::size_t k1 = find_time(rows_, t1);
  std::size_t n_cells = 0;
  for (std::size_t k = k0; k <= k1; ++k) n_cells = std::max(n_cells, rows_[k].u.size());

  // Trapezoid in time, per annulus and per integrand.
  std::vector<double> u(n_cells, 0.0), grad(n_cells, 0.0), grad_weak(n_cells, 0.0),
      u_lower(n_cells, 0.0), source(n_cells, 0.0);
  double source_grad = 0.0;
  for (std::size_t k = k0; k < k1; ++k) {
    const auto& a = rows_[k];
    const auto& b = rows_[k + 1];
    const double half_dt = 0.5 * (b.time - a.time);
    for (std::size_t c = 0; c < n_cells; ++c) {
      u[c] += half_dt * (at(a.u, c) + at(b.u, c));
      grad[c] += half_dt * (at(a.grad, c) + at(b.grad, c));
      grad_weak[c] += half_dt * (at(a.grad_weak, c) + at(b.grad_weak, c));
      u_lower[c] += half_dt * (at(a.u_lower, c) + at(b.u_lower, c));
      source[c] += half_dt * (at(a.source, c) + at(b.source, c));
      source_grad += half_dt * (at(a.source_grad_ps, c) + at(b.source_grad_ps, c));
    }
  }

  NormReport rep;
  rep.t0 = t0;
  rep.t1 = t1;
  rep.LE_annulus.resize(n_cells);
  double sup_grad = 0.0, sup_grad_weak = 0.0, sup_lower = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    rep.LE_annulus[c] = std::sqrt(u[c]);
    rep.LE = std::max(rep.LE, rep.LE_annulus[c]);
    sup_grad = std::max(sup_grad, grad[c]);
    sup_grad_weak = std::max(sup_grad_weak, grad_weak[c]);
    sup_lower = std::max(sup_lower, u_lower[c]);
    rep.LE_star += std::sqrt(source[c]);
  }
  rep.LE1 = std::sqrt(sup_grad) + std::sqrt(sup_lower);
  rep.LE1_weak = std::sqrt(sup_grad_weak) + std::sqrt(sup_lower);
  rep.LE_star_weak = std::sqrt(source_grad) + rep.LE_star;
  return rep;
}

}  // namespace kerrdecay
