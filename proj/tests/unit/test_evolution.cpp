#include <algorithm>
#include <cmath>
#include <string>

#include "doctest.h"
#include "kerrdecay/evolution.hpp"

using namespace kerrdecay;

namespace {

EvolutionConfig small_e1() {
  EvolutionConfig c;
  c.rstar_min = -60.0;
  c.rstar_max = 120.0;
  c.h = 0.1;
  c.T_final = 20.0;
  c.dt_out = 1.0;
  c.nl.enabled = false;
  c.probe_x = {30.0};
  return c;
}

Grid1D grid_1d(double lo, double hi, double h) {
  return {lo, hi, static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1};
}

double max_abs_diff(const std::vector<ProbeSample>& a, const std::vector<ProbeSample>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i].phi - b[i].phi));
  return d;
}

}  // namespace

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(bump_profile(1.0) == 0.0);
  CHECK(bump_profile(-1.5) == 0.0);
  CHECK(bump_profile(0.5) == bump_profile(-0.5));
}

TEST_CASE("1+1 initial data") {
  Solver1D s(1.0, grid_1d(-50.0, 100.0, 0.1), Nonlinearity{3, 1, false});
  const FieldSlice zero = s.init_data({0.0, 12.0, 4.0, true});
  CHECK(std::all_of(zero.phi.begin(), zero.phi.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(zero.pi.begin(), zero.pi.end(), [](double v) { return v == 0.0; }));

  const FieldSlice d = s.init_data({0.1, 12.0, 4.0, true});
  double peak = 0.0;
  for (std::size_t i = 0; i < d.phi.size(); ++i) {
    const double r = s.r()[i];
    const double phi = d.phi[i] / r;
    peak = std::max(peak, phi);
    if (r > 16.0) CHECK(d.phi[i] == 0.0);
    CHECK(d.pi[i] == 0.0);
  }
  // Grid maximum of the bump sits within h of r = c; the profile is flat there.
  CHECK(peak == doctest::Approx(0.1 * std::exp(-1.0)).epsilon(1e-4));
  CHECK(std::abs(s.sample(d, rstar_schw(1.0, 12.0)).psi / 12.0 - 0.1 * std::exp(-1.0)) < 1e-9);

  Solver1D narrow(1.0, grid_1d(-50.0, 15.0, 0.1), Nonlinearity{3, 1, false});
  CHECK_THROWS_AS(narrow.init_data({0.1, 12.0, 4.0, true}), DomainError);
}

TEST_CASE("1+1 right-hand side") {
  const Grid1D g = grid_1d(-40.0, 80.0, 0.1);
  Solver1D lin(1.0, g, Nonlinearity{3, 1, false}, 0.0);
  FieldSlice s{0.0, std::vector<double>(g.n, 0.0), std::vector<double>(g.n, 0.0)};
  StateDerivative d;
  lin.rhs(s, d);
  CHECK(std::all_of(d.pi.begin(), d.pi.end(), [](double v) { return v == 0.0; }));

  // Fourier symbol of the 4th-order stencil on sin(k x).
  const double k = 0.7, h = g.h();
  const double symbol = (30.0 - 32.0 * std::cos(k * h) + 2.0 * std::cos(2.0 * k * h)) / (12.0 * h * h);
  for (std::size_t i = 0; i < g.n; ++i) s.phi[i] = std::sin(k * g.x(i));
  lin.rhs(s, d);
  for (std::size_t i = 2; i + 2 < g.n; ++i) {
    CHECK(d.pi[i] + lin.potential()[i] * s.phi[i] ==
          doctest::Approx(-symbol * s.phi[i]).epsilon(1e-9).scale(1.0));
  }

  // Nonlinear term at r = 10M with psi / r = 2: -r (1 - 2M/r) (+1) 2^3 = -64.
  const double x10 = rstar_schw(1.0, 10.0);
  const Grid1D g10{x10 - 400 * 0.1, x10 + 400 * 0.1, 801};
  Solver1D off(1.0, g10, Nonlinearity{3, 1, false}, 0.02);
  Solver1D on(1.0, g10, Nonlinearity{3, 1, true}, 0.02);
  Solver1D foc(1.0, g10, Nonlinearity{3, -1, true}, 0.02);
  FieldSlice q{0.0, std::vector<double>(g10.n), std::vector<double>(g10.n, 0.0)};
  for (std::size_t i = 0; i < g10.n; ++i) q.phi[i] = 2.0 * on.r()[i];
  StateDerivative a, b, c;
  off.rhs(q, a);
  on.rhs(q, b);
  foc.rhs(q, c);
  CHECK(on.r()[400] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(b.pi[400] - a.pi[400] == doctest::Approx(-64.0).epsilon(1e-10));
  CHECK(c.pi[400] - a.pi[400] == doctest::Approx(64.0).epsilon(1e-10));
}

TEST_CASE("zero state stays zero") {
  Solver1D s(1.0, grid_1d(-40.0, 80.0, 0.1), Nonlinearity{3, 1, true});
  FieldSlice f = s.init_data({0.0, 12.0, 4.0, true});
  for (int k = 0; k < 10; ++k) s.step(f, 0.05);
  CHECK(std::all_of(f.phi.begin(), f.phi.end(), [](double v) { return v == 0.0; }));

  EvolutionConfig c = small_e1();
  c.data.epsilon = 0.0;
  c.nl.enabled = true;
  c.probe_u = {5.0};
  const EvolutionResult r = evolve(c);
  CHECK(r.outcome == Outcome::Completed);
  CHECK(!r.probes.empty());
  for (const auto& p : r.probes) CHECK(p.phi == 0.0);
}

TEST_CASE("config validation lists every problem") {
  EvolutionConfig c = small_e1();
  c.T_final = 20.5;
  c.probe_x = {500.0};
  c.gammas = {2.5};
  try {
    validate(c);
    FAIL("expected ParameterError");
  } catch (const ParameterError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("multiple of dt_out") != std::string::npos);
    CHECK(msg.find("outside the grid") != std::string::npos);
    CHECK(msg.find("gamma") != std::string::npos);
  }
  EvolutionConfig pad = small_e1();
  pad.T_final = 300.0;
  CHECK_THROWS_AS(validate(pad), ParameterError);
}

TEST_CASE("1+1 self-convergence on smooth data") {
  std::vector<std::vector<ProbeSample>> runs;
  for (double h : {0.05, 0.025, 0.0125}) {
    EvolutionConfig c = small_e1();
    c.h = h;
    c.data = {0.1, 20.0, 8.0, true};
    c.R1 = 28.0;
    c.probe_x = {40.0, 20.0};
    c.monitor_norms = false;
    runs.push_back(evolve(c).probes);
  }
  const double order = std::log2(max_abs_diff(runs[0], runs[1]) / max_abs_diff(runs[1], runs[2]));
  CHECK(order >= 3.5);
}

TEST_CASE("1+1 energy drift vanishes under refinement") {
  // No flux leaves the padded domain before T, so the energy change is the
  // discretization error alone.
  std::vector<double> drift;
  for (double h : {0.2, 0.1, 0.05}) {
    EvolutionConfig c = small_e1();
    c.h = h;
    const EvolutionResult r = evolve(c);
    drift.push_back(std::abs(r.norms.back().E - r.norms.front().E) / r.norms.front().E);
    for (const auto& n : r.norms) CHECK(n.E <= 1.05 * r.norms.front().E);
  }
  CHECK(std::log2(drift[0] / drift[1]) >= 3.0);
  CHECK(std::log2(drift[1] / drift[2]) >= 3.0);
}

TEST_CASE("1+1 finite propagation speed") {
  EvolutionConfig c = small_e1();
  c.T_final = 30.0;
  c.cut_times = {10.0, 20.0, 30.0};
  const EvolutionResult r = evolve(c);
  const double x_R1 = rstar_schw(1.0, c.R1);
  REQUIRE(r.cuts.size() == 3);
  for (const auto& cut : r.cuts) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cut.r.size(); ++i) {
      if (rstar_schw(1.0, cut.r[i]) > x_R1 + cut.t + 5.0) worst = std::max(worst, std::abs(cut.phi[i]));
    }
    CHECK(worst <= 1e-13);
  }
}

TEST_CASE("linear amplitude scaling") {
  EvolutionConfig c = small_e1();
  c.monitor_norms = false;
  const EvolutionResult full = evolve(c);
  c.data.epsilon = 0.05;
  const EvolutionResult half = evolve(c);
  REQUIRE(full.probes.size() == half.probes.size());
  double peak = 0.0;
  for (const auto& p : full.probes) peak = std::max(peak, std::abs(p.phi));
  for (std::size_t i = 0; i < full.probes.size(); ++i) {
    CHECK(std::abs(full.probes[i].phi - 2.0 * half.probes[i].phi) <= 1e-12 * peak);
  }
}

TEST_CASE("focusing blow-up is reported") {
  EvolutionConfig c = small_e1();
  c.nl = {3, -1, true};
  c.data.epsilon = 20.0;
  c.monitor_norms = false;
  const EvolutionResult r = evolve(c);
  CHECK(r.outcome == Outcome::BlowUp);
  CHECK(r.blowup_time > 0.0);
  CHECK(r.blowup_time < c.T_final);
  CHECK(!r.message.empty());
}

TEST_CASE("2+1 initial data and zero rhs") {
  const KerrParams K{1.0, 0.3};
  const HorizonData hd = horizon_radii(K);
  const Grid2D g{hd.r_e, 40.0, static_cast<std::size_t>(std::llround((40.0 - hd.r_e) / 0.1)) + 1, 8};
  Solver2D s(K, g, Nonlinearity{3, 1, true});
  const FieldSlice zero = s.init_data({0.0, 12.0, 4.0, true});
  StateDerivative d;
  s.rhs(zero, d);
  CHECK(std::all_of(d.phi.begin(), d.phi.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(d.pi.begin(), d.pi.end(), [](double v) { return v == 0.0; }));
  const FieldSlice f = s.init_data({0.1, 12.0, 4.0, true});
  CHECK(s.sample(f, 12.0).phi == doctest::Approx(0.1 * std::exp(-1.0)).epsilon(1e-9));
  for (std::size_t i = 0; i < g.n_r; ++i) {
    if (g.r(static_cast<std::ptrdiff_t>(i)) > 16.0) CHECK(f.phi[g.idx(i, 3)] == 0.0);
  }
  for (double v : s.outer_speed()) CHECK(v > 0.0);
}

TEST_CASE("2+1 radial self-convergence") {
  for (double a : {0.0, 0.3}) {
    std::vector<std::vector<ProbeSample>> runs;
    for (double h : {0.05, 0.025, 0.0125}) {
      EvolutionConfig c;
      c.engine = Engine::E2;
      c.params = {1.0, a};
      c.r_out = 60.0;
      c.h_r = h;
      c.n_theta = 8;
      c.T_final = 10.0;
      c.dt_out = 1.0;
      c.nl.enabled = false;
      c.data = {0.1, 20.0, 8.0, true};
      c.R1 = 28.0;
      c.probe_x = {20.0, 30.0};
      c.monitor_norms = false;
      runs.push_back(evolve(c).probes);
    }
    const double order = std::log2(max_abs_diff(runs[0], runs[1]) / max_abs_diff(runs[1], runs[2]));
    CHECK(order >= 3.5);
  }
}

TEST_CASE("2+1 axis regularity") {
  const KerrParams K{1.0, 0.3};
  const HorizonData hd = horizon_radii(K);
  std::vector<double> axis;
  for (std::size_t nt : {8, 16, 32}) {
    const Grid2D g{hd.r_e, 60.0, static_cast<std::size_t>(std::llround((60.0 - hd.r_e) / 0.1)) + 1, nt};
    Solver2D s(K, g, Nonlinearity{3, 1, false});
    FieldSlice f = s.init_data({0.1, 20.0, 8.0, true});
    const int n = static_cast<int>(std::ceil(10.0 / s.default_dt()));
    for (int k = 0; k < n; ++k) s.step(f, 10.0 / n);
    double interior = 0.0;
    for (std::size_t i = 0; i < g.n_r; ++i) {
      for (std::size_t j = 0; j + 1 < nt; ++j) {
        interior = std::max(interior, std::abs(f.phi[g.idx(i, j + 1)] - f.phi[g.idx(i, j)]) / g.h_theta());
      }
    }
    axis.push_back(s.axis_derivative_max(f));
    CHECK(axis.back() <= 0.15 * interior);
  }
  CHECK(axis[1] < 0.5 * axis[0]);
  CHECK(axis[2] < 0.5 * axis[1]);
}

TEST_CASE("engines agree at a = 0") {
  const double T = 20.0;
  EvolutionConfig e1 = small_e1();
  e1.h = 0.05;
  e1.T_final = T;
  e1.probe_x = {rstar_schw(1.0, 20.0)};
  e1.data = {0.1, 20.0, 8.0, true};
  e1.R1 = 28.0;
  e1.monitor_norms = false;
  EvolutionConfig e2;
  e2.engine = Engine::E2;
  e2.r_out = 60.0;
  e2.h_r = 0.05;
  e2.n_theta = 4;
  e2.T_final = T;
  e2.dt_out = 1.0;
  e2.nl.enabled = false;
  e2.probe_x = {20.0};
  e2.data = e1.data;
  e2.R1 = 28.0;
  e2.monitor_norms = false;
  const auto a = evolve(e1).probes;
  const auto b = evolve(e2).probes;
  REQUIRE(a.size() == b.size());
  double peak = 0.0;
  for (const auto& p : a) peak = std::max(peak, std::abs(p.phi));
  CHECK(peak > 1e-3);
  CHECK(max_abs_diff(a, b) <= 1e-5 * peak);
}
