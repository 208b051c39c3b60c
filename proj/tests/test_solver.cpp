#include <doctest.h>

#include <cmath>
#include <numeric>

#include "kwave/solver.hpp"

using namespace kwave;
using namespace kwave::solver;

namespace {

Scenario line_scenario() {
  Scenario s;
  s.mesh.x_min = -6.0;
  s.mesh.x_max = 6.0;
  s.mesh.nx = 24;
  s.v_points = 8;
  s.v_half_width = 5.0;
  s.t_end = 1.0;
  return s;
}

Scenario duct_scenario() {
  Scenario s = line_scenario();
  s.mesh.geometry = Geometry::duct;
  s.mesh.x_min = -4.0;
  s.mesh.x_max = 4.0;
  s.mesh.nx = 12;
  s.mesh.ny = 6;
  s.strength = 0.2;
  return s;
}

double total_mass(const Solver& solver, const SolutionSnapshot& s) {
  double m = 0.0;
  for (const auto& f : s.species) m += std::accumulate(f.begin(), f.end(), 0.0);
  return m * solver.grid().weight() * solver.mesh().cell_volume();
}

double min_value(const SolutionSnapshot& s) {
  double m = 1.0;
  for (const auto& f : s.species) m = std::min(m, *std::min_element(f.begin(), f.end()));
  return m;
}

}  // namespace

TEST_CASE("scenario validation names the offending field") {
  auto expect = [](Scenario s, const char* fragment) {
    try {
      s.validate();
      FAIL("accepted: " << fragment);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  CHECK_NOTHROW(line_scenario().validate());
  {
    auto s = duct_scenario();
    s.v_center = {0.0, 0.3, 0.0};
    expect(s, "center_v2");
  }
  {
    auto s = line_scenario();
    s.reconstruction = Reconstruction::minmod;
    s.cfl = 0.8;
    expect(s, "minmod");
  }
  {
    auto s = line_scenario();
    s.cfl = 1.5;
    expect(s, "time.cfl");
  }
  {
    auto s = line_scenario();
    s.strength = -0.1;
    expect(s, "wave.strength");
  }
  {
    auto s = line_scenario();
    s.minus = waves::EulerState{1.0, 0.5, 1.5};  // not on the 3-curve through plus
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
  {
    auto s = line_scenario();
    s.perturbation.charge_amplitude = 0.1;
    expect(s, "two_species_vpb");
  }
  {
    auto s = line_scenario();
    s.derivative_order = 3;
    expect(s, "derivative_order");
  }
  {
    auto s = line_scenario();
    s.work_budget = 1e3;
    expect(s, "work_budget");
  }
  {
    auto s = line_scenario();
    s.mesh.nx = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
  }
}

TEST_CASE("a global Maxwellian is a steady state") {
  Scenario sc = line_scenario();
  const Solver solver(sc);
  auto s = solver.initialize();
  const auto f0 = s.species[0];
  for (int n = 0; n < 20; ++n) solver.step(s, solver.stable_dt());
  double diff = 0.0;
  for (std::size_t idx = 0; idx < f0.size(); ++idx) diff = std::max(diff, std::abs(s.species[0][idx] - f0[idx]));
  CHECK(diff < 1e-13);
  CHECK(s.clipped == 0);
}

TEST_CASE("homogeneous BGK relaxation decays at the relaxation rate") {
  Scenario sc = line_scenario();
  sc.mesh.nx = 4;
  sc.perturbation.kind = PerturbationKind::bimodal;
  sc.perturbation.amplitude = 0.6;
  sc.viscosity = 0.5;
  const Solver solver(sc);
  auto s = solver.initialize();
  const auto& g = solver.grid();
  const std::size_t nv = g.size();
  const auto mom0 = velocity::fluid_moments(solver.f1(s, 0), g);
  const auto target = velocity::conservative_maxwellian(mom0, g);
  const double tau = solver.relaxation_time(velocity::macro_from_fluid(mom0));
  auto distance = [&] {
    double d = 0.0;
    for (std::size_t k = 0; k < nv; ++k) d += std::abs(s.species[0][k] - target[k]);
    return d;
  };
  const double d0 = distance();
  const double dt = solver.stable_dt();
  for (int n = 0; n < 10; ++n) solver.step(s, dt);
  CHECK(distance() == doctest::Approx(d0 * std::exp(-10 * dt / tau)).epsilon(1e-9));
  const auto mom = velocity::fluid_moments(solver.f1(s, 0), g);
  CHECK(mom.mass == doctest::Approx(mom0.mass).epsilon(1e-13));
  CHECK(mom.energy == doctest::Approx(mom0.energy).epsilon(1e-13));
  // every cell holds the same x-uniform data
  for (std::size_t c = 1; c < solver.mesh().cells(); ++c)
    for (std::size_t k = 0; k < nv; ++k) CHECK(s.species[0][c * nv + k] == s.species[0][k]);
}

TEST_CASE("mass is conserved when the ends stay at equilibrium") {
  for (auto rec : {Reconstruction::upwind, Reconstruction::minmod}) {
    Scenario sc = duct_scenario();
    sc.strength = 0.0;
    sc.mesh.x_min = -12.0;
    sc.mesh.x_max = 12.0;
    sc.mesh.nx = 36;
    sc.reconstruction = rec;
    sc.cfl = 0.5;
    sc.perturbation = {PerturbationKind::density_bump, 0.2, 0.0, 0.6};
    const Solver solver(sc);
    auto s = solver.initialize();
    const double m0 = total_mass(solver, s);
    for (int n = 0; n < 30; ++n) solver.step(s, solver.stable_dt());
    CHECK(total_mass(solver, s) == doctest::Approx(m0).epsilon(1e-12));
  }
}

TEST_CASE("specular walls: zero normal velocity and preserved mirror parity") {
  for (auto kind : {PerturbationKind::b11, PerturbationKind::density_bump}) {
    Scenario sc = duct_scenario();
    sc.perturbation = {kind, 0.05, 0.0, 1.5};
    const Solver solver(sc);
    auto s = solver.initialize();
    const auto& m = solver.mesh();
    const std::size_t nv = solver.grid().size();
    double wall_u2 = 0.0, flux = 0.0, parity = 0.0;
    for (int n = 0; n < 40; ++n) {
      solver.step(s, solver.stable_dt());
      for (int i = 0; i < m.nx; ++i)
        for (int w = 0; w < 2; ++w) {
          const auto tr = solver.wall_trace(s, i, w);
          wall_u2 = std::max(wall_u2, std::abs(tr.state.u[1]));
          flux = std::max(flux, std::abs(tr.normal_mass_flux));
        }
    }
    CHECK(wall_u2 < 1e-14);
    CHECK(flux < 1e-14);
    if (kind == PerturbationKind::b11) {
      // y-uniform data even in v2: F(y, v) = F(y_max + y_min - y, R v)
      for (int i = 0; i < m.nx; ++i)
        for (int j = 0; j < m.ny; ++j)
          for (std::size_t k = 0; k < nv; ++k)
            parity = std::max(parity, std::abs(s.species[0][m.index(i, j) * nv + k] -
                                               s.species[0][m.index(i, m.ny - 1 - j) * nv + solver.grid().reflect(k, 1)]));
      CHECK(parity < 1e-14);
    }
  }
  CHECK_THROWS_AS(Solver(line_scenario()).wall_trace(Solver(line_scenario()).initialize(), 0, 0), ConfigError);
}

TEST_CASE("Galilean shift of the end states shifts the bulk velocity") {
  // Upwind diffusion depends on |v1|, so the shift holds up to a discretization error
  // that must shrink under refinement. The initial data is the smoothed wave at time 1,
  // so the shifted run is displaced by c (t + 1).
  const double c = 0.3;
  auto frame_error = [&](int nx) {
    Scenario base = line_scenario();
    base.strength = 0.2;
    base.mesh.nx = nx;
    base.t_end = 0.5;
    Scenario shifted = base;
    shifted.plus.u1 += c;
    shifted.v_center = {c, 0.0, 0.0};
    const auto a = Solver(base).run();
    const Solver sb(shifted);
    const auto b = sb.run();
    const auto& m = sb.mesh();
    const auto ua = [&](double x) {
      const double p = (x - m.x_min) / m.hx() - 0.5;
      const int i = std::clamp(static_cast<int>(std::floor(p)), 0, m.nx - 2);
      const double w = p - i;
      return (1 - w) * a.macro[i].u[0] + w * a.macro[i + 1].u[0];
    };
    double worst = 0.0;
    for (int i = 0; i < m.nx; ++i) {
      if (std::abs(m.x(i)) > 4.0) continue;  // away from the box ends
      worst = std::max(worst, std::abs(b.macro[i].u[0] - c - ua(m.x(i) - c * (b.time + 1.0))));
    }
    return worst;
  };
  const double coarse = frame_error(48);
  const double fine = frame_error(96);
  CHECK(coarse < 1e-3);
  CHECK(fine < 0.75 * coarse);
}

TEST_CASE("positivity without clipping for upwind and minmod transport") {
  for (auto rec : {Reconstruction::upwind, Reconstruction::minmod}) {
    Scenario sc = line_scenario();
    sc.strength = 0.3;
    sc.reconstruction = rec;
    sc.cfl = rec == Reconstruction::upwind ? 1.0 : 0.5;
    sc.perturbation = {PerturbationKind::random, 0.9, 0.0, 2.0, 11};
    sc.viscosity = 1e-3;
    const Solver solver(sc);
    const auto s = solver.run();
    CHECK(min_value(s) >= 0.0);
    CHECK(s.clipped == 0);
  }
}

TEST_CASE("two-species runs keep the charge and each species mass") {
  Scenario sc = line_scenario();
  sc.mesh.x_min = -12.0;
  sc.mesh.x_max = 12.0;
  sc.mesh.nx = 48;
  sc.species = SpeciesMode::two_species_vpb;
  sc.perturbation.charge_amplitude = 0.2;
  sc.perturbation.width = 2.0;
  sc.t_end = 0.5;
  const Solver solver(sc);
  auto s = solver.initialize();
  REQUIRE(s.field.has_value());
  auto species_mass = [&](int sp) { return std::accumulate(s.species[sp].begin(), s.species[sp].end(), 0.0); };
  const double p0 = species_mass(0), m0 = species_mass(1);
  while (s.time < sc.t_end) solver.step(s, solver.stable_dt());
  CHECK(species_mass(0) == doctest::Approx(p0).epsilon(1e-12));
  CHECK(species_mass(1) == doctest::Approx(m0).epsilon(1e-12));
  CHECK(std::abs(s.field->neutrality_defect) < 1e-12);
}

TEST_CASE("runs are deterministic and the observer sees the output cadence") {
  Scenario sc = line_scenario();
  sc.strength = 0.2;
  sc.perturbation = {PerturbationKind::random, 0.1, 0.0, 2.0, 5};
  sc.output_interval = 0.25;
  std::vector<double> times;
  bool neighbors = true;
  const auto a = Solver(sc).run([&](const SolutionSnapshot& cur, const SolutionSnapshot* nb) {
    times.push_back(cur.time);
    neighbors = neighbors && nb != nullptr && nb->time != cur.time;
  });
  const auto b = Solver(sc).run();
  CHECK(a.species[0] == b.species[0]);
  REQUIRE(times.size() == 5);
  for (int n = 0; n < 5; ++n) CHECK(times[n] == doctest::Approx(0.25 * n).epsilon(1e-12));
  CHECK(neighbors);
}

TEST_CASE("numerical failure aborts with the last good state") {
  Scenario sc = line_scenario();
  sc.mesh.nx = 4;
  sc.collision = CollisionMode::boltzmann_quadrature;
  sc.perturbation = {PerturbationKind::bimodal, 2.5, 0.0, 1.0};
  sc.t_end = 2.0;
  const Solver solver(sc);
  // with and without an observer (which takes an extra forward step at t = 0)
  for (bool observed : {false, true}) {
    try {
      if (observed)
        solver.run([](const SolutionSnapshot&, const SolutionSnapshot*) {});
      else
        solver.run();
      FAIL("run finished");
    } catch (const RunAborted& e) {
      CHECK(std::string(e.what()).find("negative value") != std::string::npos);
      CHECK(e.state().species.size() == 1);
      CHECK(e.state().time < sc.t_end);
    }
  }
  auto s = solver.initialize();
  CHECK_THROWS_AS(solver.step(s, 10.0 * solver.stable_dt()), ConfigError);
  CHECK_THROWS_AS(solver.step(s, 0.0), ConfigError);
}
