#include "kwave/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kwave::solver {

using velocity::FluidMoments;

waves::EndStates Scenario::end_states() const {
  if (minus) {
    waves::EndStates ends{*minus, plus};
    if (waves::wave_strength(ends) > 0.0) waves::check_rarefaction_connected(ends);
    return ends;
  }
  if (strength == 0.0) return {plus, plus};
  if (!(strength > 0.0)) throw ConfigError("wave.strength must be nonnegative");
  return waves::build_3_rarefaction_with_strength(plus, strength);
}

void Scenario::validate() const {
  mesh.validate();
  if (!(v_half_width > 0.0)) throw ConfigError("grid.half_width must be positive");
  if (v_points < 4) throw ConfigError("grid.points must be at least 4");
  if (mesh.geometry == Geometry::duct && v_center[1] != 0.0) {
    throw ConfigError("duct walls need a velocity grid symmetric under v2 -> -v2 (grid.center_v2 must be 0)");
  }
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("time.cfl must lie in (0, 1]");
  if (reconstruction == Reconstruction::minmod && cfl > 0.5) {
    throw ConfigError("time.cfl must be <= 0.5 with minmod reconstruction");
  }
  if (!(t_end > 0.0)) throw ConfigError("time.t_end must be positive");
  if (output_interval < 0.0) throw ConfigError("output.interval must be nonnegative");
  if (!(viscosity > 0.0)) throw ConfigError("collision.viscosity must be positive");
  if (energy_k < 0) throw ConfigError("diagnostics.k must be nonnegative");
  if (derivative_order < 0 || derivative_order > 2) throw ConfigError("diagnostics.derivative_order must be 0, 1 or 2");
  if (collision == CollisionMode::boltzmann_quadrature) {
    kernel.validate(species == SpeciesMode::two_species_vpb ? collision::Model::vpb : collision::Model::boltzmann);
    if (energy_k < std::max(0.0, kernel.gamma + 2.0 * kernel.s)) {
      throw ConfigError("diagnostics.k must be >= max(0, gamma + 2 s)");
    }
  }
  const auto& p = perturbation;
  if (!(p.width > 0.0)) throw ConfigError("perturbation.width must be positive");
  if (p.charge_amplitude != 0.0 && species != SpeciesMode::two_species_vpb) {
    throw ConfigError("perturbation.charge_amplitude needs species = two_species_vpb");
  }
  if (std::abs(p.charge_amplitude) * std::sqrt(0.5 / std::exp(1.0)) >= 1.0) {
    throw ConfigError("perturbation.charge_amplitude makes a species density negative");
  }
  if (plus.rho <= 0.0 || plus.theta <= 0.0) throw ConfigError("wave.plus needs rho > 0 and theta > 0");
  end_states();

  const double nv = std::pow(static_cast<double>(v_points), 3);
  const double dt = cfl / (v_half_width / mesh.hx() + (mesh.geometry == Geometry::duct ? v_half_width / mesh.hy() : 0.0));
  const double work = nv * static_cast<double>(mesh.cells()) * species_count() * (t_end / dt + 1.0);
  if (work > work_budget) {
    std::ostringstream os;
    os << "scenario needs about " << work << " cell-node updates, above run.work_budget = " << work_budget;
    throw ConfigError(os.str());
  }
}

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

double envelope(const Perturbation& p, double x) {
  const double z = (x - p.center) / p.width;
  return std::exp(-z * z);
}

/// Uniform [-1, 1) from splitmix64 so the sequence does not depend on the standard library.
double uniform_pm1(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return 2.0 * (static_cast<double>(z >> 11) * 0x1.0p-53) - 1.0;
}

MacroState macro_of(const waves::EulerState& e) { return {e.rho, {e.u1, 0.0, 0.0}, e.theta}; }

}  // namespace

Solver::Solver(Scenario scenario)
    : scenario_(std::move(scenario)),
      grid_(std::make_unique<VelocityGrid>(scenario_.v_half_width, scenario_.v_points, scenario_.v_center)),
      ends_(scenario_.end_states()),
      profile_(waves::ProfileKind::smoothed, ends_, 1.0, {}, waves::wave_strength(ends_) == 0.0),
      ideal_(waves::ProfileKind::exact_selfsimilar, ends_, 1.0, {}, waves::wave_strength(ends_) == 0.0) {
  scenario_.validate();
  if (scenario_.mesh.geometry == Geometry::duct) {
    mirror_.resize(grid_->size());
    for (std::size_t k = 0; k < grid_->size(); ++k) mirror_[k] = grid_->reflect(k, 1);
  }
  if (scenario_.species == SpeciesMode::two_species_vpb) {
    poisson_ = std::make_unique<field::PoissonSolver>(scenario_.mesh, scenario_.x_boundary);
  }
  if (scenario_.collision == CollisionMode::boltzmann_quadrature) {
    collision::check_work_budget(*grid_, scenario_.kernel);
    for (const auto& e : {ends_.minus, ends_.plus}) {
      const auto m = velocity::maxwellian(macro_of(e), *grid_);
      // two species collide with the total density 2 rho
      const double density_factor = scenario_.species_count();
      const auto parts = collision::collision_Q_parts(m, m, *grid_, scenario_.kernel);
      for (std::size_t k = 0; k < m.size(); ++k)
        if (m[k] > 0.0) collision_frequency_ = std::max(collision_frequency_, density_factor * parts.loss[k] / m[k]);
    }
  }
}

double Solver::relaxation_time(const MacroState& state) const {
  const double mu = scenario_.viscosity * std::pow(state.theta / 1.5, scenario_.viscosity_exponent);
  return mu / (state.rho * kGasConstant * state.theta);
}

double Solver::stable_dt() const {
  const double v = grid_->max_speed();
  double rate = v / mesh().hx();
  if (mesh().geometry == Geometry::duct) rate += v / mesh().hy();
  double dt = scenario_.cfl / rate;
  if (collision_frequency_ > 0.0) dt = std::min(dt, 0.5 / collision_frequency_);
  return dt;
}

SolutionSnapshot Solver::initialize() const {
  const auto& m = mesh();
  const auto& g = *grid_;
  const auto& p = scenario_.perturbation;
  const std::size_t nv = g.size();
  const int ns = scenario_.species_count();
  SolutionSnapshot s;
  s.species.assign(ns, std::vector<double>(m.cells() * nv, 0.0));

  std::uint64_t rng = p.seed;
  for (int i = 0; i < m.nx; ++i) {
    const double x = m.x(i);
    const waves::ProfileSample wave = profile_.sample(0.0, x);
    for (int j = 0; j < m.ny; ++j) {
      MacroState st = macro_of(wave.state);
      const double b = envelope(p, x);
      if (p.kind == PerturbationKind::density_bump) {
        const double cy = m.geometry == Geometry::duct ? std::cos(kPi * (m.y(j) - m.y_min) / (m.y_max - m.y_min)) : 1.0;
        st.rho *= 1.0 + p.amplitude * b * cy;
        if (!(st.rho > 0.0)) throw ConfigError("perturbation.amplitude makes the density negative");
      }
      std::vector<double> f;
      if (p.kind == PerturbationKind::bimodal) {
        MacroState a = st, c = st;
        a.u[0] += p.amplitude;
        c.u[0] -= p.amplitude;
        const auto ma = velocity::maxwellian(a, g);
        const auto mc = velocity::maxwellian(c, g);
        f.resize(nv);
        for (std::size_t k = 0; k < nv; ++k) f[k] = 0.5 * (ma[k] + mc[k]);
      } else {
        f = velocity::maxwellian(st, g);
      }
      if (p.kind == PerturbationKind::b11 || p.kind == PerturbationKind::b12) {
        const int jj = p.kind == PerturbationKind::b11 ? 0 : 1;
        const double sr = std::sqrt(kGasConstant * st.theta);
        std::vector<double> h(nv);
        for (std::size_t k = 0; k < nv; ++k) {
          const Vec3 w = (1.0 / sr) * (g.node(k) - st.u);
          h[k] = collision::burnett_B_hat(0, jj, w) * f[k];
        }
        const auto micro = velocity::project_P1(h, st, g);
        for (std::size_t k = 0; k < nv; ++k) f[k] += p.amplitude * b * micro[k];
      } else if (p.kind == PerturbationKind::random) {
        for (std::size_t k = 0; k < nv; ++k) f[k] *= 1.0 + p.amplitude * b * uniform_pm1(rng);
      }
      const std::size_t c = m.index(i, j);
      if (ns == 1) {
        std::copy(f.begin(), f.end(), s.species[0].begin() + c * nv);
      } else {
        const double z = (x - p.center) / p.width;
        const double charge = p.charge_amplitude * z * std::exp(-z * z);
        for (std::size_t k = 0; k < nv; ++k) {
          // F_1 = f and F_2 = charge * M, with M the unperturbed local Maxwellian up to the micro part
          s.species[0][c * nv + k] = f[k] * (1.0 + charge);
          s.species[1][c * nv + k] = f[k] * (1.0 - charge);
        }
      }
      for (int sp = 0; sp < ns; ++sp)
        for (std::size_t k = 0; k < nv; ++k)
          if (s.species[sp][c * nv + k] < 0.0) {
            std::ostringstream os;
            os << "initial perturbation makes F negative at x = " << x << " (cell " << c << ", node " << k
               << "); reduce perturbation.amplitude";
            throw ConfigError(os.str());
          }
    }
  }
  refresh(s);
  return s;
}

std::vector<double> Solver::f1(const SolutionSnapshot& s, std::size_t cell) const {
  const std::size_t nv = grid_->size();
  std::vector<double> out(s.species[0].begin() + cell * nv, s.species[0].begin() + (cell + 1) * nv);
  if (s.species.size() == 2)
    for (std::size_t k = 0; k < nv; ++k) out[k] = 0.5 * (out[k] + s.species[1][cell * nv + k]);
  return out;
}

field::FieldState Solver::solve_field(const SolutionSnapshot& s) const {
  const std::size_t nv = grid_->size();
  const std::size_t nc = mesh().cells();
  std::vector<double> source(nc, 0.0);
  const double w = grid_->weight();
  for (std::size_t c = 0; c < nc; ++c) {
    double acc = 0.0;
    for (std::size_t k = 0; k < nv; ++k) acc += s.species[0][c * nv + k] - s.species[1][c * nv + k];
    source[c] = acc * w;
  }
  return poisson_->solve(source);
}

void Solver::refresh(SolutionSnapshot& s) const {
  const std::size_t nc = mesh().cells();
  s.macro.assign(nc, MacroState{});
  std::string failure;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < static_cast<long>(nc); ++c) {
    try {
      s.macro[c] = velocity::moments(f1(s, c), *grid_);
    } catch (const NumericalError& e) {
#pragma omp critical
      {
        std::ostringstream os;
        os << e.what() << " in cell " << c << " at t = " << s.time;
        failure = os.str();
      }
    }
  }
  if (!failure.empty()) throw NumericalError(failure);
  if (poisson_) s.field = solve_field(s);
}

void Solver::specular_reflect(std::span<const double> interior, std::span<double> ghost) const {
  if (mirror_.empty()) throw ConfigError("specular reflection needs the duct geometry");
  for (std::size_t k = 0; k < mirror_.size(); ++k) ghost[k] = interior[mirror_[k]];
}

void Solver::transport(std::vector<double>& f, double dt) const {
  const auto& m = mesh();
  const auto& g = *grid_;
  const long nv = static_cast<long>(g.size());
  const int nx = m.nx;
  const int ny = m.ny;
  const bool duct = m.geometry == Geometry::duct;
  const bool limited = scenario_.reconstruction == Reconstruction::minmod;
  const double hx = m.hx();
  const double hy = m.hy();

  // Ghost access: copy at the x1 ends, mirrored cell with v2 reflected beyond a wall.
  auto value = [&](int i, int j, long k) -> double {
    i = std::clamp(i, 0, nx - 1);
    if (j < 0) {
      j = -1 - j;
      k = static_cast<long>(mirror_[k]);
    } else if (j >= ny) {
      j = 2 * ny - 1 - j;
      k = static_cast<long>(mirror_[k]);
    }
    return f[(static_cast<long>(i) * ny + j) * nv + k];
  };
  // Value on the face downstream of the upwind cell (i, j) for speed v and mesh step h.
  auto face = [&](int i, int j, long k, int axis, double v, double h) -> double {
    const double c = value(i, j, k);
    if (!limited) return c;
    const double lo = axis == 0 ? value(i - 1, j, k) : value(i, j - 1, k);
    const double hi = axis == 0 ? value(i + 1, j, k) : value(i, j + 1, k);
    const double slope = minmod(c - lo, hi - c);
    const double nu = std::abs(v) * dt / h;
    return c + (v > 0.0 ? 0.5 : -0.5) * (1.0 - nu) * slope;
  };

  std::vector<double> fx(static_cast<std::size_t>(nx + 1) * ny * nv);
  std::vector<double> fy(duct ? static_cast<std::size_t>(nx) * (ny + 1) * nv : 0);
#pragma omp parallel for schedule(static)
  for (int fi = 0; fi <= nx; ++fi) {
    for (int j = 0; j < ny; ++j) {
      double* out = fx.data() + (static_cast<std::size_t>(fi) * ny + j) * nv;
      for (long k = 0; k < nv; ++k) {
        const double v = g.node(k)[0];
        out[k] = v * (v > 0.0 ? face(fi - 1, j, k, 0, v, hx) : face(fi, j, k, 0, v, hx));
      }
    }
  }
  if (duct) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
      for (int fj = 0; fj <= ny; ++fj) {
        double* out = fy.data() + (static_cast<std::size_t>(i) * (ny + 1) + fj) * nv;
        for (long k = 0; k < nv; ++k) {
          const double v = g.node(k)[1];
          out[k] = v * (v > 0.0 ? face(i, fj - 1, k, 1, v, hy) : face(i, fj, k, 1, v, hy));
        }
      }
    }
  }
  const double ax = dt / hx;
  const double ay = dt / hy;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      double* cell = f.data() + (static_cast<std::size_t>(i) * ny + j) * nv;
      const double* left = fx.data() + (static_cast<std::size_t>(i) * ny + j) * nv;
      const double* right = fx.data() + (static_cast<std::size_t>(i + 1) * ny + j) * nv;
      for (long k = 0; k < nv; ++k) cell[k] -= ax * (right[k] - left[k]);
      if (duct) {
        const double* low = fy.data() + (static_cast<std::size_t>(i) * (ny + 1) + j) * nv;
        const double* high = low + nv;
        for (long k = 0; k < nv; ++k) cell[k] -= ay * (high[k] - low[k]);
      }
    }
  }
}

void Solver::collide(SolutionSnapshot& s, double dt) const {
  if (scenario_.collision == CollisionMode::none) return;
  const auto& g = *grid_;
  const std::size_t nv = g.size();
  const long nc = static_cast<long>(mesh().cells());
  const bool two = s.species.size() == 2;

  if (scenario_.collision == CollisionMode::boltzmann_quadrature) {
    // Q(F, F) for one species; Q(F_+ + F_-, F_pm) = Q(F_pm, F_pm) + Q(F_-+, F_pm) for two.
    for (long c = 0; c < nc; ++c) {
      std::vector<std::vector<double>> cell(s.species.size());
      for (std::size_t sp = 0; sp < s.species.size(); ++sp)
        cell[sp].assign(s.species[sp].begin() + c * nv, s.species[sp].begin() + (c + 1) * nv);
      std::vector<double> partner = cell[0];
      if (two)
        for (std::size_t k = 0; k < nv; ++k) partner[k] += cell[1][k];
      for (std::size_t sp = 0; sp < s.species.size(); ++sp) {
        const auto q = collision::collision_Q(partner, cell[sp], g, scenario_.kernel);
        for (std::size_t k = 0; k < nv; ++k) s.species[sp][c * nv + k] += dt * q[k];
      }
    }
    return;
  }

  std::string failure;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < nc; ++c) {
    try {
      if (!two) {
        std::span<double> f(s.species[0].data() + c * nv, nv);
        const MacroState st = velocity::moments(f, g);
        collision::bgk_step(f, relaxation_time(st), dt, g);
      } else {
        // Each species relaxes to its share of the Maxwellian of the total, which
        // conserves species mass and the total momentum and energy.
        std::span<double> fp(s.species[0].data() + c * nv, nv);
        std::span<double> fm(s.species[1].data() + c * nv, nv);
        std::vector<double> total(nv);
        for (std::size_t k = 0; k < nv; ++k) total[k] = fp[k] + fm[k];
        const FluidMoments mom = velocity::fluid_moments(total, g);
        const MacroState st = velocity::macro_from_fluid(mom);
        const auto target = velocity::conservative_maxwellian(mom, g);
        const double share_p = velocity::integrate(fp, g) / mom.mass;
        const double share_m = velocity::integrate(fm, g) / mom.mass;
        const double decay = std::exp(-dt / relaxation_time(st));
        for (std::size_t k = 0; k < nv; ++k) {
          fp[k] = share_p * target[k] + (fp[k] - share_p * target[k]) * decay;
          fm[k] = share_m * target[k] + (fm[k] - share_m * target[k]) * decay;
        }
      }
    } catch (const NumericalError& e) {
#pragma omp critical
      {
        std::ostringstream os;
        os << e.what() << " in cell " << c << " at t = " << s.time;
        failure = os.str();
      }
    }
  }
  if (!failure.empty()) throw NumericalError(failure);
}

void Solver::apply_force(SolutionSnapshot& s, double dt) const {
  if (!poisson_) return;
  const field::FieldState fs = solve_field(s);
  const auto& g = *grid_;
  const std::size_t nv = g.size();
  const long nc = static_cast<long>(mesh().cells());
  std::string failure;
#pragma omp parallel for schedule(static)
  for (long c = 0; c < nc; ++c) {
    const Vec3 e{fs.e1[c], fs.e2[c], 0.0};
    const double cfl_v = dt * (std::abs(e[0]) + std::abs(e[1])) / g.spacing();
    const int sub = std::max(1, static_cast<int>(std::ceil(cfl_v / 0.9)));
    try {
      for (int r = 0; r < sub; ++r) {
        field::apply_vlasov_force(std::span<double>(s.species[0].data() + c * nv, nv), e, +1, dt / sub, g);
        field::apply_vlasov_force(std::span<double>(s.species[1].data() + c * nv, nv), e, -1, dt / sub, g);
      }
    } catch (const NumericalError& err) {
#pragma omp critical
      failure = err.what();
    }
  }
  if (!failure.empty()) throw NumericalError(failure);
}

void Solver::check_and_clip(SolutionSnapshot& s) const {
  const std::size_t nv = grid_->size();
  for (std::size_t sp = 0; sp < s.species.size(); ++sp) {
    auto& f = s.species[sp];
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const double x = f[idx];
      if (x >= 0.0) continue;
      if (x >= kNegativityFloor) {
        f[idx] = 0.0;
        ++s.clipped;
        continue;
      }
      const std::size_t cell = idx / nv;
      const Vec3& v = grid_->node(idx % nv);
      std::ostringstream os;
      os.precision(17);
      os << (std::isnan(x) ? "NaN" : "negative value") << " F = " << x << " at t = " << s.time << ", species "
         << sp << ", cell " << cell << " (x = " << mesh().x(static_cast<int>(cell / mesh().ny)) << "), v = (" << v[0]
         << ", " << v[1] << ", " << v[2] << ")";
      throw NumericalError(os.str());
    }
  }
}

void Solver::step(SolutionSnapshot& s, double dt) const {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  const double limit = stable_dt() * (1.0 + 1e-12);
  if (dt > limit) {
    std::ostringstream os;
    os << "time step " << dt << " exceeds the stability limit " << limit;
    throw ConfigError(os.str());
  }
  for (auto& f : s.species) transport(f, 0.5 * dt);
  apply_force(s, dt);
  collide(s, dt);
  for (auto& f : s.species) transport(f, 0.5 * dt);
  s.time += dt;
  ++s.step;
  check_and_clip(s);
  refresh(s);
}

WallTrace Solver::wall_trace(const SolutionSnapshot& s, int i, int wall) const {
  if (mirror_.empty()) throw ConfigError("wall traces need the duct geometry");
  const auto& g = *grid_;
  const std::size_t nv = g.size();
  const int j = wall == 0 ? 0 : mesh().ny - 1;
  const auto f = f1(s, mesh().index(i, j));
  std::vector<double> ghost(nv), trace(nv);
  specular_reflect(f, ghost);
  for (std::size_t k = 0; k < nv; ++k) trace[k] = 0.5 * (f[k] + ghost[k]);
  WallTrace out;
  out.state = velocity::moments(trace, g);
  // upwind flux through the wall face: interior values leave, ghost values enter
  const double sign = wall == 0 ? -1.0 : 1.0;
  double flux = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const double vn = sign * g.node(k)[1];
    flux += vn * (vn > 0.0 ? f[k] : ghost[k]);
  }
  out.normal_mass_flux = flux * g.weight();
  return out;
}

SolutionSnapshot Solver::run(const Observer& observer) const {
  SolutionSnapshot s = initialize();
  const double dt = stable_dt();
  const double t_end = scenario_.t_end;
  const double interval = scenario_.output_interval;
  const double eps = 1e-12 * std::max(1.0, t_end);
  if (observer) {
    // forward neighbor for time differences at t = 0
    SolutionSnapshot next = s;
    try {
      step(next, std::min(dt, t_end));
    } catch (const NumericalError& e) {
      throw RunAborted(e.what(), s);
    }
    observer(s, &next);
  }
  double next_output = interval > 0.0 ? std::min(interval, t_end) : t_end;
  while (s.time < t_end - eps) {
    const double h = std::min(dt, next_output - s.time);
    const bool emit = observer && s.time + h >= next_output - eps;
    std::optional<SolutionSnapshot> previous;
    if (emit) previous = s;
    try {
      step(s, h);
    } catch (const NumericalError& e) {
      throw RunAborted(e.what(), s);
    }
    if (s.time >= next_output - eps) {
      if (emit) observer(s, &*previous);
      next_output = interval > 0.0 ? std::min(next_output + interval, t_end) : t_end;
    }
  }
  return s;
}

}  // namespace kwave::solver
