#include "kwave/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace kwave::diagnostics {

using solver::CollisionMode;
using velocity::MacroState;

namespace {

MacroState macro_of(const waves::EulerState& e) { return {e.rho, {e.u1, 0.0, 0.0}, e.theta}; }

enum class Deriv { none, x1, x2, x1x1 };

/// Value of the derivative `d` of component c at cell (i, j) of a cell-major field.
double derivative(const Mesh& m, const double* data, std::size_t ncomp, int i, int j, std::size_t c, Deriv d) {
  auto at = [&](int ii, int jj) { return data[m.index(ii, jj) * ncomp + c]; };
  switch (d) {
    case Deriv::none:
      return at(i, j);
    case Deriv::x1: {
      if (m.nx < 2) return 0.0;
      if (i == 0) return (at(1, j) - at(0, j)) / m.hx();
      if (i == m.nx - 1) return (at(i, j) - at(i - 1, j)) / m.hx();
      return (at(i + 1, j) - at(i - 1, j)) / (2.0 * m.hx());
    }
    case Deriv::x2: {
      if (m.ny < 2) return 0.0;
      if (j == 0) return (at(i, 1) - at(i, 0)) / m.hy();
      if (j == m.ny - 1) return (at(i, j) - at(i, j - 1)) / m.hy();
      return (at(i, j + 1) - at(i, j - 1)) / (2.0 * m.hy());
    }
    case Deriv::x1x1: {
      if (m.nx < 3) return 0.0;
      const int ic = std::clamp(i, 1, m.nx - 2);
      return (at(ic + 1, j) - 2.0 * at(ic, j) + at(ic - 1, j)) / (m.hx() * m.hx());
    }
  }
  return 0.0;
}

/// sum over cells and components of weight2[c] (d u)^2 times the cell volume (and h^3 when weighted by velocity).
double squared_norm(const Mesh& m, std::span<const double> data, std::size_t ncomp, std::span<const double> weight2,
                    double measure, Deriv d) {
  if (data.empty()) return 0.0;
  std::vector<double> column(m.nx, 0.0);  // summed in a fixed order below
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.nx; ++i) {
    for (int j = 0; j < m.ny; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < ncomp; ++c) {
        const double v = derivative(m, data.data(), ncomp, i, j, c, d);
        acc += (weight2.empty() ? 1.0 : weight2[c]) * v * v;
      }
      column[i] += acc;
    }
  }
  double total = 0.0;
  for (double x : column) total += x;
  return total * m.cell_volume() * measure;
}

template <class T>
std::vector<double> flatten(const std::vector<T>& v) {
  std::vector<double> out;
  out.reserve(v.size() * std::tuple_size_v<T>);
  for (const auto& a : v) out.insert(out.end(), a.begin(), a.end());
  return out;
}

std::vector<double> difference_quotient(std::span<const double> a, std::span<const double> b, double dt) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] - b[i]) / dt;
  return out;
}

}  // namespace

// --- G-bar ---------------------------------------------------------------------

GbarModel::GbarModel(const Solver& solver) : solver_(&solver) {
  if (solver.scenario().collision == CollisionMode::boltzmann_quadrature) {
    const auto op = std::make_shared<collision::LinearizedOperator>(macro_of(solver.end_states().plus), solver.grid(),
                                                                    solver.scenario().kernel);
    inverse_ = std::make_shared<collision::MicroscopicInverse>(op);
  }
}

std::vector<double> GbarModel::operator()(const MacroState& local, double theta_bar_x1, double u1_bar_x1) const {
  const auto& g = solver_->grid();
  const auto& sc = solver_->scenario();
  // two species: F_1 collides with the total density 2 rho
  const double density_factor = sc.species_count();
  switch (sc.collision) {
    case CollisionMode::none:
      return std::vector<double>(g.size(), 0.0);
    case CollisionMode::boltzmann_quadrature: {
      auto out = collision::olG_direct(*inverse_, theta_bar_x1, u1_bar_x1);
      for (auto& x : out) x /= density_factor;
      return out;
    }
    case CollisionMode::bgk: {
      MacroState collider = local;
      collider.rho *= density_factor;
      const double tau = solver_->relaxation_time(collider);
      auto out = velocity::project_P1(collision::olG_source(local, g, theta_bar_x1, u1_bar_x1), local, g);
      for (auto& x : out) x *= -tau;
      return out;
    }
  }
  return {};
}

// --- decomposition -----------------------------------------------------------------

PerturbationField decompose(const Solver& solver, const SolutionSnapshot& s, const GbarModel& gbar) {
  const auto& m = solver.mesh();
  const auto& g = solver.grid();
  const std::size_t nv = g.size();
  const std::size_t nc = m.cells();
  const bool two = s.species.size() == 2;
  const velocity::GlobalMaxwellian mu(g);

  PerturbationField p;
  p.time = s.time;
  p.macro.resize(nc);
  p.g.resize(nc * nv);
  p.G.resize(nc * nv);
  p.G_bar.resize(nc * nv);
  if (two) {
    p.f.resize(nc * nv);
    p.a.resize(nc);
    p.grad_phi.resize(nc);
  }
  std::string failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (long c = 0; c < static_cast<long>(nc); ++c) {
    try {
      const int i = static_cast<int>(c / m.ny);
      const double x = m.x(i);
      const auto f1 = solver.f1(s, c);
      const auto fm = velocity::fluid_moments(f1, g);
      const MacroState local = velocity::macro_from_fluid(fm);
      const auto M = velocity::conservative_maxwellian(fm, g);
      const waves::ProfileSample wave = solver.profile().sample(s.time, x);
      p.macro[c] = {local.rho - wave.state.rho, local.u[0] - wave.state.u1, local.u[1], local.u[2],
                    local.theta - wave.state.theta};
      const auto gb = gbar(local, wave.dx.theta, wave.dx.u1);
      for (std::size_t k = 0; k < nv; ++k) {
        const double G = f1[k] - M[k];
        p.G[c * nv + k] = G;
        p.G_bar[c * nv + k] = gb[k];
        p.g[c * nv + k] = (G - gb[k]) / mu.sqrt_mu()[k];
      }
      if (two) {
        double a = 0.0;
        for (std::size_t k = 0; k < nv; ++k) {
          const double f2 = 0.5 * (s.species[0][c * nv + k] - s.species[1][c * nv + k]);
          p.f[c * nv + k] = f2 / mu.sqrt_mu()[k];
          a += f2;
        }
        p.a[c] = a * g.weight();
        p.grad_phi[c] = {-s.field->e1[c], -s.field->e2[c], 0.0};
      }
    } catch (const std::exception& e) {
#pragma omp critical
      failure = e.what();
    }
  }
  if (!failure.empty()) throw NumericalError(failure);
  return p;
}

// --- energy ------------------------------------------------------------------------

EnergyReport energy_Ek(const Solver& solver, const PerturbationField& p, const PerturbationField* neighbor, int k,
                       int m) {
  if (m < 0 || m > 2) throw ConfigError("derivative order must be 0, 1 or 2");
  const auto& mesh = solver.mesh();
  const auto& g = solver.grid();
  const auto& kernel = solver.scenario().kernel;
  const std::size_t nv = g.size();
  const double dv = g.weight();

  EnergyReport r;
  r.k = k;
  r.m = m;
  const velocity::GlobalMaxwellian mu(g);
  for (std::size_t i = 0; i < nv; ++i)
    r.amplification = std::max(r.amplification, std::pow(bracket(g.node(i)), k + 2) / mu.sqrt_mu()[i]);

  // velocity weights w(alpha)^2 = <v>^{2(k - |alpha| + 2)}, and the dissipation factor <v>^{gamma + 2s}
  std::array<std::vector<double>, 3> w2;
  std::array<std::vector<double>, 3> w2d;
  for (int order = 0; order <= 2; ++order) {
    w2[order].resize(nv);
    w2d[order].resize(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const double b = bracket(g.node(i));
      w2[order][i] = std::pow(b, 2.0 * (k - order + 2));
      w2d[order][i] = w2[order][i] * std::pow(b, kernel.gamma + 2.0 * kernel.s);
    }
  }

  const auto macro = flatten(p.macro);
  const auto phi = flatten(p.grad_phi);

  auto add = [&](int order, std::span<const double> mac, std::span<const double> gg, std::span<const double> ff,
                 std::span<const double> ph, Deriv d) {
    const double em = squared_norm(mesh, mac, 5, {}, 1.0, d);
    const double eg = squared_norm(mesh, gg, nv, w2[order], dv, d);
    const double ef = squared_norm(mesh, ff, nv, w2[order], dv, d);
    const double ep = squared_norm(mesh, ph, 3, {}, 1.0, d);
    r.macro += em;
    r.g += eg;
    r.f += ef;
    r.field += ep;
    r.Dk += (order >= 1 ? em : 0.0) + squared_norm(mesh, gg, nv, w2d[order], dv, d) +
            squared_norm(mesh, ff, nv, w2d[order], dv, d) + ep;
  };

  add(0, macro, p.g, p.f, phi, Deriv::none);
  if (m >= 1) {
    add(1, macro, p.g, p.f, phi, Deriv::x1);
    if (mesh.geometry == Geometry::duct) add(1, macro, p.g, p.f, phi, Deriv::x2);
    if (neighbor) {
      const double dt = p.time - neighbor->time;
      if (dt == 0.0) throw ConfigError("time difference needs snapshots at distinct times");
      r.t_stencil = std::abs(dt);
      const auto nm = flatten(neighbor->macro);
      const auto np = flatten(neighbor->grad_phi);
      add(1, difference_quotient(macro, nm, dt), difference_quotient(p.g, neighbor->g, dt),
          difference_quotient(p.f, neighbor->f, dt), difference_quotient(phi, np, dt), Deriv::none);
    }
  }
  if (m >= 2) add(2, macro, p.g, p.f, phi, Deriv::x1x1);
  r.Ek = r.macro + r.g + r.f + r.field;
  return r;
}

// --- L^2_D -------------------------------------------------------------------------

double L2D_weighted_part(std::span<const double> f, const VelocityGrid& grid, double gamma, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(bracket(grid.node(i)), gamma + 2.0 * s) * f[i] * f[i];
  return acc * grid.weight();
}

double L2D_seminorm(std::span<const double> f, const VelocityGrid& grid, double gamma, double s, double max_pairs) {
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  // d(v, v') >= |v - v'|, so only index offsets up to 1/h per axis can satisfy d <= 1
  const int r = static_cast<int>(std::floor(1.0 / h + 1e-12));
  const double pairs = static_cast<double>(grid.size()) * std::pow(2.0 * r + 1.0, 3);
  if (pairs > max_pairs) {
    std::ostringstream os;
    os << "L2D seminorm needs " << pairs << " pair evaluations, above the limit " << max_pairs;
    throw ConfigError(os.str());
  }
  std::vector<double> slab(n, 0.0);
  const double expo = 0.5 * (gamma + 2.0 * s + 1.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const std::size_t a = grid.index(i, j, l);
        const Vec3& v = grid.node(a);
        for (int di = -r; di <= r; ++di)
          for (int dj = -r; dj <= r; ++dj)
            for (int dl = -r; dl <= r; ++dl) {
              const int ii = i + di, jj = j + dj, ll = l + dl;
              if ((di == 0 && dj == 0 && dl == 0) || ii < 0 || jj < 0 || ll < 0 || ii >= n || jj >= n || ll >= n)
                continue;
              const std::size_t b = grid.index(ii, jj, ll);
              const Vec3& w = grid.node(b);
              const double lift = 0.5 * (norm2(v) - norm2(w));
              const double d = std::sqrt(norm2(v - w) + lift * lift);
              if (d > 1.0) continue;
              const double df = f[a] - f[b];
              slab[i] += std::pow(bracket(v) * bracket(w), expo) * df * df / std::pow(d, 3.0 + 2.0 * s);
            }
      }
  double diff = 0.0;
  for (double x : slab) diff += x;
  return L2D_weighted_part(f, grid, gamma, s) + diff * grid.weight() * grid.weight();
}

// --- scalar diagnostics -------------------------------------------------------------

double convergence_metric(const Solver& solver, const SolutionSnapshot& s, int k) {
  const auto& m = solver.mesh();
  const auto& g = solver.grid();
  const std::size_t nv = g.size();
  const velocity::GlobalMaxwellian mu(g);
  std::vector<double> weight(nv);
  for (std::size_t i = 0; i < nv; ++i) weight[i] = std::pow(bracket(g.node(i)), k) / mu.sqrt_mu()[i];
  double worst = 0.0;
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (int i = 0; i < m.nx; ++i) {
    const MacroState target = macro_of(solver.ideal()(s.time, m.x(i)));
    std::vector<double> mr(nv);
    for (std::size_t q = 0; q < nv; ++q) mr[q] = velocity::maxwellian_value(target, g.node(q));
    for (int j = 0; j < m.ny; ++j) {
      const std::size_t c = m.index(i, j);
      for (const auto& f : s.species) {
        double acc = 0.0;
        for (std::size_t q = 0; q < nv; ++q) {
          const double d = weight[q] * (f[c * nv + q] - mr[q]);
          acc += d * d;
        }
        worst = std::max(worst, std::sqrt(acc * g.weight()));
      }
    }
  }
  return worst;
}

double eta_integral(const Solver& solver, const SolutionSnapshot& s) {
  const auto& m = solver.mesh();
  double acc = 0.0;
  for (int i = 0; i < m.nx; ++i) {
    const MacroState bar = macro_of(solver.profile()(s.time, m.x(i)));
    for (int j = 0; j < m.ny; ++j) acc += velocity::entropy_eta(s.macro[m.index(i, j)], bar);
  }
  return acc * m.cell_volume();
}

double macro_perturbation_l2(const Solver& solver, const SolutionSnapshot& s) {
  const auto& m = solver.mesh();
  double acc = 0.0;
  for (int i = 0; i < m.nx; ++i) {
    const auto bar = solver.profile()(s.time, m.x(i));
    for (int j = 0; j < m.ny; ++j) {
      const MacroState& st = s.macro[m.index(i, j)];
      const double dr = st.rho - bar.rho, du = st.u[0] - bar.u1, dt = st.theta - bar.theta;
      acc += dr * dr + du * du + st.u[1] * st.u[1] + st.u[2] * st.u[2] + dt * dt;
    }
  }
  return acc * m.cell_volume();
}

double h_integral(const Solver& solver, const SolutionSnapshot& s) {
  const auto& g = solver.grid();
  const std::size_t nv = g.size();
  double acc = 0.0;
  for (const auto& f : s.species)
    for (std::size_t c = 0; c < solver.mesh().cells(); ++c)
      acc += collision::h_functional(std::span<const double>(f.data() + c * nv, nv), g);
  return acc * solver.mesh().cell_volume();
}

double total_mass(const Solver& solver, const SolutionSnapshot& s) {
  double acc = 0.0;
  for (const auto& st : s.macro) acc += st.rho;
  return acc * solver.mesh().cell_volume();
}

double grad_phi_norm(const Solver& solver, const SolutionSnapshot& s) {
  return s.field ? field::grad_phi_norm(*s.field, solver.mesh()) : 0.0;
}

// --- CSV and monitor ------------------------------------------------------------------

const char* diagnostics_header() {
  return "t,Ek,Ek_macro,Ek_g,Ek_f,Ek_field,Dk,conv_metric,eta_int,H,mass,t_stencil,grad_phi,clipped";
}

void write_diagnostics_row(std::ostream& os, const DiagnosticsRow& r) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17);
  os << r.t << ',' << r.energy.Ek << ',' << r.energy.macro << ',' << r.energy.g << ',' << r.energy.f << ','
     << r.energy.field << ',' << r.energy.Dk << ',' << r.conv_metric << ',' << r.eta_int << ',' << r.H << ','
     << r.mass << ',' << r.energy.t_stencil << ',' << r.grad_phi << ',' << r.clipped << '\n';
  os.flags(flags);
  os.precision(prec);
}

Monitor::Monitor(const Solver& solver) : solver_(&solver), gbar_(solver) {}

DiagnosticsRow Monitor::evaluate(const SolutionSnapshot& current, const SolutionSnapshot* neighbor) const {
  const auto& sc = solver_->scenario();
  DiagnosticsRow row;
  row.t = current.time;
  const PerturbationField p = decompose(*solver_, current, gbar_);
  std::optional<PerturbationField> q;
  if (neighbor && sc.derivative_order >= 1) q = decompose(*solver_, *neighbor, gbar_);
  row.energy = energy_Ek(*solver_, p, q ? &*q : nullptr, sc.energy_k, sc.derivative_order);
  row.conv_metric = convergence_metric(*solver_, current, sc.energy_k);
  row.eta_int = eta_integral(*solver_, current);
  row.H = h_integral(*solver_, current);
  row.mass = total_mass(*solver_, current);
  row.grad_phi = grad_phi_norm(*solver_, current);
  row.clipped = current.clipped;
  return row;
}

void Monitor::observe(const SolutionSnapshot& current, const SolutionSnapshot* neighbor) {
  rows_.push_back(evaluate(current, neighbor));
}

double tail_slope(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw ConfigError("tail slope needs matching samples");
  double t_max = 0.0;
  for (double x : t) t_max = std::max(t_max, x);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] > 0.0 && t[i] >= 0.1 * t_max && y[i] > 0.0) {
      xs.push_back(t[i]);
      ys.push_back(y[i]);
    }
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  return waves::fit_loglog_slope(xs, ys);
}

}  // namespace kwave::diagnostics
