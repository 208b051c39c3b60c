#include "kwave/velocity_moments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace kwave::velocity {

VelocityGrid::VelocityGrid(double half_width, int points_per_axis, const Vec3& center)
    : half_width_(half_width), center_(center), n_(points_per_axis), h_(2.0 * half_width / points_per_axis) {
  if (points_per_axis < 8) throw ConfigError("velocity grid needs at least 8 points per axis");
  if (!(half_width > 0.0)) throw ConfigError("velocity grid half width must be positive");
  nodes_.resize(static_cast<std::size_t>(n_) * n_ * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      for (int k = 0; k < n_; ++k)
        nodes_[index(i, j, k)] = {center[0] + axis(i), center[1] + axis(j), center[2] + axis(k)};
  axis_max_ = 0.0;
  for (int a = 0; a < 3; ++a) axis_max_ = std::max(axis_max_, std::abs(center[a]) + axis(n_ - 1));
}

std::array<int, 3> VelocityGrid::multi_index(std::size_t idx) const {
  const int k = static_cast<int>(idx % n_);
  const int j = static_cast<int>((idx / n_) % n_);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(n_) * n_));
  return {i, j, k};
}

std::size_t VelocityGrid::reflect(std::size_t idx, int ax) const {
  if (!mirror_symmetric(ax)) throw ConfigError("velocity grid is not symmetric under v -> -v in the reflected component");
  auto m = multi_index(idx);
  m[ax] = n_ - 1 - m[ax];
  return index(m[0], m[1], m[2]);
}

double maxwellian_value(const MacroState& s, const Vec3& v) {
  const double rt = kGasConstant * s.theta;
  return s.rho / std::pow(2.0 * kPi * rt, 1.5) * std::exp(-norm2(v - s.u) / (2.0 * rt));
}

double tail_mass_estimate(const MacroState& s, const VelocityGrid& grid) {
  const double sd = std::sqrt(kGasConstant * s.theta);
  const double l = grid.half_width();
  double inside = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = (grid.center()[a] - l - s.u[a]) / (sd * std::sqrt(2.0));
    const double hi = (grid.center()[a] + l - s.u[a]) / (sd * std::sqrt(2.0));
    inside *= 0.5 * (std::erf(hi) - std::erf(lo));
  }
  return 1.0 - inside;
}

VelocityFunction maxwellian(const MacroState& s, const VelocityGrid& grid) {
  if (!(s.rho > 0.0) || !(s.theta > 0.0)) throw DomainError("Maxwellian needs rho > 0 and theta > 0");
  const double tail = tail_mass_estimate(s, grid);
  if (tail > 1e-7) {
    std::ostringstream os;
    os << "velocity box [-" << grid.half_width() << ", " << grid.half_width()
       << "]^3 truncates Maxwellian tail mass fraction " << tail;
    log::warn(os.str());
  }
  VelocityFunction f(grid.size());
  const double rt = kGasConstant * s.theta;
  const double pref = s.rho / std::pow(2.0 * kPi * rt, 1.5);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = pref * std::exp(-norm2(grid.node(i) - s.u) / (2.0 * rt));
  return f;
}

double integrate(std::span<const double> f, const VelocityGrid& grid) {
  double s = 0.0;
  for (double x : f) s += x;
  return s * grid.weight();
}

double inner(std::span<const double> f, std::span<const double> g, const VelocityGrid& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s * grid.weight();
}

double l2_norm(std::span<const double> f, const VelocityGrid& grid) { return std::sqrt(inner(f, f, grid)); }

FluidMoments fluid_moments(std::span<const double> f, const VelocityGrid& grid) {
  FluidMoments m;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& v = grid.node(i);
    m.mass += f[i];
    for (int a = 0; a < 3; ++a) m.momentum[a] += v[a] * f[i];
    m.energy += 0.5 * norm2(v) * f[i];
  }
  const double w = grid.weight();
  m.mass *= w;
  for (auto& p : m.momentum) p *= w;
  m.energy *= w;
  return m;
}

MacroState macro_from_fluid(const FluidMoments& m) {
  if (!(m.mass > 0.0)) {
    std::ostringstream os;
    os << "degenerate moments: non-positive mass " << m.mass;
    throw NumericalError(os.str());
  }
  MacroState s;
  s.rho = m.mass;
  s.u = (1.0 / m.mass) * m.momentum;
  // rho (e + |u|^2/2) = E with e = (3/2) R theta = theta
  const double e = m.energy / m.mass - 0.5 * norm2(s.u);
  s.theta = e / (1.5 * kGasConstant);
  if (!(s.theta > 0.0)) {
    std::ostringstream os;
    os << "degenerate moments: computed temperature " << s.theta << " (mass " << m.mass << ")";
    throw NumericalError(os.str());
  }
  return s;
}

MacroState moments(std::span<const double> f, const VelocityGrid& grid) {
  return macro_from_fluid(fluid_moments(f, grid));
}

VelocityFunction conservative_maxwellian(const FluidMoments& target, const VelocityGrid& grid) {
  MacroState s = macro_from_fluid(target);
  const std::array<double, 5> want = {target.mass, target.momentum[0], target.momentum[1], target.momentum[2],
                                      target.energy};
  const double scale = std::max({std::abs(target.mass), std::abs(target.energy), 1e-300});
  VelocityFunction m;
  for (int it = 0; it < 20; ++it) {
    const double rt = kGasConstant * s.theta;
    const double pref = s.rho / std::pow(2.0 * kPi * rt, 1.5);
    m.assign(grid.size(), 0.0);
    Eigen::Matrix<double, 5, 5> jac = Eigen::Matrix<double, 5, 5>::Zero();
    Eigen::Matrix<double, 5, 1> resid;
    std::array<double, 5> have{};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec3& v = grid.node(i);
      const Vec3 c = v - s.u;
      const double c2 = norm2(c);
      const double mi = pref * std::exp(-c2 / (2.0 * rt));
      m[i] = mi;
      const std::array<double, 5> xi = collision_invariants(v);
      // d M / d(rho, u1, u2, u3, theta)
      const std::array<double, 5> dm = {mi / s.rho, mi * c[0] / rt, mi * c[1] / rt, mi * c[2] / rt,
                                        mi * (-1.5 / s.theta + c2 / (2.0 * rt * s.theta))};
      for (int a = 0; a < 5; ++a) {
        have[a] += xi[a] * mi;
        for (int b = 0; b < 5; ++b) jac(a, b) += xi[a] * dm[b];
      }
    }
    const double w = grid.weight();
    double err = 0.0;
    for (int a = 0; a < 5; ++a) {
      resid(a) = have[a] * w - want[a];
      err = std::max(err, std::abs(resid(a)));
    }
    if (err <= 1e-15 * scale) break;
    jac *= w;
    const Eigen::Matrix<double, 5, 1> step = jac.fullPivLu().solve(resid);
    s.rho -= step(0);
    for (int a = 0; a < 3; ++a) s.u[a] -= step(1 + a);
    s.theta -= step(4);
    if (!(s.rho > 0.0) || !(s.theta > 0.0)) throw NumericalError("conservative Maxwellian: Newton left the admissible set");
  }
  return m;
}

std::array<double, 5> collision_invariants(const Vec3& v) { return {1.0, v[0], v[1], v[2], 0.5 * norm2(v)}; }

std::array<double, 5> invariant_moments(std::span<const double> f, const VelocityGrid& grid) {
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto xi = collision_invariants(grid.node(i));
    for (int a = 0; a < 5; ++a) out[a] += xi[a] * f[i];
  }
  for (auto& x : out) x *= grid.weight();
  return out;
}

ChiBasis::ChiBasis(const MacroState& state, const VelocityGrid& grid)
    : state_(state), grid_(&grid), m_(velocity::maxwellian(state, grid)) {
  const double rt = kGasConstant * state.theta;
  const double srho = std::sqrt(state.rho);
  for (auto& c : chi_) c.resize(grid.size());
  for (auto& d : dual_) d.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3 c = grid.node(i) - state.u;
    std::array<double, 5> p = {1.0 / srho, c[0] / std::sqrt(rt * state.rho), c[1] / std::sqrt(rt * state.rho),
                               c[2] / std::sqrt(rt * state.rho),
                               (norm2(c) / rt - 3.0) / std::sqrt(6.0 * state.rho)};
    for (int a = 0; a < 5; ++a) {
      dual_[a][i] = p[a];
      chi_[a][i] = p[a] * m_[i];
    }
  }
  Eigen::Matrix<double, 5, 5> g;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      gram_[a][b] = inner(chi_[a], dual_[b], grid);
      g(a, b) = gram_[a][b];
    }
  const Eigen::Matrix<double, 5, 5> gi = g.inverse();
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) gram_inv_[a][b] = gi(a, b);
}

ChiBasis ChiBasis::from_distribution(std::span<const double> f, const VelocityGrid& grid) {
  return ChiBasis(moments(f, grid), grid);
}

double ChiBasis::orthonormality_defect() const {
  double d = 0.0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) d = std::max(d, std::abs(gram_[a][b] - (a == b ? 1.0 : 0.0)));
  return d;
}

std::array<double, 5> ChiBasis::coefficients(std::span<const double> f) const {
  std::array<double, 5> raw{};
  for (int a = 0; a < 5; ++a) raw[a] = inner(f, dual_[a], *grid_);
  // P0 f = sum_b c_b chi_b with (P0 f, dual_a) = (f, dual_a); gram_(b, a) = (chi_b, dual_a)
  std::array<double, 5> c{};
  for (int b = 0; b < 5; ++b)
    for (int a = 0; a < 5; ++a) c[b] += gram_inv_[a][b] * raw[a];
  return c;
}

VelocityFunction ChiBasis::project_P0(std::span<const double> f) const {
  const auto c = coefficients(f);
  VelocityFunction out(f.size(), 0.0);
  for (int a = 0; a < 5; ++a)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[a] * chi_[a][i];
  return out;
}

VelocityFunction ChiBasis::project_P1(std::span<const double> f) const {
  VelocityFunction out = project_P0(f);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f[i] - out[i];
  return out;
}

VelocityFunction project_P0(std::span<const double> f, const MacroState& state, const VelocityGrid& grid) {
  return ChiBasis(state, grid).project_P0(f);
}

VelocityFunction project_P1(std::span<const double> f, const MacroState& state, const VelocityGrid& grid) {
  return ChiBasis(state, grid).project_P1(f);
}

GlobalMaxwellian::GlobalMaxwellian(const VelocityGrid& grid) : grid_(&grid) {
  mu_.resize(grid.size());
  sqrt_mu_.resize(grid.size());
  amplification_ = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    mu_[i] = maxwellian_value(kGlobalState, grid.node(i));
    sqrt_mu_[i] = std::sqrt(mu_[i]);
    amplification_ = std::max(amplification_, 1.0 / sqrt_mu_[i]);
  }
}

double GlobalMaxwellian::macro_component(std::span<const double> f) const { return inner(sqrt_mu_, f, *grid_); }

VelocityFunction GlobalMaxwellian::project_Pmu2(std::span<const double> f) const {
  const double a = macro_component(f);
  VelocityFunction out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * sqrt_mu_[i];
  return out;
}

VelocityFunction GlobalMaxwellian::project_Pmu(std::span<const double> f) const {
  double a = 0.0, c = 0.0;
  Vec3 b{};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& v = grid_->node(i);
    const double sf = sqrt_mu_[i] * f[i];
    a += sf;
    for (int k = 0; k < 3; ++k) b[k] += v[k] * sf;
    c += (norm2(v) - 3.0) / 6.0 * sf;
  }
  const double w = grid_->weight();
  a *= w;
  c *= w;
  for (auto& x : b) x *= w;
  VelocityFunction out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& v = grid_->node(i);
    out[i] = (a + dot(v, b) + (norm2(v) - 3.0) * c) * sqrt_mu_[i];
  }
  return out;
}

double entropy_S(const MacroState& s, const VelocityGrid& grid) {
  const double rt = kGasConstant * s.theta;
  const double log_pref = std::log(s.rho) - 1.5 * std::log(2.0 * kPi * rt);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double expo = -norm2(grid.node(i) - s.u) / (2.0 * rt);
    const double m = std::exp(log_pref + expo);
    acc += m * (log_pref + expo);
  }
  acc *= grid.weight();
  return -acc / (1.5 * s.rho);
}

double entropy_S_closed_form(const MacroState& s) {
  if (!(s.rho > 0.0) || !(s.theta > 0.0)) throw DomainError("entropy needs rho > 0 and theta > 0");
  return -(2.0 / 3.0) * std::log(s.rho) + std::log(2.0 * kPi * kGasConstant * s.theta) + 1.0;
}

double psi(double s) { return s - std::log(s) - 1.0; }

double entropy_eta(const MacroState& s, const MacroState& bar) {
  if (!(s.rho > 0.0) || !(s.theta > 0.0) || !(bar.rho > 0.0) || !(bar.theta > 0.0))
    throw DomainError("entropy eta needs admissible states");
  return 1.5 * (0.5 * s.rho * norm2(s.u - bar.u) + (2.0 / 3.0) * s.rho * bar.theta * psi(bar.rho / s.rho) +
                s.rho * bar.theta * psi(s.theta / bar.theta));
}

void write_velocity_csv(std::ostream& os, std::span<const double> f, const VelocityGrid& grid) {
  os << "v1,v2,v3,value\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Vec3& v = grid.node(i);
    os << v[0] << ',' << v[1] << ',' << v[2] << ',' << f[i] << '\n';
  }
}

}  // namespace kwave::velocity
