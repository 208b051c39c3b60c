#pragma once

// Velocity-space discretization and the macro-micro machinery built on it:
// Maxwellians, fluid moments, the five-dimensional chi basis with its
// projections P0/P1, projections around the global Maxwellian, and entropies.

#include <iosfwd>
#include <span>
#include <vector>

#include "kwave/common.hpp"

namespace kwave::velocity {

/// Uniform midpoint lattice on c + [-L, L]^3 with N points per axis (c = 0 by default).
class VelocityGrid {
 public:
  VelocityGrid(double half_width, int points_per_axis, const Vec3& center = {0.0, 0.0, 0.0});

  double half_width() const { return half_width_; }
  const Vec3& center() const { return center_; }
  int points_per_axis() const { return n_; }
  double spacing() const { return h_; }
  /// Quadrature weight of every node (h^3).
  double weight() const { return h_ * h_ * h_; }
  std::size_t size() const { return nodes_.size(); }

  /// Lattice coordinate relative to the center.
  double axis(int i) const { return -half_width_ + (i + 0.5) * h_; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  std::array<int, 3> multi_index(std::size_t idx) const;
  const Vec3& node(std::size_t idx) const { return nodes_[idx]; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  /// True when v_axis -> -v_axis maps nodes onto nodes.
  bool mirror_symmetric(int axis) const { return center_[axis] == 0.0; }
  /// Index of the node with component `axis` negated; ConfigError if the grid is not mirror symmetric.
  std::size_t reflect(std::size_t idx, int axis) const;
  /// Largest |v_a| over nodes and axes.
  double max_speed() const { return axis_max_; }

 private:
  double half_width_;
  Vec3 center_;
  int n_;
  double h_;
  double axis_max_;
  std::vector<Vec3> nodes_;
};

using VelocityFunction = std::vector<double>;

/// Density, bulk velocity and temperature; e = (3/2) R theta = theta.
struct MacroState {
  double rho = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
  double theta = 1.5;
};

/// Raw collision-invariant moments: int F, int v F, int |v|^2/2 F.
struct FluidMoments {
  double mass = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double energy = 0.0;
};

/// The global Maxwellian mu = M[1, 0, 3/2] (R theta = 1).
inline constexpr MacroState kGlobalState{1.0, {0.0, 0.0, 0.0}, 1.5};

double maxwellian_value(const MacroState& state, const Vec3& v);
/// Mass of M[state] outside the box, from the product of 1-D Gaussian tails.
double tail_mass_estimate(const MacroState& state, const VelocityGrid& grid);
/// Samples M[state] on the grid; warns when the box truncates more than 1e-7 of the mass.
VelocityFunction maxwellian(const MacroState& state, const VelocityGrid& grid);

double integrate(std::span<const double> f, const VelocityGrid& grid);
/// Plain L^2_v pairing sum f g h^3.
double inner(std::span<const double> f, std::span<const double> g, const VelocityGrid& grid);
double l2_norm(std::span<const double> f, const VelocityGrid& grid);

FluidMoments fluid_moments(std::span<const double> f, const VelocityGrid& grid);
/// Throws NumericalError on non-positive mass or temperature.
MacroState macro_from_fluid(const FluidMoments& m);
MacroState moments(std::span<const double> f, const VelocityGrid& grid);

/// Maxwellian whose *discrete* moments equal `target` to round-off (Newton on
/// the five parameters, starting from the continuous moment match).
VelocityFunction conservative_maxwellian(const FluidMoments& target, const VelocityGrid& grid);

/// chi_0..chi_4 for a local Maxwellian, with the pairing (f, g/M) = int f g / M dv.
///
/// P0 uses the Gram-corrected coefficients so that it is an exact projection on
/// the grid; it coincides with sum_i (f, chi_i/M) chi_i up to the orthonormality
/// defect of the sampled basis.
class ChiBasis {
 public:
  ChiBasis(const MacroState& state, const VelocityGrid& grid);
  /// Basis for the Maxwellian of f's own computed moments.
  static ChiBasis from_distribution(std::span<const double> f, const VelocityGrid& grid);

  const MacroState& state() const { return state_; }
  const VelocityFunction& maxwellian() const { return m_; }
  const VelocityFunction& chi(int i) const { return chi_[i]; }
  /// chi_i / M (a polynomial; no division by M is performed).
  const VelocityFunction& dual(int i) const { return dual_[i]; }
  /// (chi_i, chi_j / M) on the grid.
  double gram(int i, int j) const { return gram_[i][j]; }
  double orthonormality_defect() const;

  std::array<double, 5> coefficients(std::span<const double> f) const;
  VelocityFunction project_P0(std::span<const double> f) const;
  VelocityFunction project_P1(std::span<const double> f) const;

 private:
  MacroState state_;
  const VelocityGrid* grid_;
  VelocityFunction m_;
  std::array<VelocityFunction, 5> chi_;
  std::array<VelocityFunction, 5> dual_;
  std::array<std::array<double, 5>, 5> gram_{};
  std::array<std::array<double, 5>, 5> gram_inv_{};
};

VelocityFunction project_P0(std::span<const double> f, const MacroState& state, const VelocityGrid& grid);
VelocityFunction project_P1(std::span<const double> f, const MacroState& state, const VelocityGrid& grid);

/// Collision invariants xi_0..xi_4 = 1, v1, v2, v3, |v|^2/2 at a node.
std::array<double, 5> collision_invariants(const Vec3& v);
/// (f, xi_i)_{L^2_v} for the five invariants.
std::array<double, 5> invariant_moments(std::span<const double> f, const VelocityGrid& grid);

/// Projections around the global Maxwellian mu.
class GlobalMaxwellian {
 public:
  explicit GlobalMaxwellian(const VelocityGrid& grid);
  const VelocityFunction& mu() const { return mu_; }
  const VelocityFunction& sqrt_mu() const { return sqrt_mu_; }
  /// max of mu^{-1/2} over the box: amplification of mu^{-1/2} weighted norms.
  double amplification() const { return amplification_; }

  VelocityFunction project_Pmu(std::span<const double> f) const;
  VelocityFunction project_Pmu2(std::span<const double> f) const;
  /// a = int sqrt(mu) f dv.
  double macro_component(std::span<const double> f) const;

 private:
  const VelocityGrid* grid_;
  VelocityFunction mu_;
  VelocityFunction sqrt_mu_;
  double amplification_;
};

/// S from -(3/2) rho S = int M ln M dv by quadrature (ln M evaluated analytically).
double entropy_S(const MacroState& state, const VelocityGrid& grid);
double entropy_S_closed_form(const MacroState& state);

/// Psi(s) = s - ln s - 1.
double psi(double s);
/// Relative entropy density eta(state | bar).
double entropy_eta(const MacroState& state, const MacroState& bar);

/// CSV dump: v1,v2,v3,value with 17 significant digits.
void write_velocity_csv(std::ostream& os, std::span<const double> f, const VelocityGrid& grid);

}  // namespace kwave::velocity
