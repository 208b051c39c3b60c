#pragma once

// Electrostatic part of the two-species system: Poisson solve for the potential
// and the velocity-space force term.

#include <Eigen/SparseCholesky>
#include <span>
#include <vector>

#include "kwave/mesh.hpp"
#include "kwave/velocity_moments.hpp"

namespace kwave::field {

using velocity::VelocityFunction;
using velocity::VelocityGrid;

/// Condition at the x1 ends; duct walls are always Neumann.
enum class XBoundary { neumann, periodic };

struct FieldState {
  std::vector<double> phi;
  std::vector<double> e1;  // E = -grad phi, cell centered
  std::vector<double> e2;  // zero on the line
  double neutrality_defect = 0.0;  // mean of the source removed by the gauge
};

/// Second-order finite-volume solver for -Delta phi = source with the neutral
/// gauge: the mean source is subtracted and phi is returned with zero mean.
/// The factorization is computed once per mesh.
class PoissonSolver {
 public:
  PoissonSolver(const Mesh& mesh, XBoundary x_boundary = XBoundary::neumann);

  FieldState solve(std::span<const double> source) const;

 private:
  Mesh mesh_;
  XBoundary xb_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

FieldState poisson_solve(std::span<const double> source, const Mesh& mesh,
                         XBoundary x_boundary = XBoundary::neumann);

/// E from phi by centered differences (mirror ghosts at Neumann ends, wrap for periodic).
void field_from_potential(const Mesh& mesh, XBoundary x_boundary, FieldState& state);

/// ||grad phi||_{L^2_x}.
double grad_phi_norm(const FieldState& state, const Mesh& mesh);

/// Rate -a . grad_v F for acceleration a = charge_sign * E, in conservative
/// upwind flux form with zero flux through the faces of the velocity box.
VelocityFunction vlasov_force(std::span<const double> f, const Vec3& e, int charge_sign, const VelocityGrid& grid);

/// Explicit upwind update F += dt * vlasov_force; returns the velocity CFL
/// number dt * sum_a |a_a| / h_v and throws NumericalError when it exceeds 1.
double apply_vlasov_force(std::span<double> f, const Vec3& e, int charge_sign, double dt, const VelocityGrid& grid);

struct ManufacturedError {
  int cells = 0;
  double h = 0.0;
  double l2_error = 0.0;
};

/// Periodic box [-L, L] with source 2 sin(pi x / L); exact phi = (2 L^2 / pi^2) sin(pi x / L).
ManufacturedError poisson_manufactured(int cells, double half_length);

}  // namespace kwave::field
