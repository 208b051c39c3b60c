#include "kwave/field.hpp"

#include <cmath>
#include <sstream>

namespace kwave::field {

PoissonSolver::PoissonSolver(const Mesh& mesh, XBoundary x_boundary) : mesh_(mesh), xb_(x_boundary) {
  mesh_.validate();
  const int nx = mesh.nx;
  const int ny = mesh.ny;
  const double ax = 1.0 / (mesh.hx() * mesh.hx());
  const double ay = mesh.geometry == Geometry::duct ? 1.0 / (mesh.hy() * mesh.hy()) : 0.0;
  const auto n = static_cast<Eigen::Index>(mesh.cells());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  // Node 0 is pinned (phi_0 = 0): its row and column become the identity. For a
  // neutral source the dropped equation is implied by the others.
  auto couple = [&](Eigen::Index p, Eigen::Index q, double a) {
    if (p == 0 || q == 0) {
      if (p != 0) trip.emplace_back(p, p, a);
      return;
    }
    trip.emplace_back(p, p, a);
    trip.emplace_back(p, q, -a);
  };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const auto p = static_cast<Eigen::Index>(mesh.index(i, j));
      if (i > 0) couple(p, mesh.index(i - 1, j), ax);
      else if (xb_ == XBoundary::periodic && nx > 1) couple(p, mesh.index(nx - 1, j), ax);
      if (i < nx - 1) couple(p, mesh.index(i + 1, j), ax);
      else if (xb_ == XBoundary::periodic && nx > 1) couple(p, mesh.index(0, j), ax);
      if (j > 0) couple(p, mesh.index(i, j - 1), ay);
      if (j < ny - 1) couple(p, mesh.index(i, j + 1), ay);
    }
  trip.emplace_back(0, 0, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  ldlt_.compute(a);
  if (ldlt_.info() != Eigen::Success) throw NumericalError("Poisson factorization failed");
}

FieldState PoissonSolver::solve(std::span<const double> source) const {
  const auto n = static_cast<Eigen::Index>(mesh_.cells());
  if (static_cast<Eigen::Index>(source.size()) != n) throw ConfigError("Poisson source has the wrong size");
  double mean = 0.0, scale = 0.0;
  for (double s : source) {
    mean += s;
    scale = std::max(scale, std::abs(s));
  }
  mean /= static_cast<double>(n);
  FieldState out;
  out.neutrality_defect = mean;
  if (std::abs(mean) > 1e-8 * std::max(scale, 1.0)) {
    std::ostringstream os;
    os << "Poisson source is not neutral (mean " << mean << "); the mean was removed";
    log::warn(os.str());
  }
  Eigen::VectorXd b(n);
  for (Eigen::Index p = 0; p < n; ++p) b(p) = source[p] - mean;
  b(0) = 0.0;
  Eigen::VectorXd phi = ldlt_.solve(b);
  phi.array() -= phi.mean();
  out.phi.assign(phi.data(), phi.data() + n);
  field_from_potential(mesh_, xb_, out);
  return out;
}

FieldState poisson_solve(std::span<const double> source, const Mesh& mesh, XBoundary x_boundary) {
  return PoissonSolver(mesh, x_boundary).solve(source);
}

void field_from_potential(const Mesh& mesh, XBoundary x_boundary, FieldState& state) {
  const int nx = mesh.nx;
  const int ny = mesh.ny;
  state.e1.assign(mesh.cells(), 0.0);
  state.e2.assign(mesh.cells(), 0.0);
  const auto& phi = state.phi;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const std::size_t p = mesh.index(i, j);
      int il = i - 1, ir = i + 1;
      if (x_boundary == XBoundary::periodic) {
        il = (il + nx) % nx;
        ir = ir % nx;
      } else {
        il = std::max(il, 0);
        ir = std::min(ir, nx - 1);
      }
      state.e1[p] = -(phi[mesh.index(ir, j)] - phi[mesh.index(il, j)]) / (2.0 * mesh.hx());
      if (mesh.geometry == Geometry::duct) {
        const int jl = std::max(j - 1, 0), jr = std::min(j + 1, ny - 1);
        state.e2[p] = -(phi[mesh.index(i, jr)] - phi[mesh.index(i, jl)]) / (2.0 * mesh.hy());
      }
    }
}

double grad_phi_norm(const FieldState& state, const Mesh& mesh) {
  double acc = 0.0;
  for (std::size_t p = 0; p < state.e1.size(); ++p) acc += state.e1[p] * state.e1[p] + state.e2[p] * state.e2[p];
  return std::sqrt(acc * mesh.cell_volume());
}

VelocityFunction vlasov_force(std::span<const double> f, const Vec3& e, int charge_sign, const VelocityGrid& grid) {
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  VelocityFunction out(f.size(), 0.0);
  const std::size_t stride[3] = {static_cast<std::size_t>(n) * n, static_cast<std::size_t>(n), 1};
  for (int a = 0; a < 3; ++a) {
    const double acc = charge_sign * e[a];
    if (acc == 0.0) continue;
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      const int pos = grid.multi_index(idx)[a];
      // upwind flux through the upper face of this node; zero at the box faces
      if (pos == n - 1) continue;
      const std::size_t up = idx + stride[a];
      const double flux = acc * (acc > 0.0 ? f[idx] : f[up]);
      out[idx] -= flux / h;
      out[up] += flux / h;
    }
  }
  return out;
}

double apply_vlasov_force(std::span<double> f, const Vec3& e, int charge_sign, double dt, const VelocityGrid& grid) {
  const double cfl = dt * (std::abs(e[0]) + std::abs(e[1]) + std::abs(e[2])) / grid.spacing();
  if (cfl > 1.0) {
    std::ostringstream os;
    os << "velocity-space CFL number " << cfl << " exceeds 1";
    throw NumericalError(os.str());
  }
  if (cfl == 0.0) return 0.0;
  const auto rate = vlasov_force(f, e, charge_sign, grid);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += dt * rate[i];
  return cfl;
}

ManufacturedError poisson_manufactured(int cells, double half_length) {
  Mesh mesh;
  mesh.x_min = -half_length;
  mesh.x_max = half_length;
  mesh.nx = cells;
  std::vector<double> src(cells);
  for (int i = 0; i < cells; ++i) src[i] = 2.0 * std::sin(kPi * mesh.x(i) / half_length);
  const auto st = poisson_solve(src, mesh, XBoundary::periodic);
  const double amp = 2.0 * half_length * half_length / (kPi * kPi);
  double err = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double d = st.phi[i] - amp * std::sin(kPi * mesh.x(i) / half_length);
    err += d * d;
  }
  return {cells, mesh.hx(), std::sqrt(err * mesh.hx())};
}

}  // namespace kwave::field
