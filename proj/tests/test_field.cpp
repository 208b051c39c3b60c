#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "kwave/field.hpp"

using namespace kwave;
using namespace kwave::field;

namespace {

Mesh duct_mesh(int nx, int ny) {
  Mesh m;
  m.geometry = Geometry::duct;
  m.x_min = -2.0;
  m.x_max = 2.0;
  m.nx = nx;
  m.y_min = 0.0;
  m.y_max = 1.0;
  m.ny = ny;
  return m;
}

// -Delta_h phi with mirror ghosts on every Neumann side and wrap on periodic x ends.
std::vector<double> neg_laplacian(const std::vector<double>& phi, const Mesh& m, XBoundary xb) {
  std::vector<double> out(phi.size());
  const double hx2 = m.hx() * m.hx(), hy2 = m.hy() * m.hy();
  for (int i = 0; i < m.nx; ++i)
    for (int j = 0; j < m.ny; ++j) {
      auto at = [&](int a, int b) {
        if (xb == XBoundary::periodic) a = (a + m.nx) % m.nx;
        a = std::clamp(a, 0, m.nx - 1);
        b = std::clamp(b, 0, m.ny - 1);
        return phi[m.index(a, b)];
      };
      const double c = phi[m.index(i, j)];
      double v = -(at(i - 1, j) - 2 * c + at(i + 1, j)) / hx2;
      if (m.geometry == Geometry::duct) v -= (at(i, j - 1) - 2 * c + at(i, j + 1)) / hy2;
      out[m.index(i, j)] = v;
    }
  return out;
}

}  // namespace

TEST_CASE("manufactured periodic solution converges at second order") {
  double previous = 0.0;
  for (int n : {16, 32, 64, 128}) {
    const auto e = poisson_manufactured(n, 1.0);
    CHECK(e.h == doctest::Approx(2.0 / n));
    if (previous > 0.0) CHECK(std::log2(previous / e.l2_error) == doctest::Approx(2.0).epsilon(0.1));
    previous = e.l2_error;
  }
}

TEST_CASE("Neumann solve satisfies the discrete equation with the neutral gauge") {
  for (const Mesh& m : {[] {
                          Mesh line;
                          line.nx = 40;
                          return line;
                        }(),
                        duct_mesh(12, 9)}) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> src(m.cells());
    for (double& s : src) s = 0.3 + d(rng);
    const double mean = std::accumulate(src.begin(), src.end(), 0.0) / src.size();
    const PoissonSolver solver(m);
    const auto state = solver.solve(src);
    CHECK(state.neutrality_defect == doctest::Approx(mean).epsilon(1e-12));
    CHECK(std::abs(std::accumulate(state.phi.begin(), state.phi.end(), 0.0)) < 1e-10);
    const auto lap = neg_laplacian(state.phi, m, XBoundary::neumann);
    for (std::size_t c = 0; c < src.size(); ++c) CHECK(lap[c] == doctest::Approx(src[c] - mean).epsilon(1e-9).scale(1.0));
    // Zero-flux walls: the discrete Laplacian integrates to zero.
    CHECK(std::abs(std::accumulate(lap.begin(), lap.end(), 0.0)) < 1e-9);
    CHECK_THROWS_AS(solver.solve(std::vector<double>(3, 0.0)), ConfigError);
  }
}

TEST_CASE("field is unchanged by a constant added to the potential or the source") {
  const Mesh m = duct_mesh(10, 6);
  std::vector<double> src(m.cells());
  for (int i = 0; i < m.nx; ++i)
    for (int j = 0; j < m.ny; ++j) src[m.index(i, j)] = std::sin(m.x(i)) * std::cos(3.0 * m.y(j));
  auto a = poisson_solve(src, m);
  for (double& s : src) s += 4.0;
  const auto b = poisson_solve(src, m);
  for (std::size_t c = 0; c < m.cells(); ++c) {
    CHECK(a.e1[c] == doctest::Approx(b.e1[c]).epsilon(1e-10).scale(1.0));
    CHECK(a.e2[c] == doctest::Approx(b.e2[c]).epsilon(1e-10).scale(1.0));
  }
  FieldState shifted = a;
  for (double& p : shifted.phi) p += 2.5;
  field_from_potential(m, XBoundary::neumann, shifted);
  for (std::size_t c = 0; c < m.cells(); ++c) {
    CHECK(shifted.e1[c] == doctest::Approx(a.e1[c]).epsilon(1e-12).scale(1.0));
    CHECK(shifted.e2[c] == doctest::Approx(a.e2[c]).epsilon(1e-12).scale(1.0));
  }
  CHECK(grad_phi_norm(shifted, m) == doctest::Approx(grad_phi_norm(a, m)));
}

TEST_CASE("periodic line solve") {
  Mesh m;
  m.x_min = -kPi;
  m.x_max = kPi;
  m.nx = 64;
  std::vector<double> src(m.cells());
  for (int i = 0; i < m.nx; ++i) src[i] = std::cos(m.x(i));
  const auto state = poisson_solve(src, m, XBoundary::periodic);
  const auto lap = neg_laplacian(state.phi, m, XBoundary::periodic);
  for (int i = 0; i < m.nx; ++i) CHECK(lap[i] == doctest::Approx(src[i]).epsilon(1e-9).scale(1.0));
  // E = -phi' with phi ~ cos x.
  for (int i = 0; i < m.nx; ++i) CHECK(state.e1[i] == doctest::Approx(std::sin(m.x(i))).epsilon(0.01).scale(1.0));
}

TEST_CASE("force term conserves mass and transfers momentum") {
  const velocity::VelocityGrid grid(6.0, 16);
  const auto f = velocity::maxwellian({1.0, {0.2, 0.0, 0.0}, 1.2}, grid);
  const Vec3 e{0.3, -0.1, 0.0};
  for (int sign : {1, -1}) {
    const auto rate = vlasov_force(f, e, sign, grid);
    const auto m = velocity::invariant_moments(rate, grid);
    const double mass = velocity::integrate(f, grid);
    CHECK(std::abs(m[0]) < 1e-14);
    CHECK(m[1] == doctest::Approx(sign * e[0] * mass).epsilon(1e-6));
    CHECK(m[2] == doctest::Approx(sign * e[1] * mass).epsilon(1e-6));
  }
  auto g = f;
  const double cfl = apply_vlasov_force(g, e, 1, 0.1, grid);
  CHECK(cfl == doctest::Approx(0.1 * 0.4 / grid.spacing()));
  CHECK(velocity::integrate(g, grid) == doctest::Approx(velocity::integrate(f, grid)).epsilon(1e-14));
  CHECK_THROWS_AS(apply_vlasov_force(g, {50.0, 0.0, 0.0}, 1, 1.0, grid), NumericalError);
}
