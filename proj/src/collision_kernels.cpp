#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "kwave/collision.hpp"

namespace kwave::collision {

bool quadratic_stencil(const VelocityGrid& grid, const Vec3& point, Stencil& out) {
  const int n = grid.points_per_axis();
  const double h = grid.spacing();
  const double lo = grid.axis(0);
  const double hi = grid.axis(n - 1);
  for (int a = 0; a < 3; ++a) {
    const double x = point[a] - grid.center()[a];
    if (!(x >= lo && x <= hi)) return false;
    const double s = (x - lo) / h;
    int c = static_cast<int>(std::lround(s));
    c = std::clamp(c, 1, n - 2);
    const double t = s - c;
    out.base[a] = c - 1;
    out.weight[a] = {0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)};
  }
  return true;
}

namespace kernels {

namespace {

inline void deposit(double* target, const VelocityGrid& grid, const Stencil& st, double mass) {
  for (int p = 0; p < 3; ++p) {
    const double wp = mass * st.weight[0][p];
    for (int q = 0; q < 3; ++q) {
      const double wpq = wp * st.weight[1][q];
      double* row = target + grid.index(st.base[0] + p, st.base[1] + q, st.base[2]);
      row[0] += wpq * st.weight[2][0];
      row[1] += wpq * st.weight[2][1];
      row[2] += wpq * st.weight[2][2];
    }
  }
}

inline double kinetic_part(double r, double gamma) { return gamma == 1.0 ? r : std::pow(r, gamma); }

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

constexpr double kNegligible = 1e-15;

}  // namespace

CollisionParts collision_serial(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                const KernelConfig& kernel) {
  const auto sigma = sigma_quadrature(kernel);
  const std::size_t n = grid.size();
  const double dv = grid.weight();
  CollisionParts out{VelocityFunction(n, 0.0), VelocityFunction(n, 0.0)};
  Stencil sp, sps;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& v = grid.node(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec3& vs = grid.node(j);
      const double r = norm(v - vs);
      const Vec3 k = (1.0 / r) * (v - vs);
      const auto [e1, e2] = transverse_frame(k);
      const double kin = kinetic_part(r, kernel.gamma);
      for (const auto& s : sigma) {
        const Vec3 dir = s.along * k + (s.across1 * e1 + s.across2 * e2);
        const PostCollision pc = post_collision(v, vs, (1.0 / norm(dir)) * dir);
        if (!quadratic_stencil(grid, pc.v, sp) || !quadratic_stencil(grid, pc.v_star, sps)) continue;
        const double m = kin * s.weight * g[j] * f[i] * dv;
        out.loss[i] += m;
        deposit(out.gain.data(), grid, sp, m);
      }
    }
  }
  return out;
}

CollisionParts collision_parallel(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                  const KernelConfig& kernel) {
  const auto sigma = sigma_quadrature(kernel);
  const int ns = static_cast<int>(sigma.size());
  const long n = static_cast<long>(grid.size());
  const double dv = grid.weight();
  const double gamma = kernel.gamma;
  const double cutoff = kNegligible * max_abs(g) * max_abs(f);
  CollisionParts out{VelocityFunction(n, 0.0), VelocityFunction(n, 0.0)};
  // per-thread buffers merged in thread order with a static cyclic schedule: bitwise
  // reproducible for a fixed thread count
  const int threads = omp_get_max_threads();
  std::vector<std::vector<double>> gains(threads), losses(threads);

#pragma omp parallel num_threads(threads)
  {
    auto& gain = gains[omp_get_thread_num()];
    auto& loss = losses[omp_get_thread_num()];
    gain.assign(n, 0.0);
    loss.assign(n, 0.0);
    Stencil sp, sps;
#pragma omp for schedule(static, 8)
    for (long i = 0; i < n; ++i) {
      const Vec3& v = grid.node(i);
      for (long j = i + 1; j < n; ++j) {
        // event (i, j, sigma) carries g_j f_i; its mirror (j, i, -sigma) carries g_i f_j
        const double ma = g[j] * f[i];
        const double mb = g[i] * f[j];
        if (std::abs(ma) + std::abs(mb) <= cutoff) continue;
        const Vec3& vs = grid.node(j);
        const Vec3 rel = v - vs;
        const double r = norm(rel);
        const Vec3 k = (1.0 / r) * rel;
        const auto [e1, e2] = transverse_frame(k);
        const double scale = kinetic_part(r, gamma) * dv;
        const Vec3 c = 0.5 * (v + vs);
        const double half = 0.5 * r;
        double kept = 0.0;
        for (int q = 0; q < ns; ++q) {
          const SigmaNode& s = sigma[q];
          const Vec3 d = half * (s.along * k + (s.across1 * e1 + s.across2 * e2));
          if (!quadratic_stencil(grid, c + d, sp) || !quadratic_stencil(grid, c - d, sps)) continue;
          const double w = scale * s.weight;
          kept += w;
          if (ma != 0.0) deposit(gain.data(), grid, sp, w * ma);
          if (mb != 0.0) deposit(gain.data(), grid, sps, w * mb);
        }
        loss[i] += kept * ma;
        loss[j] += kept * mb;
      }
    }
  }
  for (int t = 0; t < threads; ++t) {
    if (gains[t].empty()) continue;
    for (long i = 0; i < n; ++i) {
      out.gain[i] += gains[t][i];
      out.loss[i] += losses[t][i];
    }
  }
  return out;
}

Eigen::MatrixXd assemble_linearized(std::span<const double> m, const VelocityGrid& grid, const KernelConfig& kernel) {
  const auto sigma = sigma_quadrature(kernel);
  const int ns = static_cast<int>(sigma.size());
  const long n = static_cast<long>(grid.size());
  const double dv = grid.weight();
  const double cutoff = kNegligible * max_abs(m);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);

  // Column c collects sum_{j, sigma} 2 B M_j [l(v') + l(v'_*) - delta_c - delta_j].
#pragma omp parallel for schedule(dynamic, 8)
  for (long c = 0; c < n; ++c) {
    double* col = a.col(c).data();
    const Vec3& v = grid.node(c);
    Stencil sp, sps;
    for (long j = 0; j < n; ++j) {
      if (j == c || std::abs(m[j]) <= cutoff) continue;
      const Vec3& vs = grid.node(j);
      const Vec3 rel = v - vs;
      const double r = norm(rel);
      const Vec3 k = (1.0 / r) * rel;
      const auto [e1, e2] = transverse_frame(k);
      const double scale = 2.0 * kinetic_part(r, kernel.gamma) * dv * m[j];
      const Vec3 mid = 0.5 * (v + vs);
      const double half = 0.5 * r;
      double kept = 0.0;
      for (int q = 0; q < ns; ++q) {
        const SigmaNode& s = sigma[q];
        const Vec3 d = half * (s.along * k + (s.across1 * e1 + s.across2 * e2));
        if (!quadratic_stencil(grid, mid + d, sp) || !quadratic_stencil(grid, mid - d, sps)) continue;
        const double w = scale * s.weight;
        kept += w;
        deposit(col, grid, sp, w);
        deposit(col, grid, sps, w);
      }
      col[c] -= kept;
      col[j] -= kept;
    }
  }
  return a;
}

}  // namespace kernels
}  // namespace kwave::collision
