#pragma once

// Perturbation variables, energy and dissipation surrogates, the anisotropic
// L^2_D norm and the time-asymptotic metric, evaluated on solver snapshots.

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kwave/collision.hpp"
#include "kwave/solver.hpp"

namespace kwave::diagnostics {

using solver::SolutionSnapshot;
using solver::Solver;
using velocity::VelocityGrid;

/// Per-cell perturbation of a snapshot around the approximate wave.
struct PerturbationField {
  double time = 0.0;
  std::vector<std::array<double, 5>> macro;  // (rho~, u1~, u2~, u3~, theta~)
  std::vector<double> g;                     // g~ = mu^{-1/2} (G - G-bar), cell-major
  std::vector<double> f;                     // f~ = mu^{-1/2} F_2 (two species; empty otherwise)
  std::vector<double> a;                     // int sqrt(mu) f~ per cell (two species)
  std::vector<Vec3> grad_phi;                // per cell (two species; empty otherwise)
  std::vector<double> G;                     // G = F_1 - M, cell-major
  std::vector<double> G_bar;                 // cell-major
};

/// Builds G-bar for one cell from the local state and the wave gradients.
///
/// BGK and collisionless runs use L_M^{-1} = -tau on the microscopic subspace.
/// Quadrature runs use the microscopic inverse at the plus end state.
class GbarModel {
 public:
  explicit GbarModel(const Solver& solver);
  std::vector<double> operator()(const velocity::MacroState& local, double theta_bar_x1, double u1_bar_x1) const;

 private:
  const Solver* solver_;
  std::shared_ptr<const collision::MicroscopicInverse> inverse_;
};

/// M from the discrete moments of F_1 (so that (G, xi_i) = 0 to round-off), G = F_1 - M,
/// G-bar from the wave gradients, then g~ and f~.
PerturbationField decompose(const Solver& solver, const SolutionSnapshot& s, const GbarModel& gbar);

struct EnergyReport {
  int k = 2;
  int m = 1;
  double Ek = 0.0;
  double macro = 0.0;
  double g = 0.0;
  double f = 0.0;
  double field = 0.0;
  double Dk = 0.0;
  /// |t - t_neighbor| of the time difference (0 when no time derivative was taken).
  double t_stencil = 0.0;
  /// max over the box of <v>^{k+2} mu^{-1/2}: the largest factor the velocity weights can apply.
  double amplification = 0.0;
};

/// E_k and the D_k surrogate with |alpha| <= m over (t, x1[, x2]); m = 2 adds d_x1x1 only.
///
/// Spatial derivatives are centered inside and one-sided at the ends. The time
/// derivative is the difference with `neighbor`; without it alpha is spatial only.
/// D_k replaces the L^2_D norm by its weighted-L^2 part <v>^{(gamma + 2s)/2}.
EnergyReport energy_Ek(const Solver& solver, const PerturbationField& p, const PerturbationField* neighbor, int k,
                       int m);

/// |<v>^{(gamma+2s)/2} f|^2 + sum over node pairs with d(v, v') <= 1 of
/// (<v><v'>)^{(gamma+2s+1)/2} (f - f')^2 / d^{3+2s} h^6, with
/// d(v, v') = (|v - v'|^2 + (|v|^2 - |v'|^2)^2 / 4)^{1/2}. ConfigError above `max_pairs`.
double L2D_seminorm(std::span<const double> f, const VelocityGrid& grid, double gamma, double s,
                    double max_pairs = 2e9);
/// The weighted-L^2 part alone.
double L2D_weighted_part(std::span<const double> f, const VelocityGrid& grid, double gamma, double s);

/// sup over cells and species of || <v>^k mu^{-1/2} (F - M[ideal fan at x1 / (1 + t)]) ||_{L^2_v}.
double convergence_metric(const Solver& solver, const SolutionSnapshot& s, int k);

/// int eta(state | approximate wave) dx.
double eta_integral(const Solver& solver, const SolutionSnapshot& s);
/// || (rho~, u~, theta~) ||^2_{L^2_x} around the approximate wave.
double macro_perturbation_l2(const Solver& solver, const SolutionSnapshot& s);
/// int H(F) dx summed over species.
double h_integral(const Solver& solver, const SolutionSnapshot& s);
/// int rho dx of F_1.
double total_mass(const Solver& solver, const SolutionSnapshot& s);
/// ||grad phi||_{L^2_x} (0 for one species).
double grad_phi_norm(const Solver& solver, const SolutionSnapshot& s);

struct DiagnosticsRow {
  double t = 0.0;
  EnergyReport energy;
  double conv_metric = 0.0;
  double eta_int = 0.0;
  double H = 0.0;
  double mass = 0.0;
  double grad_phi = 0.0;
  long clipped = 0;
};

/// Column header of the diagnostics CSV.
const char* diagnostics_header();
void write_diagnostics_row(std::ostream& os, const DiagnosticsRow& row);

/// Collects diagnostics rows while a solver runs.
class Monitor {
 public:
  explicit Monitor(const Solver& solver);
  /// Observer-compatible entry point.
  void observe(const SolutionSnapshot& current, const SolutionSnapshot* neighbor);
  DiagnosticsRow evaluate(const SolutionSnapshot& current, const SolutionSnapshot* neighbor) const;
  const std::vector<DiagnosticsRow>& rows() const { return rows_; }

 private:
  const Solver* solver_;
  GbarModel gbar_;
  std::vector<DiagnosticsRow> rows_;
};

/// Least-squares log-log slope of y against t over the last decade of t (t >= t_max / 10, t > 0).
/// Returns NaN with fewer than two usable points.
double tail_slope(std::span<const double> t, std::span<const double> y);

}  // namespace kwave::diagnostics
