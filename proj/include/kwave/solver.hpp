#pragma once

// Discrete-velocity kinetic solver on a truncated x1 line or an (x1, x2) duct
// slab with specular walls. Strang splitting of transport, the electrostatic
// force (two-species runs) and collisions (BGK or direct quadrature).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kwave/collision.hpp"
#include "kwave/euler_waves.hpp"
#include "kwave/field.hpp"
#include "kwave/mesh.hpp"
#include "kwave/velocity_moments.hpp"

namespace kwave::solver {

using velocity::MacroState;
using velocity::VelocityGrid;

enum class CollisionMode { none, bgk, boltzmann_quadrature };
enum class SpeciesMode { single, two_species_vpb };
enum class Reconstruction { upwind, minmod };

enum class PerturbationKind {
  none,
  b11,           // eps b(x) P1[B-hat_11(w) M]
  b12,           // eps b(x) P1[B-hat_12(w) M]
  density_bump,  // rho -> rho (1 + eps b(x) c(y)), c(y) = cos(pi (y - y_min) / (y_max - y_min)) in a duct
  bimodal,       // M replaced by the mean of M shifted by +/- eps along v1 (x-uniform non-equilibrium)
  random,        // M (1 + eps b(x) xi), xi uniform in [-1, 1] from `seed`
};

/// Initial perturbation on top of the approximate wave. b(x) = exp(-((x - center) / width)^2).
struct Perturbation {
  PerturbationKind kind = PerturbationKind::none;
  double amplitude = 0.0;
  double center = 0.0;
  double width = 1.0;
  std::uint64_t seed = 1;
  /// Two species only: F_2 = charge_amplitude psi(x) M with psi(z) = z exp(-z^2), z = (x - center) / width.
  double charge_amplitude = 0.0;
};

struct Scenario {
  Mesh mesh;
  double v_half_width = 6.0;
  int v_points = 12;
  Vec3 v_center{0.0, 0.0, 0.0};

  CollisionMode collision = CollisionMode::bgk;
  collision::KernelConfig kernel;
  /// BGK relaxation time tau = mu(theta) / p with mu(theta) = viscosity (theta / 1.5)^viscosity_exponent.
  double viscosity = 0.025;
  double viscosity_exponent = 0.5;

  SpeciesMode species = SpeciesMode::single;
  field::XBoundary x_boundary = field::XBoundary::neumann;

  waves::EulerState plus{1.0, 0.0, 1.5};
  /// Wave strength; ignored when `minus` is given.
  double strength = 0.0;
  std::optional<waves::EulerState> minus;

  Perturbation perturbation;

  double t_end = 1.0;
  double cfl = 0.8;
  double output_interval = 0.0;  // 0: initial and final snapshot only
  Reconstruction reconstruction = Reconstruction::upwind;

  int energy_k = 2;          // weight index of E_k
  int derivative_order = 1;  // derivative cap m of E_k
  double work_budget = 5e12; // cell-node updates per run (transport and BGK); quadrature adds its own guard

  /// End states from (plus, strength) or (minus, plus); ConfigError unless rarefaction-connected.
  waves::EndStates end_states() const;
  /// Throws ConfigError with a description of the offending field.
  void validate() const;
  int species_count() const { return species == SpeciesMode::two_species_vpb ? 2 : 1; }
};

/// Distribution samples F[cell * nv + node]; `species` holds F (single) or (F_+, F_-).
struct SolutionSnapshot {
  double time = 0.0;
  long step = 0;
  std::vector<std::vector<double>> species;
  /// Moments of F_1 (F itself, or (F_+ + F_-) / 2).
  std::vector<MacroState> macro;
  /// Potential and field (two species only).
  std::optional<field::FieldState> field;
  long clipped = 0;  // values in [floor, 0) set to zero so far
};

/// Numerical abort inside run(); carries the state at the failing step for dumping.
class RunAborted : public NumericalError {
 public:
  RunAborted(const std::string& what, SolutionSnapshot state)
      : NumericalError(what), state_(std::make_shared<SolutionSnapshot>(std::move(state))) {}
  const SolutionSnapshot& state() const { return *state_; }

 private:
  std::shared_ptr<SolutionSnapshot> state_;
};

/// Wall trace of one cell column: the average of the first interior cell and its mirror ghost.
struct WallTrace {
  MacroState state;
  double normal_mass_flux = 0.0;  // discrete upwind mass flux through the wall face
};

class Solver {
 public:
  static constexpr double kNegativityFloor = -1e-14;

  explicit Solver(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const Mesh& mesh() const { return scenario_.mesh; }
  const VelocityGrid& grid() const { return *grid_; }
  const waves::EndStates& end_states() const { return ends_; }
  /// Approximate wave (smoothed Burgers at t + 1) that the initial data samples.
  const waves::WaveProfile& profile() const { return profile_; }
  /// Ideal fan at x1 / (1 + t), the target of the asymptotic metric.
  const waves::WaveProfile& ideal() const { return ideal_; }

  SolutionSnapshot initialize() const;
  /// Largest dt allowed by the transport CFL number (and the collision frequency in quadrature mode).
  double stable_dt() const;
  /// One Strang step; throws NumericalError on NaN or negativity below the floor.
  void step(SolutionSnapshot& s, double dt) const;

  /// Distribution F_1 of a cell ((F_+ + F_-) / 2 for two species).
  std::vector<double> f1(const SolutionSnapshot& s, std::size_t cell) const;
  /// BGK relaxation time at a state.
  double relaxation_time(const MacroState& state) const;

  /// Ghost fill at a duct wall: the ghost cell mirrored across the wall holds F(x, R v).
  void specular_reflect(std::span<const double> interior, std::span<double> ghost) const;
  /// Trace at the lower (wall 0) or upper (wall 1) duct wall of column i.
  WallTrace wall_trace(const SolutionSnapshot& s, int i, int wall) const;

  /// Recomputes macro fields (and the potential for two species) from the distributions.
  void refresh(SolutionSnapshot& s) const;

  /// Steps to t_end. The observer sees the initial state, every state at output
  /// cadence and the final state. `neighbor` is the state one step away (one step
  /// later at t = 0, one step earlier otherwise) for time differences. Throws RunAborted.
  using Observer = std::function<void(const SolutionSnapshot& current, const SolutionSnapshot* neighbor)>;
  SolutionSnapshot run(const Observer& observer = {}) const;

 private:
  void transport(std::vector<double>& f, double dt) const;
  void collide(SolutionSnapshot& s, double dt) const;
  void apply_force(SolutionSnapshot& s, double dt) const;
  void check_and_clip(SolutionSnapshot& s) const;
  field::FieldState solve_field(const SolutionSnapshot& s) const;

  Scenario scenario_;
  std::unique_ptr<VelocityGrid> grid_;
  waves::EndStates ends_;
  waves::WaveProfile profile_;
  waves::WaveProfile ideal_;
  std::unique_ptr<field::PoissonSolver> poisson_;
  std::vector<std::size_t> mirror_;  // node index with v2 negated (duct only)
  double collision_frequency_ = 0.0; // quadrature mode: max loss frequency at the end states
};

}  // namespace kwave::solver
