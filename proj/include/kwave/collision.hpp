#pragma once

// Non-cutoff Boltzmann collision machinery on a VelocityGrid: the product
// kernel with angular truncation, sigma-sphere quadrature, direct collision
// sums, linearized operators and their microscopic inverse, Burnett functions,
// transport coefficients, the microscopic wave correction G-bar and the BGK
// surrogate used for time integration.

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "kwave/velocity_moments.hpp"

namespace kwave::collision {

using velocity::MacroState;
using velocity::VelocityFunction;
using velocity::VelocityGrid;

enum class Model { boltzmann, vpb };

struct KernelConfig {
  double gamma = 1.0;             // kinetic exponent, B ~ |v - v*|^gamma
  double s = 0.5;                 // angular singularity order
  double theta_min = kPi / 64.0;  // angular truncation
  int n_theta = 8;                // Gauss nodes in ln(theta)
  int n_phi = 8;                  // uniform azimuthal nodes
  double work_budget = 2.0e10;  // max pair-sigma evaluations per collision sum

  /// Admissible (gamma, s) ranges for the chosen model; throws ConfigError.
  void validate(Model model = Model::boltzmann) const;
};

/// One sigma node in the frame of k = (v - v*)/|v - v*|; `weight` carries
/// b(cos theta) sin(theta) d theta d phi with sin(theta) b(cos theta) = theta^{-1-2s}.
struct SigmaNode {
  double along = 1.0;   // cos theta
  double across1 = 0.0; // sin theta cos phi
  double across2 = 0.0; // sin theta sin phi
  double weight = 0.0;
};

std::vector<SigmaNode> sigma_quadrature(const KernelConfig& kernel);
/// Exact angular mass 2 pi int_{theta_min}^{pi/2} theta^{-1-2s} d theta.
double angular_mass(const KernelConfig& kernel);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct PostCollision {
  Vec3 v;
  Vec3 v_star;
};

/// sigma-representation; throws DomainError for a non-unit sigma.
PostCollision post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma);

/// Orthonormal (e1, e2) completing k to an orthonormal frame, with
/// transverse_frame(-k) = (-e1, -e2) so that swapping v and v* maps each sigma node to -sigma.
std::pair<Vec3, Vec3> transverse_frame(const Vec3& k);

/// Tensor-product quadratic Lagrange stencil (3 x 3 x 3 nodes) around the node
/// nearest to a point. Its weights reproduce 1, v_i and |v|^2 exactly.
struct Stencil {
  std::array<int, 3> base{};                     // first node index per axis
  std::array<std::array<double, 3>, 3> weight{}; // per-axis weights
};

/// False when the point lies outside the hull of the grid nodes.
bool quadratic_stencil(const VelocityGrid& grid, const Vec3& point, Stencil& out);

/// Gain and loss halves of Q(G, F); Q = gain - loss.
struct CollisionParts {
  VelocityFunction gain;
  VelocityFunction loss;
  VelocityFunction total() const;
};

/// Pair-sigma evaluations of one collision sum.
double estimated_work(const VelocityGrid& grid, const KernelConfig& kernel);
/// Throws ConfigError with the estimate when it exceeds the kernel budget.
void check_work_budget(const VelocityGrid& grid, const KernelConfig& kernel);

/// Collision sums use the weak form int Q(G, F) phi = int B G_* F (phi' - phi):
/// every event (v, v*, sigma) removes G(v*) F(v) from node v and deposits it on
/// the quadratic stencil around v'. Each event therefore conserves mass,
/// momentum and energy exactly. Events with v' or v'_* outside the node hull
/// are dropped as a whole (gain and loss together).
namespace kernels {

/// Straight serial reference over ordered pairs with explicit post-collision velocities.
CollisionParts collision_serial(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                const KernelConfig& kernel);

/// OpenMP kernel over unordered pairs (one sigma evaluation serves both
/// orientations) with thread-local deposit buffers. Pairs whose contribution is
/// below 1e-15 of the largest possible one are skipped.
CollisionParts collision_parallel(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                  const KernelConfig& kernel);

/// Dense matrix of g -> 2Q(M, g) + 2Q(g, M); OpenMP over columns.
Eigen::MatrixXd assemble_linearized(std::span<const double> m, const VelocityGrid& grid, const KernelConfig& kernel);

}  // namespace kernels

/// Q(G, F) by direct quadrature with the parallel kernel (cost-guarded).
VelocityFunction collision_Q(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                             const KernelConfig& kernel);
CollisionParts collision_Q_parts(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                 const KernelConfig& kernel);

// --- Linearized operators ------------------------------------------------------

/// L_M g = 2Q(M, g) + 2Q(g, M) around a fixed local Maxwellian.
///
/// Grids up to `kDenseLimit` points per axis keep the assembled matrix; larger
/// grids apply the operator matrix-free.
class LinearizedOperator {
 public:
  static constexpr int kDenseLimit = 16;

  LinearizedOperator(const MacroState& state, const VelocityGrid& grid, const KernelConfig& kernel,
                     bool assemble = true);

  const MacroState& state() const { return state_; }
  const VelocityGrid& grid() const { return *grid_; }
  const KernelConfig& kernel() const { return kernel_; }
  const VelocityFunction& maxwellian() const { return m_; }
  bool dense() const { return matrix_.has_value(); }
  /// Row-major-in-spirit: (*matrix)(i, j) = d(L_M g)_i / d g_j.
  const Eigen::MatrixXd& matrix() const;
  /// Largest absolute row sum (infinity-norm estimate of the operator).
  double norm_estimate() const;

  VelocityFunction apply(std::span<const double> g) const;
  VelocityFunction apply_matrix_free(std::span<const double> g) const;

 private:
  MacroState state_;
  const VelocityGrid* grid_;
  KernelConfig kernel_;
  VelocityFunction m_;
  std::optional<Eigen::MatrixXd> matrix_;
};

VelocityFunction L_M_apply(const LinearizedOperator& op, std::span<const double> g);

/// Operators around the global Maxwellian mu in the f = mu^{-1/2} F variables.
VelocityFunction L_apply(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel);
/// Same, through an operator built around mu (dense when assembled).
VelocityFunction L_apply(std::span<const double> f, const LinearizedOperator& op_mu);
VelocityFunction L2_apply(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel);
VelocityFunction Gamma(std::span<const double> f, std::span<const double> g, const VelocityGrid& grid,
                       const KernelConfig& kernel);
/// Same as Gamma(f, f) but through the serial reference kernel.
VelocityFunction Gamma_reference(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel);

struct PinvResult {
  VelocityFunction g;
  double relative_residual = 0.0;  // ||L_M g - P1 h|| / ||P1 h||
};

/// Solves L_M g = P1 h on the microscopic subspace (P0 g = 0).
///
/// Dense path: LU of P1 L P1 + c P0 with c the mean collision frequency. Matrix-free
/// path: restarted GMRES on the same operator. Box corners that no admissible
/// collision reaches get the shift c on their diagonal so the system stays regular.
class MicroscopicInverse {
 public:
  explicit MicroscopicInverse(std::shared_ptr<const LinearizedOperator> op, double rcond_threshold = 1e-13);

  const LinearizedOperator& op() const { return *op_; }
  const velocity::ChiBasis& basis() const { return basis_; }
  /// Reciprocal condition estimate of the regularized system (dense path; 0 otherwise).
  double rcond() const { return rcond_; }

  PinvResult solve(std::span<const double> h) const;

 private:
  VelocityFunction apply_regularized(std::span<const double> g) const;

  std::shared_ptr<const LinearizedOperator> op_;
  velocity::ChiBasis basis_;
  double shift_ = 1.0;
  double rcond_ = 0.0;
  std::vector<char> inert_;       // nodes no kept collision reaches; held by the shift alone
  std::vector<double> frequency_; // matrix-free path: loss frequency, used as preconditioner
  std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

PinvResult L_M_pinv(const MicroscopicInverse& inverse, std::span<const double> h);

// --- Burnett functions and transport -----------------------------------------

/// A-hat_j(w) = (|w|^2 - 5)/2 w_j.
double burnett_A_hat(int j, const Vec3& w);
/// B-hat_ij(w) = w_i w_j - delta_ij |w|^2 / 3.
double burnett_B_hat(int i, int j, const Vec3& w);

struct BurnettSet {
  MacroState state;
  std::array<VelocityFunction, 3> a_hat;                    // polynomial A-hat_j(w)
  std::array<std::array<VelocityFunction, 3>, 3> b_hat;     // polynomial B-hat_ij(w)
  std::array<VelocityFunction, 3> a;                        // L_M^{-1}(A-hat_j M)
  std::array<std::array<VelocityFunction, 3>, 3> b;         // L_M^{-1}(B-hat_ij M)
  std::array<std::array<double, 3>, 3> aa{};                // (A-hat_i, A_j)
  std::array<std::array<std::array<double, 3>, 3>, 3> ab{}; // (A-hat_i, B_jk)
  std::array<std::array<std::array<std::array<double, 3>, 3>, 3>, 3> bb{};  // (B-hat_ij, B_kl)
  double worst_residual = 0.0;
};

BurnettSet burnett_build(const MicroscopicInverse& inverse);
BurnettSet burnett_build(const MacroState& state, const VelocityGrid& grid, const KernelConfig& kernel);

struct TransportCoefficients {
  double viscosity = 0.0;     // mean over i != j
  double conductivity = 0.0;  // mean over j
  std::array<double, 3> viscosity_pairs{};  // (1,2), (1,3), (2,3)
  std::array<double, 3> conductivity_components{};
};

/// mu = -R theta (B_ij, B-hat_ij), kappa = -R^2 theta (A_j, A-hat_j); NumericalError if not positive.
TransportCoefficients transport_coeffs(const BurnettSet& set);

/// G-bar from the Burnett form sqrt(R/theta) theta_x A_1 + u1_x B_11.
VelocityFunction olG_build(const BurnettSet& set, double theta_bar_x1, double u1_bar_x1);
/// G-bar from L_M^{-1} P1 [v1 (|v-u|^2 theta_x / (2 R theta^2) + (v1 - u1) u1_x / (R theta)) M].
VelocityFunction olG_direct(const MicroscopicInverse& inverse, double theta_bar_x1, double u1_bar_x1);
/// The bracketed source of olG_direct before P1 and inversion.
VelocityFunction olG_source(const MacroState& state, const VelocityGrid& grid, double theta_bar_x1,
                            double u1_bar_x1);

// --- BGK surrogate -------------------------------------------------------------

/// (M[F] - F) / tau with M[F] the discrete-moment-matched Maxwellian of F.
VelocityFunction bgk_relax(std::span<const double> f, double tau, const VelocityGrid& grid);
/// Exact relaxation over dt toward the fixed M[F]: F <- M + (F - M) exp(-dt / tau).
void bgk_step(std::span<double> f, double tau, double dt, const VelocityGrid& grid);
/// H = int F ln F dv (0 ln 0 = 0).
double h_functional(std::span<const double> f, const VelocityGrid& grid);

}  // namespace kwave::collision
