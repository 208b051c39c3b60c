#include "kwave/collision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kwave::collision {

using velocity::ChiBasis;
using velocity::GlobalMaxwellian;
using velocity::maxwellian;

void KernelConfig::validate(Model model) const {
  std::ostringstream err;
  if (!(s > 0.0 && s < 1.0)) err << "angular order s = " << s << " must lie in (0, 1); ";
  if (model == Model::boltzmann) {
    const double lower = std::max(-3.0, -2.0 * s - 1.5);
    if (!(gamma > lower)) err << "gamma = " << gamma << " must exceed max{-3, -2s-3/2} = " << lower << "; ";
  } else {
    if (!(gamma >= 0.0)) err << "VPB kernel needs gamma >= 0 (got " << gamma << "); ";
    if (!(s >= 0.5 && s < 1.0)) err << "VPB kernel needs 1/2 <= s < 1 (got " << s << "); ";
  }
  if (!(theta_min > 0.0 && theta_min < kPi / 2.0)) err << "theta_min must lie in (0, pi/2); ";
  if (n_theta < 1 || n_phi < 1) err << "sigma resolution must be positive; ";
  if (!(work_budget > 0.0)) err << "work budget must be positive; ";
  const std::string msg = err.str();
  if (!msg.empty()) throw ConfigError("kernel: " + msg.substr(0, msg.size() - 2));
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

std::vector<SigmaNode> sigma_quadrature(const KernelConfig& kernel) {
  std::vector<double> gx, gw;
  gauss_legendre(kernel.n_theta, gx, gw);
  const double a = std::log(kernel.theta_min);
  const double b = std::log(kPi / 2.0);
  const double dphi = 2.0 * kPi / kernel.n_phi;
  std::vector<SigmaNode> out;
  out.reserve(static_cast<std::size_t>(kernel.n_theta) * kernel.n_phi);
  for (int i = 0; i < kernel.n_theta; ++i) {
    // theta^{-1-2s} d theta = theta^{-2s} d(ln theta)
    const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[i];
    const double theta = std::exp(t);
    const double w = 0.5 * (b - a) * gw[i] * std::pow(theta, -2.0 * kernel.s) * dphi;
    for (int j = 0; j < kernel.n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      out.push_back({std::cos(theta), std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), w});
    }
  }
  return out;
}

double angular_mass(const KernelConfig& kernel) {
  const double s2 = 2.0 * kernel.s;
  return 2.0 * kPi / s2 * (std::pow(kernel.theta_min, -s2) - std::pow(kPi / 2.0, -s2));
}

PostCollision post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma) {
  if (std::abs(norm(sigma) - 1.0) > 1e-12) throw DomainError("post_collision: sigma is not a unit vector");
  const Vec3 c = 0.5 * (v + v_star);
  const double half = 0.5 * norm(v - v_star);
  return {c + half * sigma, c - half * sigma};
}

std::pair<Vec3, Vec3> transverse_frame(const Vec3& k) {
  // Build the frame for the canonical orientation of k (first nonzero component
  // positive) and flip both vectors for the opposite one.
  int lead = 0;
  while (lead < 2 && k[lead] == 0.0) ++lead;
  const double sign = k[lead] < 0.0 ? -1.0 : 1.0;
  const Vec3 kc = sign * k;
  int axis = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(kc[a]) < std::abs(kc[axis])) axis = a;
  Vec3 helper{0.0, 0.0, 0.0};
  helper[axis] = 1.0;
  Vec3 e1 = cross(kc, helper);
  e1 = (1.0 / norm(e1)) * e1;
  const Vec3 e2 = cross(kc, e1);
  return {sign * e1, sign * e2};
}

VelocityFunction CollisionParts::total() const {
  VelocityFunction out(gain.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gain[i] - loss[i];
  return out;
}

double estimated_work(const VelocityGrid& grid, const KernelConfig& kernel) {
  const double n = static_cast<double>(grid.size());
  return n * n * kernel.n_theta * kernel.n_phi;
}

void check_work_budget(const VelocityGrid& grid, const KernelConfig& kernel) {
  const double work = estimated_work(grid, kernel);
  if (work > kernel.work_budget) {
    std::ostringstream os;
    os << "collision quadrature refused: estimated " << work << " pair-sigma evaluations exceed budget "
       << kernel.work_budget << " (N=" << grid.points_per_axis() << ", n_sigma=" << kernel.n_theta << "x"
       << kernel.n_phi << ")";
    throw ConfigError(os.str());
  }
}

CollisionParts collision_Q_parts(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                                 const KernelConfig& kernel) {
  check_work_budget(grid, kernel);
  return kernels::collision_parallel(g, f, grid, kernel);
}

VelocityFunction collision_Q(std::span<const double> g, std::span<const double> f, const VelocityGrid& grid,
                             const KernelConfig& kernel) {
  return collision_Q_parts(g, f, grid, kernel).total();
}

// --- LinearizedOperator ----------------------------------------------------------

LinearizedOperator::LinearizedOperator(const MacroState& state, const VelocityGrid& grid, const KernelConfig& kernel,
                                       bool assemble)
    : state_(state),
      grid_(&grid),
      kernel_(kernel),
      m_(velocity::maxwellian(state, grid)) {
  check_work_budget(grid, kernel);
  if (assemble && grid.points_per_axis() <= kDenseLimit) {
    matrix_ = kernels::assemble_linearized(m_, grid, kernel);
  }
}

const Eigen::MatrixXd& LinearizedOperator::matrix() const {
  if (!matrix_) throw ConfigError("linearized operator was not assembled (matrix-free mode)");
  return *matrix_;
}

double LinearizedOperator::norm_estimate() const {
  if (matrix_) return matrix_->cwiseAbs().rowwise().sum().maxCoeff();
  // Matrix-free: twice the largest loss frequency bounds the multiplicative part.
  const auto sigma = sigma_quadrature(kernel_);
  double smass = 0.0;
  for (const auto& s : sigma) smass += s.weight;
  double best = 0.0;
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    double nu = 0.0;
    for (std::size_t j = 0; j < grid_->size(); ++j)
      nu += std::pow(norm(grid_->node(i) - grid_->node(j)), kernel_.gamma) * m_[j];
    best = std::max(best, 4.0 * nu * smass * grid_->weight());
  }
  return best;
}

VelocityFunction LinearizedOperator::apply(std::span<const double> g) const {
  if (!matrix_) return apply_matrix_free(g);
  const Eigen::Map<const Eigen::VectorXd> x(g.data(), static_cast<Eigen::Index>(g.size()));
  const Eigen::VectorXd y = (*matrix_) * x;
  return VelocityFunction(y.data(), y.data() + y.size());
}

VelocityFunction LinearizedOperator::apply_matrix_free(std::span<const double> g) const {
  const auto a = kernels::collision_parallel(m_, g, *grid_, kernel_);
  const auto b = kernels::collision_parallel(g, m_, *grid_, kernel_);
  VelocityFunction out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * (a.gain[i] - a.loss[i] + b.gain[i] - b.loss[i]);
  return out;
}

VelocityFunction L_M_apply(const LinearizedOperator& op, std::span<const double> g) { return op.apply(g); }

// --- operators around mu ------------------------------------------------------------

namespace {

VelocityFunction times(std::span<const double> a, std::span<const double> b) {
  VelocityFunction out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

VelocityFunction scaled_by_inverse(std::span<const double> q, std::span<const double> sqrt_mu, double factor) {
  VelocityFunction out(q.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * q[i] / sqrt_mu[i];
  return out;
}

}  // namespace

VelocityFunction L_apply(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel) {
  const GlobalMaxwellian gm(grid);
  const LinearizedOperator op(velocity::kGlobalState, grid, kernel, false);
  return scaled_by_inverse(op.apply_matrix_free(times(gm.sqrt_mu(), f)), gm.sqrt_mu(), 1.0);
}

VelocityFunction L_apply(std::span<const double> f, const LinearizedOperator& op_mu) {
  const GlobalMaxwellian gm(op_mu.grid());
  return scaled_by_inverse(op_mu.apply(times(gm.sqrt_mu(), f)), gm.sqrt_mu(), 1.0);
}

VelocityFunction L2_apply(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel) {
  const GlobalMaxwellian gm(grid);
  const auto q = collision_Q(gm.mu(), times(gm.sqrt_mu(), f), grid, kernel);
  return scaled_by_inverse(q, gm.sqrt_mu(), 2.0);
}

VelocityFunction Gamma(std::span<const double> f, std::span<const double> g, const VelocityGrid& grid,
                       const KernelConfig& kernel) {
  const GlobalMaxwellian gm(grid);
  const auto q = collision_Q(times(gm.sqrt_mu(), f), times(gm.sqrt_mu(), g), grid, kernel);
  return scaled_by_inverse(q, gm.sqrt_mu(), 2.0);
}

VelocityFunction Gamma_reference(std::span<const double> f, const VelocityGrid& grid, const KernelConfig& kernel) {
  check_work_budget(grid, kernel);
  const GlobalMaxwellian gm(grid);
  const auto F = times(gm.sqrt_mu(), f);
  const auto parts = kernels::collision_serial(F, F, grid, kernel);
  return scaled_by_inverse(parts.total(), gm.sqrt_mu(), 2.0);
}

// --- MicroscopicInverse -------------------------------------------------------------

namespace {

// P0 = X Y^T with X the chi columns and Y the Gram-corrected dual columns (h^3 included).
void projector_factors(const ChiBasis& basis, const VelocityGrid& grid, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  x.resize(n, 5);
  Eigen::MatrixXd d(n, 5);
  Eigen::Matrix<double, 5, 5> gram;
  for (int a = 0; a < 5; ++a) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, a) = basis.chi(a)[i];
      d(i, a) = basis.dual(a)[i];
    }
    for (int b = 0; b < 5; ++b) gram(a, b) = basis.gram(a, b);
  }
  y = grid.weight() * d * gram.inverse();
}

// Loss frequency 2 sum_j B M_j over kept events; zero marks nodes that no
// admissible collision reaches (corners of the box).
std::vector<double> loss_frequency(const LinearizedOperator& op) {
  const VelocityFunction ones(op.grid().size(), 1.0);
  auto parts = kernels::collision_parallel(op.maxwellian(), ones, op.grid(), op.kernel());
  for (auto& x : parts.loss) x *= 2.0;
  return parts.loss;
}

// Restarted, right-preconditioned GMRES for A x = b.
template <class Apply>
Eigen::VectorXd gmres(const Apply& apply, const Eigen::VectorXd& b, const Eigen::VectorXd& inv_precond, double tol,
                      int restart, int max_iter, double& achieved) {
  const Eigen::Index n = b.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  achieved = 0.0;
  if (bnorm == 0.0) return x;
  int iter = 0;
  while (iter < max_iter) {
    Eigen::VectorXd r = b - apply(inv_precond.cwiseProduct(x));
    // x holds the preconditioned unknown y; the solution is P^{-1} y
    double beta = r.norm();
    achieved = beta / bnorm;
    if (achieved < tol) break;
    Eigen::MatrixXd v(n, restart + 1);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(restart), sn = Eigen::VectorXd::Zero(restart);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(restart + 1);
    e(0) = beta;
    v.col(0) = r / beta;
    int k = 0;
    for (; k < restart && iter < max_iter; ++k, ++iter) {
      Eigen::VectorXd w = apply(inv_precond.cwiseProduct(v.col(k)));
      for (int j = 0; j <= k; ++j) {
        h(j, k) = w.dot(v.col(j));
        w -= h(j, k) * v.col(j);
      }
      h(k + 1, k) = w.norm();
      if (h(k + 1, k) > 0.0) v.col(k + 1) = w / h(k + 1, k);
      for (int j = 0; j < k; ++j) {
        const double t = cs(j) * h(j, k) + sn(j) * h(j + 1, k);
        h(j + 1, k) = -sn(j) * h(j, k) + cs(j) * h(j + 1, k);
        h(j, k) = t;
      }
      const double den = std::hypot(h(k, k), h(k + 1, k));
      cs(k) = h(k, k) / den;
      sn(k) = h(k + 1, k) / den;
      h(k, k) = den;
      h(k + 1, k) = 0.0;
      e(k + 1) = -sn(k) * e(k);
      e(k) = cs(k) * e(k);
      if (std::abs(e(k + 1)) / bnorm < tol) {
        ++k;
        ++iter;
        break;
      }
    }
    const Eigen::VectorXd ycoef =
        h.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(e.head(k));
    x += v.leftCols(k) * ycoef;
    achieved = std::abs(e(k)) / bnorm;
    if (achieved < tol) break;
  }
  return inv_precond.cwiseProduct(x);
}

}  // namespace

MicroscopicInverse::MicroscopicInverse(std::shared_ptr<const LinearizedOperator> op, double rcond_threshold)
    : op_(std::move(op)), basis_(op_->state(), op_->grid()) {
  const auto n = static_cast<Eigen::Index>(op_->grid().size());
  inert_.assign(n, 0);
  if (op_->dense()) {
    const Eigen::MatrixXd& l = op_->matrix();
    shift_ = l.diagonal().cwiseAbs().mean();
    const double big = l.cwiseAbs().maxCoeff();
    for (Eigen::Index c = 0; c < n; ++c) inert_[c] = l.col(c).cwiseAbs().maxCoeff() <= 1e-14 * big;
    Eigen::MatrixXd x, y;
    projector_factors(basis_, op_->grid(), x, y);
    const Eigen::MatrixXd lx = l * x;
    const Eigen::MatrixXd ytl = y.transpose() * l;
    const Eigen::MatrixXd ytlx = ytl * x;
    // K = P1 L P1 + c P0 with P1 = I - X Y^T
    Eigen::MatrixXd k = l;
    k.noalias() -= x * ytl;
    k.noalias() -= lx * y.transpose();
    k.noalias() += (x * ytlx) * y.transpose();
    k.noalias() += shift_ * (x * y.transpose());
    for (Eigen::Index c = 0; c < n; ++c)
      if (inert_[c]) k(c, c) += shift_;
    lu_.emplace(k);
    rcond_ = lu_->rcond();
    if (!(rcond_ > rcond_threshold)) {
      std::ostringstream os;
      os << "microscopic inverse is ill-conditioned: rcond estimate " << rcond_ << " below " << rcond_threshold;
      throw NumericalError(os.str());
    }
  } else {
    frequency_ = loss_frequency(*op_);
    const double top = *std::max_element(frequency_.begin(), frequency_.end());
    double sum = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      inert_[c] = frequency_[c] <= 1e-14 * top;
      sum += frequency_[c];
    }
    shift_ = sum / static_cast<double>(n);
  }
}

VelocityFunction MicroscopicInverse::apply_regularized(std::span<const double> g) const {
  const auto p1g = basis_.project_P1(g);
  const auto lg = op_->apply(p1g);
  auto out = basis_.project_P1(lg);
  const auto p0g = basis_.project_P0(g);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += shift_ * (p0g[i] + (inert_[i] ? g[i] : 0.0));
  return out;
}

PinvResult MicroscopicInverse::solve(std::span<const double> h) const {
  const auto rhs = basis_.project_P1(h);
  const auto n = static_cast<Eigen::Index>(rhs.size());
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  PinvResult out;
  const double bnorm = b.norm();
  if (bnorm == 0.0 || bnorm <= 1e-14 * std::sqrt(std::inner_product(h.begin(), h.end(), h.begin(), 0.0))) {
    out.g.assign(rhs.size(), 0.0);
    return out;
  }
  Eigen::VectorXd g;
  if (lu_) {
    g = lu_->solve(b);
  } else {
    Eigen::VectorXd inv_p(n);
    for (Eigen::Index i = 0; i < n; ++i) inv_p(i) = 1.0 / std::max(frequency_[i], 1e-3 * shift_);
    auto apply = [&](const Eigen::VectorXd& x) {
      const auto r = apply_regularized(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
      return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(r.data(), n));
    };
    double achieved = 0.0;
    g = gmres(apply, b, inv_p, 1e-10, 60, 600, achieved);
    if (achieved > 1e-6) {
      std::ostringstream os;
      os << "GMRES for the microscopic inverse stalled at relative residual " << achieved;
      throw NumericalError(os.str());
    }
  }
  out.g = basis_.project_P1(std::span<const double>(g.data(), static_cast<std::size_t>(n)));
  const auto lg = op_->apply(out.g);
  double num = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) num += (lg[i] - b(i)) * (lg[i] - b(i));
  out.relative_residual = std::sqrt(num) / bnorm;
  return out;
}

PinvResult L_M_pinv(const MicroscopicInverse& inverse, std::span<const double> h) { return inverse.solve(h); }

// --- Burnett -----------------------------------------------------------------------

double burnett_A_hat(int j, const Vec3& w) { return 0.5 * (norm2(w) - 5.0) * w[j]; }

double burnett_B_hat(int i, int j, const Vec3& w) { return w[i] * w[j] - (i == j ? norm2(w) / 3.0 : 0.0); }

BurnettSet burnett_build(const MicroscopicInverse& inverse) {
  const auto& op = inverse.op();
  const auto& grid = op.grid();
  const auto& m = op.maxwellian();
  const MacroState& st = op.state();
  const double scale = 1.0 / std::sqrt(kGasConstant * st.theta);
  const std::size_t n = grid.size();
  BurnettSet set;
  set.state = st;
  for (int j = 0; j < 3; ++j) {
    set.a_hat[j].resize(n);
    for (int i = 0; i < 3; ++i) set.b_hat[i][j].resize(n);
  }
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 w = scale * (grid.node(p) - st.u);
    for (int j = 0; j < 3; ++j) {
      set.a_hat[j][p] = burnett_A_hat(j, w);
      for (int i = 0; i < 3; ++i) set.b_hat[i][j][p] = burnett_B_hat(i, j, w);
    }
  }
  auto solve = [&](const VelocityFunction& poly) {
    const auto r = inverse.solve(times(poly, m));
    set.worst_residual = std::max(set.worst_residual, r.relative_residual);
    return r.g;
  };
  for (int j = 0; j < 3; ++j) set.a[j] = solve(set.a_hat[j]);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      set.b[i][j] = solve(set.b_hat[i][j]);
      if (j != i) set.b[j][i] = set.b[i][j];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      set.aa[i][j] = velocity::inner(set.a_hat[i], set.a[j], grid);
      for (int k = 0; k < 3; ++k) {
        set.ab[i][j][k] = velocity::inner(set.a_hat[i], set.b[j][k], grid);
        for (int l = 0; l < 3; ++l) set.bb[i][j][k][l] = velocity::inner(set.b_hat[i][j], set.b[k][l], grid);
      }
    }
  return set;
}

BurnettSet burnett_build(const MacroState& state, const VelocityGrid& grid, const KernelConfig& kernel) {
  auto op = std::make_shared<const LinearizedOperator>(state, grid, kernel);
  return burnett_build(MicroscopicInverse(op));
}

TransportCoefficients transport_coeffs(const BurnettSet& set) {
  const double rt = kGasConstant * set.state.theta;
  TransportCoefficients tc;
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (int p = 0; p < 3; ++p) {
    tc.viscosity_pairs[p] = -rt * set.bb[pairs[p][0]][pairs[p][1]][pairs[p][0]][pairs[p][1]];
    tc.viscosity += tc.viscosity_pairs[p] / 3.0;
  }
  for (int j = 0; j < 3; ++j) {
    tc.conductivity_components[j] = -kGasConstant * rt * set.aa[j][j];
    tc.conductivity += tc.conductivity_components[j] / 3.0;
  }
  if (!(tc.viscosity > 0.0) || !(tc.conductivity > 0.0)) {
    std::ostringstream os;
    os << "transport coefficients not positive (viscosity " << tc.viscosity << ", conductivity "
       << tc.conductivity << "): collision quadrature failure";
    throw NumericalError(os.str());
  }
  return tc;
}

VelocityFunction olG_build(const BurnettSet& set, double theta_bar_x1, double u1_bar_x1) {
  const double c = std::sqrt(kGasConstant / set.state.theta) * theta_bar_x1;
  VelocityFunction out(set.a[0].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * set.a[0][i] + u1_bar_x1 * set.b[0][0][i];
  return out;
}

VelocityFunction olG_source(const MacroState& state, const VelocityGrid& grid, double theta_bar_x1,
                            double u1_bar_x1) {
  const double rt = kGasConstant * state.theta;
  const auto m = maxwellian(state, grid);
  VelocityFunction out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec3& v = grid.node(i);
    const Vec3 c = v - state.u;
    const double bracket_term =
        norm2(c) * theta_bar_x1 / (2.0 * rt * state.theta) + c[0] * u1_bar_x1 / rt;
    out[i] = v[0] * m[i] * bracket_term;
  }
  return out;
}

VelocityFunction olG_direct(const MicroscopicInverse& inverse, double theta_bar_x1, double u1_bar_x1) {
  const auto src = olG_source(inverse.op().state(), inverse.op().grid(), theta_bar_x1, u1_bar_x1);
  return inverse.solve(src).g;
}

// --- BGK --------------------------------------------------------------------------

VelocityFunction bgk_relax(std::span<const double> f, double tau, const VelocityGrid& grid) {
  if (!(tau > 0.0)) throw ConfigError("BGK relaxation time must be positive");
  const auto m = velocity::conservative_maxwellian(velocity::fluid_moments(f, grid), grid);
  VelocityFunction out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (m[i] - f[i]) / tau;
  return out;
}

void bgk_step(std::span<double> f, double tau, double dt, const VelocityGrid& grid) {
  if (!(tau > 0.0)) throw ConfigError("BGK relaxation time must be positive");
  const auto m = velocity::conservative_maxwellian(velocity::fluid_moments(f, grid), grid);
  const double decay = std::exp(-dt / tau);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = m[i] + (f[i] - m[i]) * decay;
}

double h_functional(std::span<const double> f, const VelocityGrid& grid) {
  double acc = 0.0;
  for (double x : f)
    if (x > 0.0) acc += x * std::log(x);
  return acc * grid.weight();
}

}  // namespace kwave::collision
