#pragma once

// Planar 3-rarefaction waves of the monatomic Euler system: exact self-similar
// fans, the smoothed Burgers construction, PDE residuals and decay rates.

#include <functional>
#include <span>
#include <vector>

#include "kwave/common.hpp"

namespace kwave::waves {

struct EulerState {
  double rho = 1.0;
  double u1 = 0.0;
  double theta = 1.5;
};

struct EndStates {
  EulerState minus;
  EulerState plus;
};

/// Pair of 3-Riemann invariants: R1 = u1 - sqrt(10 theta) (= u1 - int sqrt(p_z)/z dz), S = entropy.
/// Both are constant along r3 = (rho, sqrt(p_rho), 0).
struct RiemannInvariants {
  double r1 = 0.0;
  double s = 0.0;
};

/// Macroscopic entropy S = -(2/3) ln rho + ln(2 pi R theta) + 1.
double entropy_closed_form(double rho, double theta);

/// Pressure p = R rho theta.
inline double pressure(const EulerState& s) { return kGasConstant * s.rho * s.theta; }

/// Third characteristic speed u1 + sqrt(p_rho(rho, S)) = u1 + sqrt(10 theta)/3.
double lambda3(const EulerState& state);

RiemannInvariants riemann_invariants_3(const EulerState& state);

/// Inverts lambda3 = w at fixed (R1, S). Closed form for the gamma = 5/3 law.
EulerState state_on_3_curve(double w, const RiemannInvariants& inv);

/// Minus state on the 3-rarefaction curve through `plus` with lambda3(minus) = w_minus.
EndStates build_3_rarefaction(const EulerState& plus, double w_minus);

/// Minus state on the 3-rarefaction curve through `plus` with wave strength
/// |(drho, du, dtheta)| = delta.
EndStates build_3_rarefaction_with_strength(const EulerState& plus, double delta);

/// Throws ConfigError unless the end states share their 3-Riemann invariants
/// (within `tol`) and lambda3(minus) < lambda3(plus).
void check_rarefaction_connected(const EndStates& ends, double tol = 1e-8);

/// Wave strength delta = |(rho+ - rho-, u+ - u-, theta+ - theta-)|.
double wave_strength(const EndStates& ends);

// --- Burgers building blocks -------------------------------------------------

/// Self-similar Riemann fan of w_t + w w_x = 0.
double exact_burgers_w(double w_minus, double w_plus, double t, double x1);

/// Arctan-smoothed initial profile; k0 = 2/pi normalizes the far-field limits.
double smoothed_w0(double w_minus, double w_plus, double x1);
double smoothed_w0_derivative(double w_minus, double w_plus, double x1);

struct RootFindOptions {
  double tolerance = 1e-12;
  int max_iterations = 200;
};

/// Smoothed Burgers solution w(t, x1) = w0(x0) along the characteristic
/// x1 = x0 + w0(x0) t. Safe to share across threads.
class SmoothedBurgers {
 public:
  SmoothedBurgers(double w_minus, double w_plus, RootFindOptions options = {},
                  bool allow_degenerate = false);

  double w_minus() const { return w_minus_; }
  double w_plus() const { return w_plus_; }

  /// Foot of the characteristic through (t, x1).
  double foot(double t, double x1) const;
  double value(double t, double x1) const;
  /// Exact w_x = w0'(x0) / (1 + w0'(x0) t).
  double dx(double t, double x1) const;
  /// Exact w_xx by differentiating the characteristic relation twice.
  double dxx(double t, double x1) const;

 private:
  double w_minus_;
  double w_plus_;
  RootFindOptions options_;
};

inline double smoothed_w(const SmoothedBurgers& wave, double t, double x1) { return wave.value(t, x1); }

// --- Wave profiles -----------------------------------------------------------

enum class ProfileKind { exact_selfsimilar, smoothed };

/// Point value plus x1-derivatives of (rho, u1, theta).
struct ProfileSample {
  EulerState state;
  EulerState dx;  // componentwise d/dx1
};

/// Evaluable (t, x1) -> (rho, u1, theta) on a single 3-rarefaction.
///
/// The smoothed kind evaluates the Burgers solution at t + time_shift (default 1,
/// the shifted origin of the approximate wave); the exact kind uses the fan
/// variable x1 / (t + time_shift) (default shift 0; 1 gives the comparison
/// profile of the time-asymptotic metric).
class WaveProfile {
 public:
  WaveProfile(ProfileKind kind, const EndStates& ends, double time_shift, RootFindOptions options = {},
              bool allow_degenerate = false);

  static WaveProfile smoothed(const EndStates& ends, bool allow_degenerate = false);
  static WaveProfile exact(const EndStates& ends, double time_shift = 0.0);

  ProfileKind kind() const { return kind_; }
  const EndStates& end_states() const { return ends_; }
  double time_shift() const { return time_shift_; }
  const RiemannInvariants& invariants() const { return invariants_; }
  const SmoothedBurgers& burgers() const { return burgers_; }

  /// lambda3 along the profile (the Burgers variable).
  double wave_speed(double t, double x1) const;
  EulerState operator()(double t, double x1) const;
  /// Value and exact x1-gradient (gradient is zero outside the fan for the exact kind).
  ProfileSample sample(double t, double x1) const;

 private:
  ProfileKind kind_;
  EndStates ends_;
  double time_shift_;
  RiemannInvariants invariants_;
  SmoothedBurgers burgers_;
};

/// Approximate rarefaction (smoothed wave at shifted time t + 1).
EulerState approx_rarefaction(double t, double x1, const EndStates& ends);

// --- Residuals and decay -------------------------------------------------------

struct ResidualNorms {
  std::array<double, 4> max{};  // mass, momentum-1, transverse momentum, internal energy
  std::array<double, 4> l2{};
  double max_overall() const;
};

/// Centered-difference residual of the Euler system along the profile, over
/// the tensor grid of sample points, with difference step h in both t and x1.
ResidualNorms euler_residual(const WaveProfile& profile, std::span<const double> times,
                             std::span<const double> xs, double h);

/// Same for the Burgers equation w_t + w w_x = 0; returns max |residual|.
double burgers_residual_max(const SmoothedBurgers& wave, std::span<const double> times,
                            std::span<const double> xs, double h);

struct DecayRow {
  double t = 0.0;
  double q = 0.0;  // +inf for the sup norm
  double norm = 0.0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  std::vector<std::pair<double, double>> slopes;  // (q, fitted log-log slope vs 1 + t)
  double slope_for(double q) const;
};

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

enum class DecayQuantity {
  burgers_gradient,       // ||w_x(t)||_q of the smoothed Burgers wave
  burgers_second,         // ||w_xx(t)||_q
  burgers_distance,       // ||w(t) - w^r(x / (1 + t))||_q
  profile_gradient,       // ||d_x (rho, u1, theta)(t)||_q (pointwise Euclidean)
  profile_distance,       // ||(rho, u1, theta)(t) - ideal fan at x / (1 + t)||_q
};

/// Norms are computed by quadrature in the characteristic foot x0, which keeps
/// the fan resolved for every t; the Burgers time is t for the Burgers
/// quantities and t + time_shift for profile quantities.
DecayTable decay_report(const WaveProfile& profile, std::span<const double> times, std::span<const double> qs,
                        DecayQuantity quantity);

}  // namespace kwave::waves
