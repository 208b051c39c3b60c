#include "kwave/euler_waves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kwave::waves {

namespace {

constexpr double kK0 = 2.0 / kPi;

void require_admissible(const EulerState& s) {
  if (!(s.theta > 0.0) || !(s.rho > 0.0)) {
    std::ostringstream os;
    os << "inadmissible Euler state (rho=" << s.rho << ", theta=" << s.theta << ")";
    throw DomainError(os.str());
  }
}

// d(rho, u1, theta)/dw along the 3-curve at fixed (R1, S).
EulerState curve_tangent(double w, const RiemannInvariants& inv) {
  const EulerState s = state_on_3_curve(w, inv);
  const double dtheta = (9.0 / 80.0) * (w - inv.r1);
  return {s.rho * 1.5 * dtheta / s.theta, 0.75, dtheta};
}

}  // namespace

double entropy_closed_form(double rho, double theta) {
  if (!(rho > 0.0) || !(theta > 0.0)) throw DomainError("entropy needs rho > 0 and theta > 0");
  return -(2.0 / 3.0) * std::log(rho) + std::log(2.0 * kPi * kGasConstant * theta) + 1.0;
}

double lambda3(const EulerState& state) {
  if (!(state.theta > 0.0)) throw DomainError("lambda3: non-positive temperature");
  return state.u1 + std::sqrt(10.0 * state.theta) / 3.0;
}

RiemannInvariants riemann_invariants_3(const EulerState& state) {
  require_admissible(state);
  return {state.u1 - std::sqrt(10.0 * state.theta), entropy_closed_form(state.rho, state.theta)};
}

EulerState state_on_3_curve(double w, const RiemannInvariants& inv) {
  // lambda3 = u + c/3 and R1 = u - c with c = sqrt(10 theta), so c = (3/4)(w - R1)
  const double gap = w - inv.r1;
  if (!(gap > 0.0)) throw DomainError("wave speed beyond the vacuum limit of the 3-curve");
  const double theta = (9.0 / 160.0) * gap * gap;
  const double u1 = 0.25 * (3.0 * w + inv.r1);
  const double rho = std::exp(1.5 * (std::log(2.0 * kPi * kGasConstant * theta) + 1.0 - inv.s));
  return {rho, u1, theta};
}

EndStates build_3_rarefaction(const EulerState& plus, double w_minus) {
  const auto inv = riemann_invariants_3(plus);
  if (!(w_minus < lambda3(plus))) throw ConfigError("3-rarefaction needs lambda3(minus) < lambda3(plus)");
  return {state_on_3_curve(w_minus, inv), plus};
}

double wave_strength(const EndStates& ends) {
  const double a = ends.plus.rho - ends.minus.rho;
  const double b = ends.plus.u1 - ends.minus.u1;
  const double c = ends.plus.theta - ends.minus.theta;
  return std::sqrt(a * a + b * b + c * c);
}

EndStates build_3_rarefaction_with_strength(const EulerState& plus, double delta) {
  if (!(delta > 0.0)) throw ConfigError("wave strength must be positive");
  const double w_plus = lambda3(plus);
  const auto inv = riemann_invariants_3(plus);
  auto strength = [&](double w) { return wave_strength({state_on_3_curve(w, inv), plus}) - delta; };
  double lo = w_plus;
  double step = 0.01;
  double hi = w_plus - step;
  while (strength(hi) < 0.0) {
    lo = hi;
    step *= 2.0;
    hi = w_plus - step;
    if (!(hi - inv.r1 > 0.0)) throw ConfigError("requested wave strength exceeds the 3-curve");
  }
  for (int it = 0; it < 200 && std::abs(lo - hi) > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (strength(mid) < 0.0 ? lo : hi) = mid;
  }
  return build_3_rarefaction(plus, 0.5 * (lo + hi));
}

void check_rarefaction_connected(const EndStates& ends, double tol) {
  const auto a = riemann_invariants_3(ends.minus);
  const auto b = riemann_invariants_3(ends.plus);
  if (std::abs(a.r1 - b.r1) > tol || std::abs(a.s - b.s) > tol) {
    std::ostringstream os;
    os << "end states are not on one 3-rarefaction curve (|dR1|=" << std::abs(a.r1 - b.r1)
       << ", |dS|=" << std::abs(a.s - b.s) << ")";
    throw ConfigError(os.str());
  }
  if (!(lambda3(ends.minus) < lambda3(ends.plus))) {
    throw ConfigError("3-rarefaction needs lambda3(minus) < lambda3(plus); shock branch is not supported");
  }
}

double exact_burgers_w(double w_minus, double w_plus, double t, double x1) {
  if (!(w_minus < w_plus)) throw ConfigError("exact Burgers fan needs w_minus < w_plus");
  if (!(t > 0.0)) throw DomainError("exact Burgers fan needs t > 0");
  const double xi = x1 / t;
  if (xi <= w_minus) return w_minus;
  if (xi >= w_plus) return w_plus;
  return xi;
}

double smoothed_w0(double w_minus, double w_plus, double x1) {
  return 0.5 * (w_plus + w_minus) + 0.5 * (w_plus - w_minus) * kK0 * std::atan(x1);
}

double smoothed_w0_derivative(double w_minus, double w_plus, double x1) {
  return 0.5 * (w_plus - w_minus) * kK0 / (1.0 + x1 * x1);
}

SmoothedBurgers::SmoothedBurgers(double w_minus, double w_plus, RootFindOptions options, bool allow_degenerate)
    : w_minus_(w_minus), w_plus_(w_plus), options_(options) {
  if (allow_degenerate ? !(w_minus <= w_plus) : !(w_minus < w_plus)) {
    throw ConfigError("smoothed rarefaction needs w_minus < w_plus (lambda3 must increase across the wave)");
  }
}

double SmoothedBurgers::foot(double t, double x1) const {
  if (t < 0.0) throw DomainError("smoothed Burgers wave needs t >= 0");
  if (t == 0.0 || w_plus_ == w_minus_) return x1 - w_minus_ * t;
  // g(x0) = x0 + w0(x0) t - x1 is strictly increasing; w0 in (w-, w+) brackets the root
  double lo = x1 - w_plus_ * t;
  double hi = x1 - w_minus_ * t;
  auto g = [&](double x0) { return x0 + smoothed_w0(w_minus_, w_plus_, x0) * t - x1; };
  double x = std::clamp(x1 - smoothed_w0(w_minus_, w_plus_, 0.0) * t, lo, hi);
  double width = hi - lo;
  for (int it = 0; it < options_.max_iterations; ++it) {
    const double gx = g(x);
    if (gx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double dg = 1.0 + smoothed_w0_derivative(w_minus_, w_plus_, x) * t;
    double next = x - gx / dg;
    // Newton can cycle on the atan profile; bisect unless the bracket at least halves
    const bool slow = hi - lo > 0.5 * width;
    width = hi - lo;
    if (slow || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= options_.tolerance || hi - lo <= options_.tolerance) return next;
    x = next;
  }
  std::ostringstream os;
  os.precision(17);
  os << "characteristic root-find did not converge at (t=" << t << ", x1=" << x1 << "), bracket [" << lo << ", "
     << hi << "]";
  throw NumericalError(os.str());
}

double SmoothedBurgers::value(double t, double x1) const {
  return smoothed_w0(w_minus_, w_plus_, foot(t, x1));
}

double SmoothedBurgers::dx(double t, double x1) const {
  const double d0 = smoothed_w0_derivative(w_minus_, w_plus_, foot(t, x1));
  return d0 / (1.0 + d0 * t);
}

double SmoothedBurgers::dxx(double t, double x1) const {
  const double x0 = foot(t, x1);
  const double d0 = smoothed_w0_derivative(w_minus_, w_plus_, x0);
  const double dd0 = -2.0 * x0 / (1.0 + x0 * x0) * d0;
  const double j = 1.0 + d0 * t;
  return dd0 / (j * j * j);
}

WaveProfile::WaveProfile(ProfileKind kind, const EndStates& ends, double time_shift, RootFindOptions options,
                         bool allow_degenerate)
    : kind_(kind),
      ends_(ends),
      time_shift_(time_shift),
      invariants_(riemann_invariants_3(ends.plus)),
      burgers_(lambda3(ends.minus), lambda3(ends.plus), options, allow_degenerate) {
  if (!allow_degenerate) check_rarefaction_connected(ends);
}

WaveProfile WaveProfile::smoothed(const EndStates& ends, bool allow_degenerate) {
  return WaveProfile(ProfileKind::smoothed, ends, 1.0, {}, allow_degenerate);
}

WaveProfile WaveProfile::exact(const EndStates& ends, double time_shift) {
  return WaveProfile(ProfileKind::exact_selfsimilar, ends, time_shift);
}

double WaveProfile::wave_speed(double t, double x1) const {
  const double tt = t + time_shift_;
  if (kind_ == ProfileKind::smoothed) return burgers_.value(tt, x1);
  if (burgers_.w_minus() == burgers_.w_plus()) return burgers_.w_plus();  // degenerate: constant state
  return exact_burgers_w(burgers_.w_minus(), burgers_.w_plus(), tt, x1);
}

EulerState WaveProfile::operator()(double t, double x1) const {
  const double w = wave_speed(t, x1);
  if (w <= burgers_.w_minus()) return ends_.minus;
  if (w >= burgers_.w_plus()) return ends_.plus;
  return state_on_3_curve(w, invariants_);
}

ProfileSample WaveProfile::sample(double t, double x1) const {
  const double tt = t + time_shift_;
  double w = 0.0;
  double wx = 0.0;
  if (kind_ == ProfileKind::smoothed) {
    w = burgers_.value(tt, x1);
    wx = burgers_.dx(tt, x1);
  } else if (burgers_.w_minus() == burgers_.w_plus()) {
    w = burgers_.w_plus();
  } else {
    w = exact_burgers_w(burgers_.w_minus(), burgers_.w_plus(), tt, x1);
    const double xi = x1 / tt;
    wx = (xi > burgers_.w_minus() && xi < burgers_.w_plus()) ? 1.0 / tt : 0.0;
  }
  ProfileSample out;
  out.dx = {0.0, 0.0, 0.0};
  if (w <= burgers_.w_minus()) {
    out.state = ends_.minus;
    return out;
  }
  if (w >= burgers_.w_plus()) {
    out.state = ends_.plus;
    return out;
  }
  out.state = state_on_3_curve(w, invariants_);
  const EulerState tangent = curve_tangent(w, invariants_);
  out.dx = {tangent.rho * wx, tangent.u1 * wx, tangent.theta * wx};
  return out;
}

EulerState approx_rarefaction(double t, double x1, const EndStates& ends) {
  return WaveProfile::smoothed(ends)(t, x1);
}

double ResidualNorms::max_overall() const { return *std::max_element(max.begin(), max.end()); }

ResidualNorms euler_residual(const WaveProfile& profile, std::span<const double> times,
                             std::span<const double> xs, double h) {
  // conserved-form densities of the planar Euler system (u2 = u3 = 0)
  struct Fields {
    double mass, mom, mom_t, energy;  // rho, rho u1, rho u2, rho theta
    double mass_flux, mom_flux, mom_t_flux, energy_flux;
    double p, ux;
  };
  auto fields = [&](double t, double x) {
    const EulerState s = profile(t, x);
    const double p = pressure(s);
    return Fields{s.rho, s.rho * s.u1, 0.0, s.rho * s.theta, s.rho * s.u1, s.rho * s.u1 * s.u1 + p, 0.0,
                  s.rho * s.u1 * s.theta, p, s.u1};
  };
  ResidualNorms out;
  std::array<double, 4> sumsq{};
  std::size_t count = 0;
  for (double t : times) {
    for (double x : xs) {
      const Fields tp = fields(t + h, x);
      const Fields tm = fields(t - h, x);
      const Fields xp = fields(t, x + h);
      const Fields xm = fields(t, x - h);
      const Fields c = fields(t, x);
      const double inv = 1.0 / (2.0 * h);
      const std::array<double, 4> r = {
          (tp.mass - tm.mass) * inv + (xp.mass_flux - xm.mass_flux) * inv,
          (tp.mom - tm.mom) * inv + (xp.mom_flux - xm.mom_flux) * inv,
          (tp.mom_t - tm.mom_t) * inv + (xp.mom_t_flux - xm.mom_t_flux) * inv,
          (tp.energy - tm.energy) * inv + (xp.energy_flux - xm.energy_flux) * inv + c.p * (xp.ux - xm.ux) * inv,
      };
      for (int k = 0; k < 4; ++k) {
        out.max[k] = std::max(out.max[k], std::abs(r[k]));
        sumsq[k] += r[k] * r[k];
      }
      ++count;
    }
  }
  for (int k = 0; k < 4; ++k) out.l2[k] = count ? std::sqrt(sumsq[k] / static_cast<double>(count)) : 0.0;
  return out;
}

double burgers_residual_max(const SmoothedBurgers& wave, std::span<const double> times, std::span<const double> xs,
                            double h) {
  double worst = 0.0;
  for (double t : times) {
    for (double x : xs) {
      const double wt = (wave.value(t + h, x) - wave.value(t - h, x)) / (2.0 * h);
      const double wx = (wave.value(t, x + h) - wave.value(t, x - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(wt + wave.value(t, x) * wx));
    }
  }
  return worst;
}

double DecayTable::slope_for(double q) const {
  for (const auto& [qq, slope] : slopes) {
    if (qq == q) return slope;
  }
  throw ConfigError("decay table has no entry for the requested q");
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DecayTable decay_report(const WaveProfile& profile, std::span<const double> times, std::span<const double> qs,
                        DecayQuantity quantity) {
  if (times.size() < 4) throw ConfigError("decay report needs at least 4 time samples");
  const auto& burgers = profile.burgers();
  const double wm = burgers.w_minus();
  const double wp = burgers.w_plus();
  const bool profile_quantity =
      quantity == DecayQuantity::profile_gradient || quantity == DecayQuantity::profile_distance;

  // Quadrature in xi = atan(x0): x1 = x0 + w0(x0) t, dx1 = (1 + w0'(x0) t) dx0.
  constexpr int kNodes = 40000;
  DecayTable table;
  for (double t : times) {
    const double tb = profile_quantity ? t + profile.time_shift() : t;
    std::vector<double> sums(qs.size(), 0.0);
    std::vector<double> sup(qs.size(), 0.0);
    for (int i = 0; i < kNodes; ++i) {
      const double xi = -0.5 * kPi + (i + 0.5) * kPi / kNodes;
      const double x0 = std::tan(xi);
      const double dx0 = 1.0 + x0 * x0;  // d x0 / d xi
      const double d0 = smoothed_w0_derivative(wm, wp, x0);
      const double jac = 1.0 + d0 * tb;
      const double w = smoothed_w0(wm, wp, x0);
      const double x1 = x0 + w * tb;
      double f = 0.0;
      switch (quantity) {
        case DecayQuantity::burgers_gradient:
          f = d0 / jac;
          break;
        case DecayQuantity::burgers_second: {
          const double dd0 = -2.0 * x0 / (1.0 + x0 * x0) * d0;
          f = std::abs(dd0 / (jac * jac * jac));
          break;
        }
        case DecayQuantity::burgers_distance:
          f = std::abs(w - std::clamp(x1 / (1.0 + t), wm, wp));
          break;
        case DecayQuantity::profile_gradient: {
          const EulerState tan = curve_tangent(w, profile.invariants());
          f = std::sqrt(tan.rho * tan.rho + tan.u1 * tan.u1 + tan.theta * tan.theta) * d0 / jac;
          break;
        }
        case DecayQuantity::profile_distance: {
          const EulerState a = state_on_3_curve(w, profile.invariants());
          const double wr = std::clamp(x1 / (1.0 + t), wm, wp);
          const EulerState b = state_on_3_curve(wr, profile.invariants());
          f = std::sqrt((a.rho - b.rho) * (a.rho - b.rho) + (a.u1 - b.u1) * (a.u1 - b.u1) +
                        (a.theta - b.theta) * (a.theta - b.theta));
          break;
        }
      }
      const double weight = jac * dx0 * (kPi / kNodes);
      for (std::size_t k = 0; k < qs.size(); ++k) {
        if (std::isinf(qs[k])) {
          sup[k] = std::max(sup[k], f);
        } else {
          sums[k] += std::pow(f, qs[k]) * weight;
        }
      }
    }
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const double n = std::isinf(qs[k]) ? sup[k] : std::pow(sums[k], 1.0 / qs[k]);
      table.rows.push_back({t, qs[k], n});
    }
  }
  for (double q : qs) {
    std::vector<double> tx, ny;
    for (const auto& r : table.rows) {
      if (r.q == q) {
        tx.push_back(1.0 + r.t);
        ny.push_back(r.norm);
      }
    }
    table.slopes.emplace_back(q, fit_loglog_slope(tx, ny));
  }
  return table;
}

}  // namespace kwave::waves
