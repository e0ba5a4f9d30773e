#pragma once

// Emden equation  a''(s) = xi / (mu a(s)^kappa),  a(0) = a0 > 0,  a'(0) = a1.
//
// integrate() runs an embedded Dormand-Prince 5(4) pair with its continuous
// extension, stops when a falls below 1e-8 a0 and locates the touchdown time.
// touchdown_time_quadrature() recomputes that time from the conserved energy
// and serves as an independent check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dp2/core.hpp"

namespace dp2::emden {

struct Problem {
  double xi = 0.0;
  double kappa = 0.5;
  double mu = 4.0;  ///< 4 in the self-similar construction, 1 in the bare Emden form
  double a0 = 1.0;
  double a1 = 0.0;
  double s_max = 1.0;

  void validate() const {
    detail::require(a0 > 0.0, Errc::NonPositiveA0, "a0", "a0 must be positive");
    detail::require_finite(a0, "a0");
    detail::require_finite(xi, "xi");
    detail::require_finite(kappa, "kappa");
    detail::require_finite(a1, "a1");
    detail::require(mu == 1.0 || mu == 4.0, Errc::InvalidArgument, "mu", "mu must be 1 or 4");
    detail::require(std::isfinite(s_max) && s_max > 0.0, Errc::InvalidArgument, "s_max",
                    "s_max must be positive and finite");
  }
};

/// Potential V with a'' = -V'(a); logarithmic when kappa = 1.
inline double potential(const Problem& p, double a) {
  if (p.kappa == 1.0) return -(p.xi / p.mu) * std::log(a);
  const double q = 1.0 - p.kappa;
  return -p.xi * std::pow(a, q) / (p.mu * q);
}

inline double energy(const Problem& p, double a, double a_dot) {
  return 0.5 * a_dot * a_dot + potential(p, a);
}

inline double acceleration(const Problem& p, double a) {
  if (!(a > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return p.xi / (p.mu * std::pow(a, p.kappa));
}

struct Sample {
  double s = 0.0;
  double a = 0.0;
  double a_dot = 0.0;
};

enum class FateKind { TouchdownAt, GlobalOnHorizon, SlopeBlowup };

inline constexpr std::string_view to_string(FateKind k) {
  switch (k) {
    case FateKind::TouchdownAt: return "TouchdownAt";
    case FateKind::GlobalOnHorizon: return "GlobalOnHorizon";
    case FateKind::SlopeBlowup: return "SlopeBlowup";
  }
  return "Unknown";
}

struct Fate {
  FateKind kind = FateKind::GlobalOnHorizon;
  double S = std::numeric_limits<double>::quiet_NaN();  ///< touchdown time, TouchdownAt only
};

enum class Classification { BlowupFiniteTime, GlobalGrowing, Linear };

inline constexpr std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::BlowupFiniteTime: return "BlowupFiniteTime";
    case Classification::GlobalGrowing: return "GlobalGrowing";
    case Classification::Linear: return "Linear";
  }
  return "Unknown";
}

/// Relative touchdown threshold: integration stops once a <= kTouchdownLevel * a0.
inline constexpr double kTouchdownLevel = 1e-8;

class Trajectory;
Trajectory integrate(const Problem& problem, double tol);

/// Accepted-step samples plus the dense-output polynomials between them.
class Trajectory {
 public:
  const Problem& problem() const noexcept { return problem_; }
  std::span<const Sample> samples() const noexcept { return samples_; }
  const Fate& fate() const noexcept { return fate_; }
  double energy0() const noexcept { return energy0_; }
  double energy_drift_max() const noexcept { return drift_max_; }

  /// Last integrated time (the threshold crossing for touchdown runs).
  double s_end() const noexcept { return samples_.back().s; }

  /// End of the interval on which at() is defined: S for touchdown, s_end otherwise.
  double s_limit() const noexcept {
    return fate_.kind == FateKind::TouchdownAt ? fate_.S : s_end();
  }

  /// State at time s. Inside the final sub-threshold layer (s_end, S) the
  /// motion is continued linearly so that a reaches zero exactly at S.
  Sample at(double s) const {
    if (fate_.kind == FateKind::TouchdownAt && s >= fate_.S)
      throw Error(Errc::BeyondBlowup, "s",
                  "s = " + std::to_string(s) + " is at or beyond touchdown S = " +
                      std::to_string(fate_.S));
    if (!(s >= 0.0))
      throw Error(Errc::HorizonExceeded, "s", "s must be nonnegative");
    const Sample& last = samples_.back();
    if (s > last.s) {
      if (fate_.kind != FateKind::TouchdownAt)
        throw Error(Errc::HorizonExceeded, "s",
                    "s = " + std::to_string(s) + " exceeds the integrated horizon " +
                        std::to_string(last.s));
      const double remaining = (fate_.S - s) / (fate_.S - last.s);
      return {s, last.a * remaining, last.a_dot};
    }
    auto it = std::upper_bound(segments_.begin(), segments_.end(), s,
                               [](double v, const Segment& seg) { return v < seg.s0; });
    const Segment& seg = it == segments_.begin() ? segments_.front() : *std::prev(it);
    return seg.eval(s);
  }

 private:
  friend Trajectory integrate(const Problem&, double);

  struct Segment {
    double s0 = 0.0;
    double h = 0.0;
    // Continuous-extension coefficients per component (a, a_dot).
    std::array<std::array<double, 5>, 2> r{};

    Sample eval(double s) const {
      const double th = h > 0.0 ? std::clamp((s - s0) / h, 0.0, 1.0) : 0.0;
      const double th1 = 1.0 - th;
      std::array<double, 2> y{};
      for (std::size_t i = 0; i < 2; ++i) {
        const auto& c = r[i];
        y[i] = c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
      }
      return {s, y[0], y[1]};
    }
  };

  Problem problem_;
  std::vector<Sample> samples_;
  std::vector<Segment> segments_;
  Fate fate_;
  double energy0_ = 0.0;
  double drift_max_ = 0.0;
};

namespace detail {

// Dormand-Prince 5(4) tableau with Hairer's dense-output weights.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

using State = std::array<double, 2>;

inline State rhs(const Problem& p, const State& y) { return {y[1], acceleration(p, y[0])}; }

}  // namespace detail

/// Adaptive integration on [0, s_max] with local error tolerance tol.
inline Trajectory integrate(const Problem& problem, double tol) {
  problem.validate();
  ::dp2::detail::require(tol > 0.0 && tol <= 1e-3, Errc::InvalidArgument, "tol",
                         "tol must lie in (0, 1e-3]");
  using detail::Dopri5;
  using detail::State;

  const Problem& p = problem;
  const double eps_a = kTouchdownLevel * p.a0;
  const double vel_scale =
      std::max({std::abs(p.a1), std::sqrt(std::abs(p.xi) * std::pow(p.a0, 1.0 - p.kappa) / p.mu),
                1e-8});
  const std::array<double, 2> atol{tol * eps_a, tol * vel_scale};

  Trajectory traj;
  traj.problem_ = p;
  traj.energy0_ = energy(p, p.a0, p.a1);
  const double drift_norm = std::max(1.0, std::abs(traj.energy0_));

  State y{p.a0, p.a1};
  double s = 0.0;
  traj.samples_.push_back({0.0, y[0], y[1]});
  State k1 = detail::rhs(p, y);
  double h = std::min(p.s_max, 1e-3 * std::max(1.0, p.s_max));
  bool done = false;

  auto combine = [](const State& base, double hh, std::initializer_list<std::pair<double, const State*>> terms) {
    State out = base;
    for (const auto& [w, k] : terms)
      for (std::size_t i = 0; i < 2; ++i) out[i] += hh * w * (*k)[i];
    return out;
  };

  while (!done && s < p.s_max) {
    const double h_min = 1e-14 * std::max(1.0, std::abs(s));
    if (h < h_min)
      throw Error(Errc::StepCollapse, "h",
                  "step size underflow at s = " + std::to_string(s) +
                      " with a = " + std::to_string(y[0]));
    const bool last_step = s + h >= p.s_max;
    if (last_step) h = p.s_max - s;

    using D = Dopri5;
    const State k2 = detail::rhs(p, combine(y, h, {{D::a21, &k1}}));
    const State k3 = detail::rhs(p, combine(y, h, {{D::a31, &k1}, {D::a32, &k2}}));
    const State k4 = detail::rhs(p, combine(y, h, {{D::a41, &k1}, {D::a42, &k2}, {D::a43, &k3}}));
    const State k5 = detail::rhs(
        p, combine(y, h, {{D::a51, &k1}, {D::a52, &k2}, {D::a53, &k3}, {D::a54, &k4}}));
    const State k6 = detail::rhs(p, combine(y, h,
                                            {{D::a61, &k1},
                                             {D::a62, &k2},
                                             {D::a63, &k3},
                                             {D::a64, &k4},
                                             {D::a65, &k5}}));
    const State y5 = combine(y, h,
                             {{D::a71, &k1}, {D::a73, &k3}, {D::a74, &k4}, {D::a75, &k5},
                              {D::a76, &k6}});
    const State k7 = detail::rhs(p, y5);

    double err = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double e = h * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] +
                            D::e6 * k6[i] + D::e7 * k7[i]);
      const double sc = atol[i] + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / 2.0);

    if (!std::isfinite(err) || !(y5[0] > 0.0)) {
      h *= 0.25;
      continue;
    }
    if (err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    Trajectory::Segment seg;
    seg.s0 = s;
    seg.h = h;
    for (std::size_t i = 0; i < 2; ++i) {
      const double ydiff = y5[i] - y[i];
      const double bspl = h * k1[i] - ydiff;
      seg.r[i] = {y[i], ydiff, bspl, ydiff - h * k7[i] - bspl,
                  h * (D::d1 * k1[i] + D::d3 * k3[i] + D::d4 * k4[i] + D::d5 * k5[i] +
                       D::d6 * k6[i] + D::d7 * k7[i])};
    }
    traj.segments_.push_back(seg);

    s = last_step ? p.s_max : s + h;
    y = y5;
    k1 = k7;
    traj.drift_max_ =
        std::max(traj.drift_max_, std::abs(energy(p, y[0], y[1]) - traj.energy0_) / drift_norm);

    if (y[0] <= eps_a) {
      // Bisection on the continuous extension for a(s) = eps_a.
      double lo = seg.s0, hi = s;
      while (hi - lo > 1e-10 * std::max(hi, 1e-300)) {
        const double mid = 0.5 * (lo + hi);
        (seg.eval(mid).a > eps_a ? lo : hi) = mid;
      }
      Sample cross = seg.eval(lo);
      if (!(cross.a > 0.0)) cross = traj.samples_.back();
      traj.samples_.push_back(cross);
      traj.fate_.kind = FateKind::TouchdownAt;
      traj.fate_.S = cross.a_dot < 0.0 ? cross.s + cross.a / -cross.a_dot : cross.s;
      done = true;
      break;
    }
    traj.samples_.push_back({s, y[0], y[1]});
    if (!std::isfinite(y[1]) || std::abs(y[1]) > 1e150) {
      traj.fate_.kind = FateKind::SlopeBlowup;
      traj.fate_.S = s;
      done = true;
      break;
    }

    const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
    h *= grow;
  }
  if (!done) traj.fate_ = {FateKind::GlobalOnHorizon, std::numeric_limits<double>::quiet_NaN()};
  return traj;
}

/// Qualitative fate for 0 < kappa <= 1.
///
/// xi < 0 always collapses. For xi > 0 the repulsive force keeps a away from
/// zero unless it starts moving toward zero with nonnegative energy and
/// kappa < 1 (the potential stays bounded at a = 0), in which case a reaches
/// zero with finite speed.
inline Classification classify(const Problem& p) {
  p.validate();
  ::dp2::detail::require(p.kappa > 0.0 && p.kappa <= 1.0, Errc::UnsupportedKappa, "kappa",
                         "classification requires 0 < kappa <= 1");
  if (p.xi == 0.0) return Classification::Linear;
  if (p.xi < 0.0) return Classification::BlowupFiniteTime;
  if (p.kappa < 1.0 && p.a1 < 0.0 && energy(p, p.a0, p.a1) >= 0.0)
    return Classification::BlowupFiniteTime;
  return Classification::GlobalGrowing;
}

namespace detail {

// a'(a)^2 = a1^2 + 2 (V(a0) - V(a)), written relative to a reference level
// `ref` with known speed^2 `v2_ref` and evaluated at a = ref - w^2 without
// cancellation.
inline double speed_squared_below(const Problem& p, double ref, double v2_ref, double w) {
  const double rel = std::log1p(-(w * w) / ref);  // log(a / ref)
  if (p.kappa == 1.0) return v2_ref + 2.0 * (p.xi / p.mu) * rel;
  const double q = 1.0 - p.kappa;
  const double diff = std::pow(ref, q) * std::expm1(q * rel);  // a^q - ref^q
  return v2_ref + 2.0 * p.xi * diff / (p.mu * q);
}

// Time to move from `ref` down to `ref - width^2` through a = ref - w^2.
inline double descent_time(const Problem& p, double ref, double v2_ref, double width) {
  auto integrand = [&](double w) {
    const double v2 = speed_squared_below(p, ref, v2_ref, w);
    return v2 > 0.0 ? 2.0 * w / std::sqrt(v2) : 0.0;
  };
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, width, 12,
                                                                       1e-12, &err);
}

}  // namespace detail

/// Touchdown time from energy conservation: S = integral of da / |a'(a)|
/// along the path to a = 0, split at the turning point when a1 > 0.
inline double touchdown_time_quadrature(const Problem& p) {
  p.validate();
  auto no_touchdown = [&](const std::string& why) {
    return Error(Errc::NoTouchdown, "xi", why);
  };
  const double v2_0 = p.a1 * p.a1;

  if (p.a1 > 0.0) {
    if (p.xi >= 0.0) throw no_touchdown("trajectory moves away from a = 0 and never turns");
    // Turning point where a' = 0.
    double a_turn = 0.0;
    if (p.kappa == 1.0) {
      a_turn = p.a0 * std::exp(v2_0 * p.mu / (2.0 * -p.xi));
    } else {
      const double q = 1.0 - p.kappa;
      const double base = std::pow(p.a0, q) + v2_0 * p.mu * q / (2.0 * -p.xi);
      if (q < 0.0 && base <= 0.0)
        throw no_touchdown("energy level admits unbounded escape");
      a_turn = std::pow(base, 1.0 / q);
    }
    if (!std::isfinite(a_turn)) throw no_touchdown("turning point is at infinity");
    const double rise = detail::descent_time(p, a_turn, 0.0, std::sqrt(a_turn - p.a0));
    const double fall = detail::descent_time(p, a_turn, 0.0, std::sqrt(a_turn));
    return rise + fall;
  }

  // Moving toward zero (or at rest): a decreases monotonically iff a'^2 > 0 on (0, a0).
  if (p.xi > 0.0) {
    if (p.a1 == 0.0) throw no_touchdown("repulsive forcing from rest");
    if (p.kappa >= 1.0) throw no_touchdown("logarithmic barrier prevents touchdown");
    if (energy(p, p.a0, p.a1) < 0.0)
      throw no_touchdown("energy level turns the trajectory before a = 0");
  } else if (p.xi == 0.0 && p.a1 == 0.0) {
    throw no_touchdown("stationary state");
  }
  return detail::descent_time(p, p.a0, v2_0, std::sqrt(p.a0));
}

}  // namespace dp2::emden
