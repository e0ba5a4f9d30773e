#pragma once

// Slope blowup criterion along a characteristic through x0.
//
// With |u(t, x0)| <= M the slope v = u_x(x0, t) obeys v' <= -v^2 + c^2,
// c = sqrt(3/2) |M|. If v(0) < -c the comparison equation reaches -infinity at
//   T = ln((v0 - c) / (v0 + c)) / (2c)      (T = -1/v0 when c = 0),
// which bounds the blowup time of the slope from above.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dp2/core.hpp"

namespace dp2::riccati {

/// |v| beyond which the comparison trajectory counts as escaped.
inline constexpr double kEscape = 1e6;

struct BlowupCriterion {
  double M = 0.0;   ///< bound on |u(t, x0)|
  double v0 = 0.0;  ///< initial slope u_x(x0, 0)

  double c() const noexcept { return std::sqrt(1.5) * std::abs(M); }
  bool applies() const noexcept { return v0 < -c() && (c() > 0.0 || v0 < 0.0); }

  void validate() const {
    detail::require(std::isfinite(M) && M >= 0.0, Errc::InvalidArgument, "M",
                    "M must be finite and nonnegative");
    detail::require_finite(v0, "v0");
  }
};

/// Upper bound on the blowup time, or nullopt when the criterion is inconclusive.
struct Outcome {
  std::optional<double> T;

  bool blows_up() const noexcept { return T.has_value(); }
};

inline Outcome check(const BlowupCriterion& crit) {
  crit.validate();
  if (!crit.applies()) return {};
  const double c = crit.c();
  if (c == 0.0) return {-1.0 / crit.v0};
  // log((v0 - c)/(v0 + c)) = log1p(2c / (-(v0 + c))) keeps precision as c -> 0.
  return {std::log1p(2.0 * c / -(crit.v0 + c)) / (2.0 * c)};
}

struct TrajectoryPoint {
  double t = 0.0;
  double v = 0.0;
};

/// Classical RK4 of v' = -v^2 + c^2 from v(0) = v0 with step dt, stopped when
/// |v| exceeds kEscape or t passes t_max. When t_max is not given it defaults
/// to ten times the closed-form bound, or to 10 / max(c, |v0|, 1) when the
/// criterion does not apply.
inline std::vector<TrajectoryPoint> comparison_trajectory(const BlowupCriterion& crit, double dt,
                                                          std::optional<double> t_max = {}) {
  crit.validate();
  detail::require(dt > 0.0 && std::isfinite(dt), Errc::InvalidArgument, "dt",
                  "dt must be positive");
  const double c2 = 1.5 * crit.M * crit.M;
  const Outcome bound = check(crit);
  const double horizon = t_max.value_or(
      bound.T ? 10.0 * *bound.T : 10.0 / std::max({crit.c(), std::abs(crit.v0), 1.0}));

  auto f = [c2](double v) { return -v * v + c2; };
  std::vector<TrajectoryPoint> out{{0.0, crit.v0}};
  double v = crit.v0;
  for (std::size_t k = 1; out.back().t < horizon; ++k) {
    const double k1 = f(v);
    const double k2 = f(v + 0.5 * dt * k1);
    const double k3 = f(v + 0.5 * dt * k2);
    const double k4 = f(v + dt * k3);
    v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back({static_cast<double>(k) * dt, v});
    if (!std::isfinite(v) || std::abs(v) > kEscape) break;
  }
  return out;
}

/// Last time before |v| exceeds the escape threshold, or nullopt if it never does.
inline std::optional<double> escape_time(std::span<const TrajectoryPoint> traj) {
  if (traj.size() < 2) return std::nullopt;
  const TrajectoryPoint& last = traj.back();
  if (std::isfinite(last.v) && std::abs(last.v) <= kEscape) return std::nullopt;
  return traj[traj.size() - 2].t;
}

/// exp(-(k1 + k2) * integral of div u dt) by the trapezoid rule over a
/// uniformly sampled (t, div u) history: the factor rho / rho0 along a
/// characteristic of the mass equation.
inline double density_positivity_factor(std::span<const std::pair<double, double>> history,
                                        const SystemParams& params) {
  detail::require(!history.empty(), Errc::EmptyHistory, "history", "history is empty");
  double integral = 0.0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    const double dt = history[i].first - history[i - 1].first;
    integral += 0.5 * dt * (history[i].second + history[i - 1].second);
  }
  return std::exp(-(params.k1 + params.k2) * integral);
}

}  // namespace dp2::riccati
