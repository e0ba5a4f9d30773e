#pragma once

// Self-similar solutions
//
//   rho(t, x) = f(eta) / a(4t)^((k1 + k2)/4),   u(t, x) = a'(4t) / a(4t) * x,
//   eta = x / a(4t)^(k2/4),
//
// with a(s) solving the Emden equation a'' = xi / (4 a^kappa), kappa = k1/2 + k2 - 1.
// Time t is converted to s = 4t once at this API boundary.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include "dp2/core.hpp"
#include "dp2/emden.hpp"
#include "dp2/profile.hpp"

namespace dp2 {

/// Arbitrary nonnegative C^1 shape used when k3 = 0 and xi = 0.
struct FreeProfile {
  std::function<double(double)> rho0;
};

/// Initial data and horizon of the scale factor a(s).
struct ScaleInit {
  double a0 = 1.0;
  double a1 = 0.0;
  double s_max = 1.0;
  double mu = 4.0;
  double tol = 1e-11;
};

enum class OriginLimitKind { DivergesAtT, DecaysToZero };

struct OriginDensityLimit {
  OriginLimitKind kind = OriginLimitKind::DecaysToZero;
  double T = std::numeric_limits<double>::quiet_NaN();  ///< blowup time, DivergesAtT only
  std::vector<std::pair<double, double>> series;        ///< (t, rho(t, 0))
  bool monotone = false;  ///< series strictly increasing (diverging) or decreasing (decaying)
};

class SelfSimilarSolution {
 public:
  /// Branches k3 > 0, xi > 0 and k3 < 0, xi < 0 with the semi-ellipse profile.
  static SelfSimilarSolution compact(const SystemParams& params, double xi, double alpha,
                                     const ScaleInit& init) {
    params.validate();
    Profile profile = Profile::from_branch(params.k3, xi, alpha);
    return SelfSimilarSolution(params, xi, std::move(profile), init);
  }

  /// Branch k3 = 0, xi = 0: any nonnegative shape is carried by a linear scale factor.
  static SelfSimilarSolution free(const SystemParams& params, FreeProfile shape,
                                  const ScaleInit& init) {
    params.validate();
    detail::require(params.k3 == 0.0, Errc::InvalidBranch, "k3",
                    "free profiles require k3 = 0");
    detail::require(static_cast<bool>(shape.rho0), Errc::InvalidArgument, "rho0",
                    "free profile needs a shape function");
    return SelfSimilarSolution(params, 0.0, std::move(shape), init);
  }

  const SystemParams& params() const noexcept { return params_; }
  double xi() const noexcept { return xi_; }
  const emden::Trajectory& trajectory() const noexcept { return traj_; }
  const Profile* profile() const noexcept { return std::get_if<Profile>(&shape_); }

  /// Blowup time T = S/4 when the trajectory touches down.
  std::optional<double> blowup_time() const {
    if (traj_.fate().kind != emden::FateKind::TouchdownAt) return std::nullopt;
    return traj_.fate().S / 4.0;
  }

  /// Largest t at which the solution can be evaluated (exclusive for blowup runs).
  double t_limit() const noexcept { return traj_.s_limit() / 4.0; }

  /// a(4t) and a'(4t) from the dense output.
  emden::Sample scale(double t) const { return traj_.at(4.0 * t); }

  FieldValue evaluate(double t, double x) const {
    const emden::Sample sc = scale(t);
    const double eta = x / std::pow(sc.a, params_.k2 / 4.0);
    const double amp = std::pow(sc.a, -(params_.k1 + params_.k2) / 4.0);
    return {shape_value(eta) * amp, sc.a_dot / sc.a * x};
  }

  FieldValue operator()(double t, double x) const { return evaluate(t, x); }

  /// Total mass a(4t)^(-k1/4) * integral of the shape.
  double mass(double t) const {
    const emden::Sample sc = scale(t);
    return std::pow(sc.a, -params_.k1 / 4.0) * shape_mass();
  }

  /// Support of rho(t, .) for the compact branches.
  Interval support(double t) const {
    const Profile* p = profile();
    detail::require(p != nullptr, Errc::WrongBranch, "k3", "free profiles have no compact support");
    const double hw = p->half_width() * std::pow(scale(t).a, params_.k2 / 4.0);
    return {-hw, hw};
  }

  double support_halfwidth(double t) const { return support(t).hi; }

  /// Behaviour of rho(t, 0): divergence at T = S/4 after touchdown, decay on
  /// global runs. The series samples t -> T^- geometrically (gaps down to 1e-9
  /// below T) or uniformly across the horizon.
  OriginDensityLimit origin_density_limit() const {
    detail::require(params_.k3 != 0.0 && profile() != nullptr, Errc::WrongBranch, "k3",
                    "origin density limit needs k3 != 0");
    OriginDensityLimit out;
    if (auto T = blowup_time()) {
      out.kind = OriginLimitKind::DivergesAtT;
      out.T = *T;
      for (double gap = 0.5 * *T; gap >= 1e-9; gap /= 10.0) {
        const double t = *T - gap;
        out.series.emplace_back(t, evaluate(t, 0.0).rho);
      }
      out.monotone = strictly(out.series, std::greater<>());
      return out;
    }
    detail::require(xi_ > 0.0, Errc::HorizonExceeded, "s_max",
                    "no touchdown within the horizon; extend s_max");
    out.kind = OriginLimitKind::DecaysToZero;
    constexpr int kPoints = 40;
    const double t_end = t_limit();
    for (int i = 0; i <= kPoints; ++i) {
      const double t = t_end * i / kPoints;
      out.series.emplace_back(t, evaluate(t, 0.0).rho);
    }
    out.monotone = strictly(out.series, std::less<>());
    return out;
  }

 private:
  using Shape = std::variant<Profile, FreeProfile>;

  SelfSimilarSolution(const SystemParams& params, double xi, Shape shape, const ScaleInit& init)
      : params_(params),
        xi_(xi),
        shape_(std::move(shape)),
        traj_(emden::integrate(
            emden::Problem{xi, params.kappa(), init.mu, init.a0, init.a1, init.s_max},
            init.tol)) {}

  double shape_value(double eta) const {
    if (const Profile* p = profile()) return eval_f(*p, eta);
    return std::max(0.0, std::get<FreeProfile>(shape_).rho0(eta));
  }

  double shape_mass() const {
    if (const Profile* p = profile()) return mass_eta(*p);
    boost::math::quadrature::sinh_sinh<double> integrator;
    const auto& rho0 = std::get<FreeProfile>(shape_).rho0;
    return integrator.integrate([&](double eta) { return std::max(0.0, rho0(eta)); });
  }

  // True when each later value compares `cmp` to the earlier one, i.e.
  // cmp(next, prev).
  template <class Cmp>
  static bool strictly(const std::vector<std::pair<double, double>>& s, Cmp cmp) {
    for (std::size_t i = 1; i < s.size(); ++i)
      if (!cmp(s[i].second, s[i - 1].second)) return false;
    return s.size() > 1;
  }

  SystemParams params_;
  double xi_;
  Shape shape_;
  emden::Trajectory traj_;
};

}  // namespace dp2
