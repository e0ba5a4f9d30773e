#pragma once

// Compactly supported density shape in the similarity variable eta.
//
// The shape solves  beta * eta + f f' = 0,  f(0) = alpha,  beta = xi / k3 > 0,
// i.e. f(eta) = sqrt(alpha^2 - beta eta^2) on |eta| <= alpha / sqrt(beta) and
// f = 0 outside. The result is a semi-ellipse whose edge derivative is
// unbounded, so the assembled density is only C^0 there.

#include <cmath>
#include <numbers>

#include "dp2/core.hpp"

namespace dp2 {

class Profile {
 public:
  Profile(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    detail::require(std::isfinite(alpha) && alpha >= 0.0, Errc::InvalidArgument, "alpha",
                    "alpha must be finite and nonnegative");
    detail::require(std::isfinite(beta) && beta > 0.0, Errc::InvalidBranch, "beta",
                    "beta = xi/k3 must be positive");
  }

  /// Shape for a (k3, xi) branch; only same-sign pairs give a real profile.
  static Profile from_branch(double k3, double xi, double alpha) {
    detail::require_finite(k3, "k3");
    detail::require_finite(xi, "xi");
    detail::require((k3 > 0.0 && xi > 0.0) || (k3 < 0.0 && xi < 0.0), Errc::InvalidBranch, "xi",
                    "xi and k3 must be nonzero with the same sign");
    return Profile(alpha, xi / k3);
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double half_width() const noexcept { return alpha_ / std::sqrt(beta_); }

 private:
  double alpha_;
  double beta_;
};

/// f(eta); exactly zero outside the support.
inline double eval_f(const Profile& p, double eta) {
  if (std::abs(eta) >= p.half_width()) return 0.0;
  const double inner = p.alpha() * p.alpha() - p.beta() * eta * eta;
  return inner > 0.0 ? std::sqrt(inner) : 0.0;
}

/// f'(eta) on the open support, zero outside.
inline double eval_df(const Profile& p, double eta) {
  const double f = eval_f(p, eta);
  return f > 0.0 ? -p.beta() * eta / f : 0.0;
}

/// Area under f: (pi/2) alpha^2 / sqrt(beta).
inline double mass_eta(const Profile& p) {
  return 0.5 * std::numbers::pi * p.alpha() * p.alpha() / std::sqrt(p.beta());
}

/// beta * eta + f(eta) * D_h f(eta) with a centred difference of width 2h.
/// The stencil must stay strictly inside the support.
inline double ode_residual_f(const Profile& p, double eta, double h) {
  detail::require(h > 0.0 && std::isfinite(h), Errc::InvalidArgument, "h", "h must be positive");
  detail::require(std::abs(eta) + h < p.half_width(), Errc::OutsideInterior, "eta",
                  "stencil [eta - h, eta + h] leaves the open support");
  const double df = (eval_f(p, eta + h) - eval_f(p, eta - h)) / (2.0 * h);
  return p.beta() * eta + eval_f(p, eta) * df;
}

}  // namespace dp2
