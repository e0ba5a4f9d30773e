#pragma once

// Finite-difference residuals of the two-component system for any field
// sampler (t, x) -> (rho, u), and grid-refinement convergence studies.
//
//   R1 = rho_t + k2 u rho_x + (k1 + k2) rho u_x
//   R2 = u_t - u_xxt + 4 u u_x - 3 u_x u_xx - u u_xxx + k3 rho rho_x
//
// All derivatives are second-order central differences: spacing h in x,
// dt in t. u_xxt uses the cross stencil, u_xxx the five-point stencil.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dp2/core.hpp"

namespace dp2::residual {

template <class S>
concept FieldSampler = requires(const S& s, double t, double x) {
  { s(t, x) } -> std::convertible_to<FieldValue>;
};

template <FieldSampler S>
std::vector<double> mass_equation_residual(const S& sampler, const SystemParams& params, double t,
                                           std::span<const double> xs, double h, double dt) {
  detail::require(h > 0.0 && dt > 0.0, Errc::InvalidArgument, "h", "h and dt must be positive");
  std::vector<double> out;
  out.reserve(xs.size());
  for (const double x : xs) {
    const FieldValue c = sampler(t, x);
    const FieldValue l = sampler(t, x - h);
    const FieldValue r = sampler(t, x + h);
    const double rho_t = (sampler(t + dt, x).rho - sampler(t - dt, x).rho) / (2.0 * dt);
    const double rho_x = (r.rho - l.rho) / (2.0 * h);
    const double u_x = (r.u - l.u) / (2.0 * h);
    out.push_back(rho_t + params.k2 * c.u * rho_x + (params.k1 + params.k2) * c.rho * u_x);
  }
  return out;
}

template <FieldSampler S>
std::vector<double> momentum_equation_residual(const S& sampler, const SystemParams& params,
                                               double t, std::span<const double> xs, double h,
                                               double dt) {
  detail::require(h > 0.0 && dt > 0.0, Errc::InvalidArgument, "h", "h and dt must be positive");
  std::vector<double> out;
  out.reserve(xs.size());
  const double h2 = h * h;
  for (const double x : xs) {
    const FieldValue m2 = sampler(t, x - 2.0 * h);
    const FieldValue m1 = sampler(t, x - h);
    const FieldValue c = sampler(t, x);
    const FieldValue p1 = sampler(t, x + h);
    const FieldValue p2 = sampler(t, x + 2.0 * h);

    const double uf_m = sampler(t + dt, x - h).u, uf_c = sampler(t + dt, x).u,
                 uf_p = sampler(t + dt, x + h).u;
    const double ub_m = sampler(t - dt, x - h).u, ub_c = sampler(t - dt, x).u,
                 ub_p = sampler(t - dt, x + h).u;

    const double u_t = (uf_c - ub_c) / (2.0 * dt);
    const double u_xxt = ((uf_p - 2.0 * uf_c + uf_m) - (ub_p - 2.0 * ub_c + ub_m)) / (2.0 * dt * h2);
    const double u_x = (p1.u - m1.u) / (2.0 * h);
    const double u_xx = (p1.u - 2.0 * c.u + m1.u) / h2;
    const double u_xxx = (p2.u - 2.0 * p1.u + 2.0 * m1.u - m2.u) / (2.0 * h2 * h);
    const double rho_x = (p1.rho - m1.rho) / (2.0 * h);

    out.push_back(u_t - u_xxt + 4.0 * c.u * u_x - 3.0 * u_x * u_xx - c.u * u_xxx +
                  params.k3 * c.rho * rho_x);
  }
  return out;
}

/// One (h, dt) pair of a refinement sequence.
struct Refinement {
  double h = 0.0;
  double dt = 0.0;
};

struct LevelNorms {
  double h = 0.0;
  double dt = 0.0;
  double mass_linf = 0.0;
  double momentum_linf = 0.0;
};

struct StudyConfig {
  double t = 0.0;
  std::vector<double> nodes;       ///< evaluation points, shared by all levels
  Interval region;                 ///< smooth region, e.g. the support at time t
  std::optional<double> band;      ///< excluded margin inside `region`; 5 * coarsest h if unset
  std::vector<Refinement> levels;  ///< coarse to fine, fixed ratio
};

struct ResidualReport {
  double grid_h = 0.0;  ///< finest spacing
  double dt = 0.0;
  double mass_eq_linf = 0.0;  ///< finest-level norms
  double momentum_eq_linf = 0.0;
  double interior_band = 0.0;
  std::optional<double> order_estimate_mass;  ///< nullopt: residual at rounding level
  std::optional<double> order_estimate_momentum;
  std::size_t interior_points = 0;
  std::vector<LevelNorms> levels;
};

/// Residuals below this are treated as exact zeros when fitting orders.
inline constexpr double kRoundoffFloor = 1e-12;

inline std::vector<double> uniform_nodes(double lo, double hi, std::size_t n) {
  detail::require(n >= 2 && hi > lo, Errc::InvalidArgument, "nodes", "need n >= 2 and hi > lo");
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return xs;
}

/// Least-squares slope of log(norm) against log(h).
inline std::optional<double> fit_order(std::span<const double> hs, std::span<const double> norms) {
  if (std::all_of(norms.begin(), norms.end(), [](double v) { return v < kRoundoffFloor; }))
    return std::nullopt;
  const std::size_t n = hs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(hs[i]);
    my += std::log(std::max(norms[i], 1e-300));
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(hs[i]) - mx;
    sxy += dx * (std::log(std::max(norms[i], 1e-300)) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

inline double linf(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::abs(x));
  return m;
}

template <FieldSampler S>
ResidualReport convergence_study(const S& sampler, const SystemParams& params,
                                 const StudyConfig& cfg) {
  detail::require(cfg.levels.size() >= 3, Errc::InsufficientGrids, "levels",
                  "a convergence study needs at least three refinement levels");
  const double ratio = cfg.levels[0].h / cfg.levels[1].h;
  for (std::size_t i = 0; i + 1 < cfg.levels.size(); ++i) {
    const double r = cfg.levels[i].h / cfg.levels[i + 1].h;
    detail::require(r > 1.0 && std::abs(r - ratio) <= 1e-9 * ratio, Errc::InvalidArgument,
                    "levels", "refinement levels must shrink h by a fixed ratio");
  }

  ResidualReport rep;
  rep.interior_band = cfg.band.value_or(5.0 * cfg.levels.front().h);
  std::vector<double> interior;
  for (const double x : cfg.nodes)
    if (x > cfg.region.lo + rep.interior_band && x < cfg.region.hi - rep.interior_band)
      interior.push_back(x);
  detail::require(!interior.empty(), Errc::InvalidArgument, "band",
                  "no evaluation nodes remain after excluding the boundary band");
  rep.interior_points = interior.size();

  std::vector<double> hs, m_norms, p_norms;
  for (const Refinement& lv : cfg.levels) {
    const auto r1 = mass_equation_residual(sampler, params, cfg.t, interior, lv.h, lv.dt);
    const auto r2 = momentum_equation_residual(sampler, params, cfg.t, interior, lv.h, lv.dt);
    rep.levels.push_back({lv.h, lv.dt, linf(r1), linf(r2)});
    hs.push_back(lv.h);
    m_norms.push_back(rep.levels.back().mass_linf);
    p_norms.push_back(rep.levels.back().momentum_linf);
  }
  rep.grid_h = cfg.levels.back().h;
  rep.dt = cfg.levels.back().dt;
  rep.mass_eq_linf = m_norms.back();
  rep.momentum_eq_linf = p_norms.back();
  rep.order_estimate_mass = fit_order(hs, m_norms);
  rep.order_estimate_momentum = fit_order(hs, p_norms);
  return rep;
}

/// Refinement sequence h_coarse, h_coarse/ratio, ... with dt = dt_over_h * h.
inline std::vector<Refinement> refinement_sequence(double h_coarse, double ratio,
                                                   std::size_t count, double dt_over_h) {
  std::vector<Refinement> lv;
  double h = h_coarse;
  for (std::size_t i = 0; i < count; ++i, h /= ratio) lv.push_back({h, dt_over_h * h});
  return lv;
}

}  // namespace dp2::residual
