#pragma once

// Pseudo-spectral solver for the nonlocal form on a periodic domain
//
//   rho_t = -k2 rho_x u - (k1 + k2) rho u_x
//   u_t   = -u u_x - d_x G * (3/2 u^2 + k3/2 rho^2)
//
// with spectral derivatives, 2/3-rule truncation of every product and
// classical RK4 in time. Blowup is detected through min u_x, never resolved.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dp2/core.hpp"
#include "dp2/riccati.hpp"
#include "dp2/spectral.hpp"

namespace dp2::pde {

struct Diagnostics {
  double min_ux = 0.0;
  double max_rho = 0.0;
  double max_abs_u = 0.0;
  double parity_u = 0.0;    ///< max_j |u(x_j) + u(L - x_j)|
  double parity_rho = 0.0;  ///< same for rho
};

struct SolverState {
  double t = 0.0;
  Field rho;
  Field u;
  SystemParams params;
  Diagnostics diagnostics;
};

struct Tendency {
  Field drho_dt;
  Field du_dt;
};

struct SolverOptions {
  bool dealias = true;
  double cfl = 0.3;
  double velocity_floor = 1.0;  ///< lower bound on the speed used in the CFL step
};

/// Oddness defect about x = 0 (equivalently L/2) on the periodic grid.
inline double parity_residual(std::span<const double> f) {
  const std::size_t n = f.size();
  double m = 0.0;
  for (std::size_t j = 0; j < n; ++j) m = std::max(m, std::abs(f[j] + f[(n - j) % n]));
  return m;
}

class Solver {
 public:
  Solver(const Grid1D& grid, const SystemParams& params, SolverOptions opts = {})
      : grid_(grid), params_(params), opts_(opts), fft_(grid) {
    params_.validate();
    detail::require(opts.cfl > 0.0 && opts.velocity_floor > 0.0, Errc::InvalidArgument, "cfl",
                    "cfl and velocity floor must be positive");
  }

  const Grid1D& grid() const noexcept { return grid_; }
  const SystemParams& params() const noexcept { return params_; }
  const SolverOptions& options() const noexcept { return opts_; }
  const Spectral& spectral() const noexcept { return fft_; }

  SolverState initial_state(Field rho0, Field u0, double t0 = 0.0) const {
    detail::require(rho0.size() == grid_.n() && u0.size() == grid_.n(), Errc::InvalidArgument,
                    "field", "initial fields must match the grid");
    SolverState s{t0, std::move(rho0), std::move(u0), params_, {}};
    require_finite_fields(s.rho, s.u, "initial data");
    if (opts_.dealias) {
      // Band-limit once; every later state is a combination of truncated tendencies.
      s.rho = project(s.rho);
      s.u = project(s.u);
    }
    s.diagnostics = diagnose(s.rho, s.u);
    return s;
  }

  Tendency tendency(const SolverState& s) const {
    const Spectrum uh = fft_.forward(s.u);
    const Spectrum rh = fft_.forward(s.rho);
    const Field& u = s.u;
    const Field& rho = s.rho;
    const Field ux = fft_.inverse(fft_.differentiate(uh));
    const Field rhox = fft_.inverse(fft_.differentiate(rh));

    const std::size_t n = grid_.n();
    const double k1 = params_.k1, k2 = params_.k2, k3 = params_.k3;
    Field mass(n), adv(n), pressure(n);
    for (std::size_t j = 0; j < n; ++j) {
      mass[j] = -k2 * rhox[j] * u[j] - (k1 + k2) * rho[j] * ux[j];
      adv[j] = u[j] * ux[j];
      pressure[j] = 1.5 * u[j] * u[j] + 0.5 * k3 * rho[j] * rho[j];
    }

    Spectrum mh = fft_.forward(mass);
    Spectrum ah = fft_.forward(adv);
    Spectrum ph = fft_.forward(pressure);
    filter(mh);
    filter(ah);
    filter(ph);
    const Spectrum gh = fft_.differentiate(fft_.helmholtz_inverse(std::move(ph)));
    for (std::size_t k = 0; k < ah.size(); ++k) ah[k] = -ah[k] - gh[k];

    Tendency out{fft_.inverse(mh), fft_.inverse(ah)};
    require_finite_fields(out.drho_dt, out.du_dt, "tendency");
    return out;
  }

  /// One classical RK4 step; returns a new state.
  SolverState step(const SolverState& s, double dt) const {
    const std::size_t n = grid_.n();
    auto shifted = [&](const Tendency& k, double w) {
      SolverState y{s.t + w, s.rho, s.u, s.params, {}};
      for (std::size_t j = 0; j < n; ++j) {
        y.rho[j] += w * k.drho_dt[j];
        y.u[j] += w * k.du_dt[j];
      }
      return y;
    };
    const Tendency k1 = tendency(s);
    const Tendency k2 = tendency(shifted(k1, 0.5 * dt));
    const Tendency k3 = tendency(shifted(k2, 0.5 * dt));
    const Tendency k4 = tendency(shifted(k3, dt));

    SolverState out{s.t + dt, s.rho, s.u, s.params, {}};
    for (std::size_t j = 0; j < n; ++j) {
      out.rho[j] += dt / 6.0 *
                    (k1.drho_dt[j] + 2.0 * k2.drho_dt[j] + 2.0 * k3.drho_dt[j] + k4.drho_dt[j]);
      out.u[j] += dt / 6.0 * (k1.du_dt[j] + 2.0 * k2.du_dt[j] + 2.0 * k3.du_dt[j] + k4.du_dt[j]);
    }
    require_finite_fields(out.rho, out.u, "step");
    out.diagnostics = diagnose(out.rho, out.u);
    return out;
  }

  /// CFL-limited step for the current velocity.
  double cfl_dt(const SolverState& s) const {
    const double speed = std::max(s.diagnostics.max_abs_u * std::max(1.0, std::abs(params_.k2)),
                                  opts_.velocity_floor);
    return opts_.cfl * grid_.dx() / speed;
  }

  Field slope(std::span<const double> u) const {
    Spectrum uh = fft_.forward(u);
    filter(uh);
    return fft_.inverse(fft_.differentiate(std::move(uh)));
  }

  /// Trigonometric interpolation of a nodal field (and optionally its derivative).
  double value_at(std::span<const double> f, double x, int derivative = 0) const {
    Spectrum c = fft_.forward(f);
    if (derivative > 0) c = fft_.differentiate(std::move(c), derivative);
    return fft_.interpolate(c, x);
  }

 private:
  Field project(std::span<const double> f) const {
    Spectrum c = fft_.forward(f);
    fft_.truncate(c);
    return fft_.inverse(c);
  }

  void filter(Spectrum& c) const {
    if (opts_.dealias) fft_.truncate(c);
  }

  Diagnostics diagnose(const Field& rho, const Field& u) const {
    Diagnostics d;
    const Field ux = slope(u);
    d.min_ux = *std::min_element(ux.begin(), ux.end());
    d.max_rho = *std::max_element(rho.begin(), rho.end());
    for (const double v : u) d.max_abs_u = std::max(d.max_abs_u, std::abs(v));
    d.parity_u = parity_residual(u);
    d.parity_rho = parity_residual(rho);
    return d;
  }

  static void require_finite_fields(const Field& a, const Field& b, const char* where) {
    auto finite = [](const Field& f) {
      return std::all_of(f.begin(), f.end(), [](double v) { return std::isfinite(v); });
    };
    if (!finite(a) || !finite(b))
      throw Error(Errc::NonFinite, where, std::string("non-finite values in ") + where);
  }

  Grid1D grid_;
  SystemParams params_;
  SolverOptions opts_;
  Spectral fft_;
};

struct BlowupConfig {
  Grid1D grid{256, 2.0 * std::numbers::pi};
  SystemParams params;
  Field rho0;
  Field u0;
  double x0 = 0.0;        ///< point where the slope criterion is checked
  double m_est = 0.0;     ///< bound on |u(t, x0)|
  double threshold = 1e3; ///< blowup declared once min u_x < -threshold
  double t_max = 1.0;
  SolverOptions options;
  std::vector<double> snapshot_times;
  /// Called with every accepted state, including the initial one.
  std::function<void(const SolverState&)> observer;
};

struct DiagnosticRecord {
  double t = 0.0;
  double dt = 0.0;
  double min_ux = 0.0;
  double max_rho = 0.0;
  double max_abs_u = 0.0;
  double parity = 0.0;  ///< max of the u and rho oddness defects
};

struct BlowupReport {
  std::vector<DiagnosticRecord> series;
  std::vector<SolverState> snapshots;
  SolverState final_state;
  double v0 = 0.0;                      ///< initial slope at x0
  riccati::Outcome bound;               ///< comparison-equation bound for (m_est, v0)
  std::optional<double> crossing_time;  ///< first time min u_x < -threshold (interpolated)
  bool non_finite = false;              ///< solver produced non-finite values before crossing
  double max_parity = 0.0;

  bool blowup_detected() const noexcept { return crossing_time.has_value(); }
};

/// Integrate until min u_x crosses -threshold or t_max is reached. The step
/// starts at the CFL value and is halved whenever max |u| doubles. Reaching
/// t_max without a crossing is reported, not thrown: the bound is one-sided.
inline BlowupReport run_blowup_experiment(const BlowupConfig& cfg) {
  detail::require(cfg.threshold > 0.0, Errc::InvalidArgument, "threshold",
                  "threshold must be positive");
  detail::require(cfg.t_max > 0.0, Errc::InvalidArgument, "t_max", "t_max must be positive");
  const Solver solver(cfg.grid, cfg.params, cfg.options);
  BlowupReport rep;
  SolverState state = solver.initial_state(cfg.rho0, cfg.u0);
  rep.v0 = solver.value_at(state.u, cfg.x0, 1);
  rep.bound = riccati::check({cfg.m_est, rep.v0});

  std::vector<double> pending = cfg.snapshot_times;
  std::sort(pending.begin(), pending.end());
  pending.erase(std::remove_if(pending.begin(), pending.end(),
                               [&](double t) { return t < 0.0 || t > cfg.t_max; }),
                pending.end());
  std::size_t next_snap = 0;

  auto record = [&](const SolverState& s, double dt) {
    const Diagnostics& d = s.diagnostics;
    rep.series.push_back({s.t, dt, d.min_ux, d.max_rho, d.max_abs_u,
                          std::max(d.parity_u, d.parity_rho)});
    rep.max_parity = std::max(rep.max_parity, rep.series.back().parity);
    if (cfg.observer) cfg.observer(s);
  };
  auto take_snapshots = [&](const SolverState& s) {
    while (next_snap < pending.size() && pending[next_snap] <= s.t + 1e-12) {
      rep.snapshots.push_back(s);
      ++next_snap;
    }
  };

  double dt = solver.cfl_dt(state);
  double u_ref = std::max(state.diagnostics.max_abs_u, cfg.options.velocity_floor);
  record(state, 0.0);
  take_snapshots(state);

  while (state.t < cfg.t_max) {
    double h = std::min(dt, cfg.t_max - state.t);
    if (next_snap < pending.size()) h = std::min(h, pending[next_snap] - state.t);
    if (h <= 0.0) break;
    SolverState next;
    try {
      next = solver.step(state, h);
    } catch (const Error& e) {
      if (e.code() != Errc::NonFinite) throw;
      rep.non_finite = true;
      break;
    }
    const double prev_min = state.diagnostics.min_ux;
    state = std::move(next);
    record(state, h);
    take_snapshots(state);

    if (state.diagnostics.min_ux < -cfg.threshold) {
      const double t0 = state.t - h;
      const double frac = (-cfg.threshold - prev_min) / (state.diagnostics.min_ux - prev_min);
      rep.crossing_time = t0 + std::clamp(frac, 0.0, 1.0) * h;
      break;
    }
    while (state.diagnostics.max_abs_u >= 2.0 * u_ref) {
      dt *= 0.5;
      u_ref *= 2.0;
    }
  }
  rep.final_state = std::move(state);
  return rep;
}

/// Odd Gaussian-derivative profile centred at L/2 with slope `slope` there:
/// u0(x) = slope * y * exp(-y^2 / (2 sigma^2)), y = x - L/2, antisymmetrized
/// over the node pairs (j, n - j) so that the nodal data is exactly odd. This
/// also zeroes u at x = 0, where the Gaussian tail would otherwise leave a
/// mismatch of size g(0).
inline Field odd_gaussian_derivative(const Grid1D& grid, double slope, double sigma) {
  const double c = 0.5 * grid.length();
  auto g = [&](double x) {
    const double y = x - c;
    return slope * y * std::exp(-y * y / (2.0 * sigma * sigma));
  };
  const std::size_t n = grid.n();
  Field u(n);
  for (std::size_t j = 0; j < n; ++j) u[j] = 0.5 * (g(grid.node(j)) - g(grid.node((n - j) % n)));
  return u;
}

}  // namespace dp2::pde
