// dp2 command-line driver.
//
//   dp2 [--out DIR] [--config FILE] [--seed N] [--format csv|json] <command> [options]
//
// Exit codes: 0 success, 1 verify found a convergence order below 1.7,
// 2 invalid input, 3 numerical failure.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dp2/dp2.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::string out = "out";
  std::string config;
  std::uint64_t seed = 0;
  std::string format = "csv";
};

// Option values echoed into every summary so it can be fed back via --config.
struct Echo {
  std::vector<std::pair<std::string, std::function<json()>>> getters;

  json dump(const Globals& g) const {
    json j = json::object();
    for (const auto& [name, get] : getters) j[name] = get();
    j["seed"] = g.seed;
    j["format"] = g.format;
    return j;
  }
};

template <class T>
CLI::Option* add(CLI::App* app, Echo& echo, const std::string& name, T& var,
                 const std::string& desc) {
  auto* o = app->add_option("--" + name, var, desc)->capture_default_str();
  o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  echo.getters.emplace_back(name, [&var] { return json(var); });
  return o;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    dp2::detail::require(res.ec == std::errc() && res.ptr == item.data() + item.size() &&
                             std::isfinite(v),
                         dp2::Errc::InvalidArgument, key, key + ": bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_table(const Globals& g, const std::string& stem, const dp2::io::Table& t) {
  if (g.format == "json")
    dp2::io::write_json(fs::path(g.out) / (stem + ".json"), dp2::io::to_json(t));
  else
    dp2::io::write_text(fs::path(g.out) / (stem + ".csv"), dp2::io::to_csv(t));
}

std::string fmt(double v) { return dp2::io::format_real(v); }

// ---------------------------------------------------------------- emden

struct EmdenOpts {
  double xi = -1.0, kappa = 0.5, mu = 4.0, a0 = 1.0, a1 = 0.0, s_max = 10.0, tol = 1e-11;

  void bind(CLI::App* app, Echo& e) {
    add(app, e, "xi", xi, "Emden forcing constant");
    add(app, e, "kappa", kappa, "Emden exponent");
    add(app, e, "mu", mu, "forcing denominator (4 or 1)");
    add(app, e, "a0", a0, "initial scale factor a(0) > 0");
    add(app, e, "a1", a1, "initial velocity a'(0)");
    add(app, e, "s-max", s_max, "integration horizon in s");
    add(app, e, "tol", tol, "integrator tolerance");
  }

  dp2::emden::Problem problem() const { return {xi, kappa, mu, a0, a1, s_max}; }
};

int cmd_emden(const Globals& g, const EmdenOpts& o, const Echo& echo) {
  const auto traj = dp2::emden::integrate(o.problem(), o.tol);
  write_table(g, "emden_samples", dp2::io::samples_table(traj));
  json sum = dp2::io::summary(traj);
  const auto& last = traj.samples().back();
  sum["s_end"] = last.s;
  sum["a_end"] = last.a;
  sum["a_dot_end"] = last.a_dot;
  if (o.kappa > 0.0 && o.kappa <= 1.0)
    sum["classification"] = std::string(dp2::emden::to_string(dp2::emden::classify(o.problem())));
  sum["config"] = echo.dump(g);
  dp2::io::write_json(fs::path(g.out) / "emden_summary.json", sum);

  std::cout << "fate=" << dp2::emden::to_string(traj.fate().kind);
  if (traj.fate().kind == dp2::emden::FateKind::TouchdownAt) std::cout << " S=" << fmt(traj.fate().S);
  std::cout << " a_end=" << fmt(last.a) << " s_end=" << fmt(last.s) << '\n';
  return kExitOk;
}

// -------------------------------------------------------- self-similar

struct SelfSimOpts {
  double k1 = 1.0, k2 = 1.0, k3 = 1.0, xi = 1.0, alpha = 1.0, a0 = 1.0, a1 = 0.0, s_max = 4.0;
  std::string times = "0,0.05,0.1";
  double x_max = 0.0;
  int nx = 201;
  int mass_samples = 41;

  void bind(CLI::App* app, Echo& e) {
    add(app, e, "k1", k1, "system constant k1");
    add(app, e, "k2", k2, "system constant k2 > 0");
    add(app, e, "k3", k3, "system constant k3");
    add(app, e, "xi", xi, "branch constant (same sign as k3, or 0 with k3 = 0)");
    add(app, e, "alpha", alpha, "profile amplitude f(0)");
    add(app, e, "a0", a0, "a(0)");
    add(app, e, "a1", a1, "a'(0)");
    add(app, e, "s-max", s_max, "horizon for a(s)");
  }

  dp2::SystemParams params() const { return {k1, k2, k3}; }

  dp2::SelfSimilarSolution build() const {
    const dp2::ScaleInit init{a0, a1, s_max};
    if (k3 == 0.0) {
      dp2::detail::require(xi == 0.0, dp2::Errc::InvalidBranch, "xi", "k3 = 0 requires xi = 0");
      const double amp = alpha;
      return dp2::SelfSimilarSolution::free(
          params(), {[amp](double eta) { return amp * std::exp(-eta * eta); }}, init);
    }
    return dp2::SelfSimilarSolution::compact(params(), xi, alpha, init);
  }
};

int cmd_selfsim(const Globals& g, const SelfSimOpts& o, const Echo& echo) {
  dp2::detail::require(o.nx >= 2, dp2::Errc::InvalidArgument, "nx", "nx must be >= 2");
  dp2::detail::require(o.mass_samples >= 2, dp2::Errc::InvalidArgument, "mass-samples",
                       "mass-samples must be >= 2");
  const auto sol = o.build();
  std::vector<double> times = parse_list(o.times, "times");
  dp2::detail::require(!times.empty(), dp2::Errc::InvalidArgument, "times", "no times given");
  std::sort(times.begin(), times.end());
  dp2::detail::require(times.front() >= 0.0, dp2::Errc::InvalidArgument, "times",
                       "times must be nonnegative");
  const auto T = sol.blowup_time();

  auto half_width = [&](double t) {
    const double scale = std::pow(sol.scale(t).a, o.k2 / 4.0);
    return sol.profile() ? sol.support_halfwidth(t) : 3.0 * scale;
  };

  json snaps = json::array();
  json halted = nullptr;
  std::vector<double> valid;
  for (double t : times) {
    if (T && t >= *T) {
      halted = {{"reason", "BeyondBlowup"}, {"t", t}, {"T", *T}};
      std::cout << "halted at t=" << fmt(t) << ": BeyondBlowup (T=" << fmt(*T) << ")\n";
      break;
    }
    dp2::detail::require(t <= sol.t_limit(), dp2::Errc::HorizonExceeded, "times",
                         "t = " + fmt(t) + " lies beyond the horizon s-max/4 = " +
                             fmt(sol.t_limit()));
    valid.push_back(t);
  }

  double x_max = o.x_max;
  if (x_max <= 0.0) {
    x_max = 0.0;
    for (double t : valid) x_max = std::max(x_max, 1.25 * half_width(t));
    if (x_max == 0.0) x_max = 1.0;
  }
  for (std::size_t i = 0; i < valid.size(); ++i) {
    const double t = valid[i];
    dp2::io::Table tab{{"x", "rho", "u"}, {}};
    for (int k = 0; k < o.nx; ++k) {
      const double x = -x_max + 2.0 * x_max * k / (o.nx - 1);
      const auto v = sol(t, x);
      tab.add({x, v.rho, v.u});
    }
    const std::string stem = "selfsim_snapshot_" + std::to_string(i);
    write_table(g, stem, tab);
    const auto sc = sol.scale(t);
    snaps.push_back({{"t", t},
                     {"a", sc.a},
                     {"a_dot", sc.a_dot},
                     {"mass", sol.mass(t)},
                     {"support_halfwidth",
                      sol.profile() ? json(sol.support_halfwidth(t)) : json(nullptr)},
                     {"file", stem + (g.format == "json" ? ".json" : ".csv")}});
  }

  const double t_mass = valid.empty() || valid.back() == 0.0
                            ? 0.5 * (T ? *T : sol.t_limit())
                            : valid.back();
  dp2::io::Table mass{{"t", "mass"}, {}};
  for (int k = 0; k < o.mass_samples; ++k) {
    const double t = t_mass * k / (o.mass_samples - 1);
    mass.add({t, sol.mass(t)});
  }
  write_table(g, "selfsim_mass", mass);

  json origin = nullptr;
  if (sol.profile()) {
    try {
      const auto lim = sol.origin_density_limit();
      dp2::io::Table tab{{"t", "rho"}, {}};
      for (auto [t, r] : lim.series) tab.add({t, r});
      write_table(g, "selfsim_origin", tab);
      origin = {{"kind", lim.kind == dp2::OriginLimitKind::DivergesAtT ? "DivergesAtT"
                                                                        : "DecaysToZero"},
                {"T", dp2::io::real_or_null(lim.T)},
                {"monotone", lim.monotone}};
    } catch (const dp2::Error& e) {
      if (e.code() != dp2::Errc::HorizonExceeded) throw;
    }
  }

  json sum = {{"blowup_time", T ? json(*T) : json(nullptr)},
              {"t_limit", sol.t_limit()},
              {"snapshots", snaps},
              {"halted", halted},
              {"origin", origin},
              {"config", echo.dump(g)}};
  dp2::io::write_json(fs::path(g.out) / "selfsim_summary.json", sum);
  if (T) std::cout << "T=" << fmt(*T) << '\n';
  std::cout << "snapshots=" << valid.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyOpts {
  SelfSimOpts sol;
  double t = 0.1, h_coarse = 8e-3, ratio = 2.0, dt_over_h = 0.1, band = -1.0, min_order = 1.7;
  int levels = 4, nodes = 401;

  void bind(CLI::App* app, Echo& e) {
    add(app, e, "k1", sol.k1, "system constant k1");
    add(app, e, "k2", sol.k2, "system constant k2 > 0");
    add(app, e, "k3", sol.k3, "system constant k3");
    add(app, e, "xi", sol.xi, "branch constant");
    add(app, e, "alpha", sol.alpha, "profile amplitude");
    add(app, e, "a0", sol.a0, "a(0)");
    add(app, e, "a1", sol.a1, "a'(0)");
    add(app, e, "s-max", sol.s_max, "horizon for a(s)");
    add(app, e, "t", t, "evaluation time");
    add(app, e, "h-coarse", h_coarse, "coarsest spacing");
    add(app, e, "ratio", ratio, "refinement ratio");
    add(app, e, "levels", levels, "number of refinement levels (>= 3)");
    add(app, e, "dt-over-h", dt_over_h, "time step as a multiple of h");
    add(app, e, "band", band, "excluded margin at the support edge (< 0: 5 h_coarse)");
    add(app, e, "nodes", nodes, "evaluation nodes across the region");
    add(app, e, "min-order", min_order, "required convergence order");
  }
};

int cmd_verify(const Globals& g, const VerifyOpts& o, const Echo& echo) {
  dp2::detail::require(o.levels >= 1 && o.nodes >= 2, dp2::Errc::InvalidArgument, "nodes",
                       "levels >= 1 and nodes >= 2 required");
  dp2::detail::require(o.h_coarse > 0.0 && o.ratio > 1.0 && o.dt_over_h > 0.0,
                       dp2::Errc::InvalidArgument, "h-coarse",
                       "h-coarse > 0, ratio > 1 and dt-over-h > 0 required");
  const auto sol = o.sol.build();
  dp2::detail::require(o.t > 0.0 && o.t < sol.t_limit(), dp2::Errc::InvalidArgument, "t",
                       "t must lie inside (0, t_limit) so the time stencil fits");
  const auto params = o.sol.params();
  const dp2::Interval region =
      sol.profile() ? sol.support(o.t) : dp2::Interval{-2.0, 2.0};
  dp2::residual::StudyConfig cfg{
      o.t, dp2::residual::uniform_nodes(region.lo, region.hi, static_cast<std::size_t>(o.nodes)),
      region, o.band >= 0.0 ? std::optional<double>(o.band) : std::nullopt,
      dp2::residual::refinement_sequence(o.h_coarse, o.ratio, static_cast<std::size_t>(o.levels),
                                         o.dt_over_h)};
  const auto rep = dp2::residual::convergence_study(sol, params, cfg);

  std::vector<double> interior;
  for (double x : cfg.nodes)
    if (x > region.lo + rep.interior_band && x < region.hi - rep.interior_band)
      interior.push_back(x);
  const auto r1 = dp2::residual::mass_equation_residual(sol, params, o.t, interior, rep.grid_h, rep.dt);
  const auto r2 =
      dp2::residual::momentum_equation_residual(sol, params, o.t, interior, rep.grid_h, rep.dt);
  dp2::io::Table tab{{"x", "R1", "R2"}, {}};
  for (std::size_t i = 0; i < interior.size(); ++i) tab.add({interior[i], r1[i], r2[i]});
  write_table(g, "verify_residual", tab);

  auto ok = [&](const std::optional<double>& p) { return !p || *p >= o.min_order; };
  const bool passed = ok(rep.order_estimate_mass) && ok(rep.order_estimate_momentum);
  json j = dp2::io::to_json(rep);
  j["passed"] = passed;
  j["config"] = echo.dump(g);
  dp2::io::write_json(fs::path(g.out) / "verify_report.json", j);

  auto show = [](const std::optional<double>& p) { return p ? fmt(*p) : std::string("NotApplicable"); };
  std::cout << "order_mass=" << show(rep.order_estimate_mass)
            << " order_momentum=" << show(rep.order_estimate_momentum)
            << " mass_linf=" << fmt(rep.mass_eq_linf) << " momentum_linf=" << fmt(rep.momentum_eq_linf)
            << (passed ? " PASS" : " FAIL") << '\n';
  return passed ? kExitOk : kExitVerifyFailed;
}

// --------------------------------------------------------------- riccati

struct RiccatiOpts {
  double M = 0.0, v0 = -2.0, dt = 1e-4, t_max = -1.0;

  void bind(CLI::App* app, Echo& e) {
    add(app, e, "M", M, "bound on |u(t, x0)|");
    add(app, e, "v0", v0, "initial slope u_x(x0, 0)");
    add(app, e, "dt", dt, "RK4 step for the comparison trajectory");
    add(app, e, "t-max", t_max, "trajectory horizon (< 0: automatic)");
  }
};

int cmd_riccati(const Globals& g, const RiccatiOpts& o, const Echo& echo) {
  const dp2::riccati::BlowupCriterion crit{o.M, o.v0};
  const auto out = dp2::riccati::check(crit);
  const auto traj = dp2::riccati::comparison_trajectory(
      crit, o.dt, o.t_max > 0.0 ? std::optional<double>(o.t_max) : std::nullopt);
  write_table(g, "riccati_trajectory", dp2::io::trajectory_table(traj));
  json j = dp2::io::to_json(crit, out);
  const auto esc = dp2::riccati::escape_time(traj);
  j["escape_time"] = esc ? json(*esc) : json(nullptr);
  j["config"] = echo.dump(g);
  dp2::io::write_json(fs::path(g.out) / "riccati.json", j);
  if (out.T)
    std::cout << "T=" << fmt(*out.T) << '\n';
  else
    std::cout << "Inconclusive (v0 >= -sqrt(3/2) M)\n";
  return kExitOk;
}

// ----------------------------------------------------------------- solve

struct SolveOpts {
  double k1 = 1.0, k2 = 1.0, k3 = 1.0;
  int n = 2048;
  double length = 2.0 * std::numbers::pi;
  double slope = -5.0, sigma = 0.5, rho_amp = 0.0, noise = 0.0;
  double m_est = 0.0, threshold = 1e3, t_max = 0.3, cfl = 0.3;
  bool dealias = true;
  std::string snapshots;

  void bind(CLI::App* app, Echo& e) {
    add(app, e, "k1", k1, "system constant k1");
    add(app, e, "k2", k2, "system constant k2 > 0");
    add(app, e, "k3", k3, "system constant k3");
    add(app, e, "n", n, "grid points (power of two)");
    add(app, e, "length", length, "period L");
    add(app, e, "slope", slope, "u0'(L/2) of the odd Gaussian-derivative data");
    add(app, e, "sigma", sigma, "Gaussian width");
    add(app, e, "rho-amp", rho_amp, "amplitude of odd density rho0 = A sin(4 pi x / L)");
    add(app, e, "noise", noise, "amplitude of a seeded odd perturbation of u0");
    add(app, e, "m-est", m_est, "bound on |u(t, L/2)| for the comparison estimate");
    add(app, e, "threshold", threshold, "blowup declared once min u_x < -threshold");
    add(app, e, "t-max", t_max, "final time");
    add(app, e, "cfl", cfl, "CFL number");
    add(app, e, "dealias", dealias, "2/3-rule truncation");
    add(app, e, "snapshots", snapshots, "comma-separated output times");
  }
};

// Odd about L/2 on the nodes: pairs (j, n - j) are antisymmetrized.
dp2::Field make_odd(const dp2::Grid1D& grid, const std::function<double(double)>& f) {
  const std::size_t n = grid.n();
  dp2::Field out(n);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = 0.5 * (f(grid.node(j)) - f(grid.node((n - j) % n)));
  return out;
}

int cmd_solve(const Globals& g, const SolveOpts& o, const Echo& echo) {
  dp2::detail::require(o.n > 0, dp2::Errc::InvalidArgument, "n", "n must be positive");
  dp2::detail::require(o.sigma > 0.0, dp2::Errc::InvalidArgument, "sigma", "sigma must be positive");
  const dp2::Grid1D grid(static_cast<std::size_t>(o.n), o.length);
  const double L = o.length;

  dp2::Field u0 = dp2::pde::odd_gaussian_derivative(grid, o.slope, o.sigma);
  if (o.noise != 0.0) {
    std::mt19937_64 rng(g.seed);
    std::normal_distribution<double> gauss;
    std::vector<double> c(8);
    for (double& v : c) v = gauss(rng);
    const auto pert = make_odd(grid, [&](double x) {
      double s = 0.0;
      for (std::size_t k = 0; k < c.size(); ++k)
        s += c[k] * std::sin(2.0 * std::numbers::pi * (k + 1) * (x - 0.5 * L) / L) / (k + 1);
      return s;
    });
    for (std::size_t j = 0; j < grid.n(); ++j) u0[j] += o.noise * pert[j];
  }
  const dp2::Field rho0 =
      make_odd(grid, [&](double x) { return o.rho_amp * std::sin(4.0 * std::numbers::pi * x / L); });

  dp2::pde::BlowupConfig cfg;
  cfg.grid = grid;
  cfg.params = {o.k1, o.k2, o.k3};
  cfg.rho0 = rho0;
  cfg.u0 = u0;
  cfg.x0 = 0.5 * L;
  cfg.m_est = o.m_est;
  cfg.threshold = o.threshold;
  cfg.t_max = o.t_max;
  cfg.options.cfl = o.cfl;
  cfg.options.dealias = o.dealias;
  cfg.snapshot_times = parse_list(o.snapshots, "snapshots");
  const auto rep = dp2::pde::run_blowup_experiment(cfg);

  write_table(g, "solve_diagnostics", dp2::io::diagnostics_table(rep.series));
  json snaps = json::array();
  for (std::size_t i = 0; i < rep.snapshots.size(); ++i) {
    const auto& s = rep.snapshots[i];
    dp2::io::Table tab{{"x", "rho", "u"}, {}};
    for (std::size_t j = 0; j < grid.n(); ++j) tab.add({grid.node(j), s.rho[j], s.u[j]});
    const std::string stem = "solve_snapshot_" + std::to_string(i);
    write_table(g, stem, tab);
    snaps.push_back({{"t", s.t}, {"file", stem + (g.format == "json" ? ".json" : ".csv")}});
  }

  json sum = {{"v0", rep.v0},
              {"T_bound", rep.bound.T ? json(*rep.bound.T) : json(nullptr)},
              {"crossing_time", rep.crossing_time ? json(*rep.crossing_time) : json(nullptr)},
              {"status", rep.blowup_detected() ? "BlowupDetected" : "NoBlowupDetected"},
              {"non_finite", rep.non_finite},
              {"max_parity", rep.max_parity},
              {"steps", rep.series.size() - 1},
              {"final_t", rep.final_state.t},
              {"snapshots", snaps},
              {"config", echo.dump(g)}};
  dp2::io::write_json(fs::path(g.out) / "solve_summary.json", sum);

  std::cout << "v0=" << fmt(rep.v0)
            << " T_bound=" << (rep.bound.T ? fmt(*rep.bound.T) : std::string("none"));
  if (rep.crossing_time)
    std::cout << " crossing_time=" << fmt(*rep.crossing_time) << '\n';
  else
    std::cout << " NoBlowupDetected t=" << fmt(rep.final_state.t) << '\n';
  if (rep.non_finite && !rep.crossing_time) {
    std::cerr << "error: NonFinite values before the threshold was reached\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ----------------------------------------------------------------- sweep

struct SweepOpts {
  EmdenOpts base;
  std::vector<std::string> grid;

  void bind(CLI::App* app, Echo& e) {
    base.s_max = 100.0;
    base.bind(app, e);
    app->add_option("--grid", grid, "axes name=lo:hi:count (xi, kappa, a0, a1)")->expected(1, -1);
    e.getters.emplace_back("grid", [this] { return json(grid); });
  }
};

struct Axis {
  std::string name;
  std::vector<double> values;
};

Axis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  dp2::detail::require(eq != std::string::npos, dp2::Errc::InvalidArgument, "grid",
                       "grid axis must look like name=lo:hi:count, got '" + text + "'");
  Axis ax{text.substr(0, eq), {}};
  static const std::set<std::string> known{"xi", "kappa", "a0", "a1"};
  dp2::detail::require(known.count(ax.name) > 0, dp2::Errc::InvalidArgument, "grid",
                       "unknown sweep axis '" + ax.name + "'");
  std::string rest = text.substr(eq + 1);
  std::replace(rest.begin(), rest.end(), ':', ',');
  const auto parts = parse_list(rest, "grid");
  dp2::detail::require(parts.size() == 3 && parts[2] >= 1 && parts[2] == std::floor(parts[2]),
                       dp2::Errc::InvalidArgument, "grid",
                       "grid axis must look like name=lo:hi:count, got '" + text + "'");
  const int count = static_cast<int>(parts[2]);
  for (int i = 0; i < count; ++i)
    ax.values.push_back(count == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * i / (count - 1));
  return ax;
}

int cmd_sweep(const Globals& g, const SweepOpts& o, const Echo& echo) {
  std::vector<Axis> axes;
  for (const auto& s : o.grid) axes.push_back(parse_axis(s));
  dp2::detail::require(!axes.empty(), dp2::Errc::InvalidArgument, "grid", "no sweep axes");

  std::vector<std::string> header;
  for (const auto& a : axes) header.push_back(a.name);
  for (const char* h : {"fate", "S", "energy_drift_max", "classification"}) header.push_back(h);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> idx(axes.size(), 0);
  while (true) {
    EmdenOpts run = o.base;
    std::vector<std::string> row;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const double v = axes[a].values[idx[a]];
      if (axes[a].name == "xi") run.xi = v;
      if (axes[a].name == "kappa") run.kappa = v;
      if (axes[a].name == "a0") run.a0 = v;
      if (axes[a].name == "a1") run.a1 = v;
      row.push_back(fmt(v));
    }
    try {
      const auto traj = dp2::emden::integrate(run.problem(), run.tol);
      row.emplace_back(dp2::emden::to_string(traj.fate().kind));
      row.push_back(fmt(traj.fate().S));
      row.push_back(fmt(traj.energy_drift_max()));
    } catch (const dp2::Error& e) {
      if (e.is_validation()) throw;
      row.push_back(std::string("Error:") + std::string(dp2::to_string(e.code())));
      row.push_back("nan");
      row.push_back("nan");
    }
    row.push_back(run.kappa > 0.0 && run.kappa <= 1.0
                      ? std::string(dp2::emden::to_string(dp2::emden::classify(run.problem())))
                      : std::string("Unsupported"));
    rows.push_back(std::move(row));

    // Odometer: last axis varies fastest.
    std::size_t a = axes.size();
    for (; a > 0; --a) {
      if (++idx[a - 1] < axes[a - 1].values.size()) break;
      idx[a - 1] = 0;
    }
    if (a == 0) break;
  }

  if (g.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json rec;
      for (std::size_t i = 0; i < header.size(); ++i) rec[header[i]] = r[i];
      arr.push_back(rec);
    }
    dp2::io::write_json(fs::path(g.out) / "sweep.json", arr);
  } else {
    std::string csv;
    for (std::size_t i = 0; i < header.size(); ++i) csv += (i ? "," : "") + header[i];
    csv += '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) csv += (i ? "," : "") + r[i];
      csv += '\n';
    }
    dp2::io::write_text(fs::path(g.out) / "sweep.csv", csv);
  }
  dp2::io::write_json(fs::path(g.out) / "sweep_summary.json",
                      {{"rows", rows.size()}, {"config", echo.dump(g)}});
  std::cout << "rows=" << rows.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- config

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number()) return fmt(v.get<double>());
  throw dp2::Error(dp2::Errc::InvalidArgument, "config", "unsupported config value " + v.dump());
}

// Key -> argument tokens. JSON files may hold the entries under "config".
std::vector<std::pair<std::string, std::vector<std::string>>> read_config(const std::string& path) {
  std::ifstream is(path);
  dp2::detail::require(static_cast<bool>(is), dp2::Errc::InvalidArgument, "config",
                       "cannot read config file " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  std::vector<std::pair<std::string, std::vector<std::string>>> out;

  if (trim(text).rfind('{', 0) == 0) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw dp2::Error(dp2::Errc::InvalidArgument, "config", std::string("bad JSON: ") + e.what());
    }
    const json& cfg = j.contains("config") ? j.at("config") : j;
    dp2::detail::require(cfg.is_object(), dp2::Errc::InvalidArgument, "config",
                         "config must be a JSON object");
    for (const auto& [k, v] : cfg.items()) {
      if (v.is_null()) continue;
      std::vector<std::string> vals;
      if (v.is_array())
        for (const auto& e : v) vals.push_back(scalar_text(e));
      else
        vals.push_back(scalar_text(v));
      out.emplace_back(k, vals);
    }
    return out;
  }

  std::istringstream lines(text);
  std::string line;
  int no = 0;
  while (std::getline(lines, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    dp2::detail::require(eq != std::string::npos, dp2::Errc::InvalidArgument, "config",
                         path + ":" + std::to_string(no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::istringstream vs(line.substr(eq + 1));
    std::vector<std::string> vals;
    for (std::string tok; vs >> tok;) vals.push_back(tok);
    out.emplace_back(key, vals);
  }
  return out;
}

std::string option_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-similar solutions, residual checks and blowup experiments for the "
               "two-component Degasperis-Procesi system"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  Echo echo_emden, echo_selfsim, echo_verify, echo_riccati, echo_solve, echo_sweep;
  app.add_option("--out", g.out, "output directory")->capture_default_str()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", g.config, "key = value file or JSON summary with a config object");
  app.add_option("--seed", g.seed, "random seed")->capture_default_str()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--format", g.format, "tabular output format")
      ->check(CLI::IsMember({"csv", "json"}))->capture_default_str()
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  EmdenOpts emden;
  SelfSimOpts selfsim;
  VerifyOpts verify;
  RiccatiOpts riccati;
  SolveOpts solve;
  SweepOpts sweep;

  auto* c_emden = app.add_subcommand("emden", "integrate the Emden equation for a(s)");
  emden.bind(c_emden, echo_emden);
  auto* c_selfsim = app.add_subcommand("selfsim", "sample a self-similar solution");
  selfsim.bind(c_selfsim, echo_selfsim);
  add(c_selfsim, echo_selfsim, "times", selfsim.times, "comma-separated output times");
  add(c_selfsim, echo_selfsim, "x-max", selfsim.x_max, "half-width of the x window (0: auto)");
  add(c_selfsim, echo_selfsim, "nx", selfsim.nx, "points per snapshot");
  add(c_selfsim, echo_selfsim, "mass-samples", selfsim.mass_samples, "rows of the mass table");
  auto* c_verify = app.add_subcommand("verify", "residual convergence study of a self-similar solution");
  verify.bind(c_verify, echo_verify);
  auto* c_riccati = app.add_subcommand("riccati", "slope blowup bound from the comparison equation");
  riccati.bind(c_riccati, echo_riccati);
  auto* c_solve = app.add_subcommand("solve", "pseudo-spectral blowup experiment with odd data");
  solve.bind(c_solve, echo_solve);
  auto* c_sweep = app.add_subcommand("sweep", "Emden fates over a parameter grid");
  sweep.bind(c_sweep, echo_sweep);

  // Rebuild argv with the config entries inserted ahead of the user's flags.
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  std::size_t sub_at = kept.size();
  std::set<std::string> given;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const std::string& a = kept[i];
    if (a.rfind("--", 0) == 0) {
      given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
      if (sub_at == kept.size() && a.find('=') == std::string::npos &&
          (a == "--out" || a == "--seed" || a == "--format"))
        ++i;
    } else if (sub_at == kept.size() && app.get_subcommand_no_throw(a) != nullptr) {
      sub_at = i;
    }
  }

  std::vector<std::string> final_args{argv[0]};
  try {
    std::vector<std::string> global_inj, sub_inj;
    if (!config_path.empty()) {
      dp2::detail::require(sub_at < kept.size(), dp2::Errc::InvalidArgument, "config",
                           "--config needs a subcommand");
      CLI::App* sub = app.get_subcommand(kept[sub_at]);
      for (const auto& [key, vals] : read_config(config_path)) {
        const std::string name = option_name(key);
        std::vector<std::string>* dest = nullptr;
        if (sub->get_option_no_throw("--" + name) != nullptr)
          dest = &sub_inj;
        else if (name != "config" && app.get_option_no_throw("--" + name) != nullptr)
          dest = &global_inj;
        dp2::detail::require(dest != nullptr, dp2::Errc::InvalidArgument, key,
                             "unknown config key '" + key + "' for " + kept[sub_at]);
        if (given.count(name)) continue;  // flags win
        dest->push_back("--" + name);
        for (const auto& v : vals) dest->push_back(v);
      }
    }
    final_args.insert(final_args.end(), global_inj.begin(), global_inj.end());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      final_args.push_back(kept[i]);
      if (i == sub_at) final_args.insert(final_args.end(), sub_inj.begin(), sub_inj.end());
    }
  } catch (const dp2::Error& e) {
    std::cerr << "error [" << e.key() << "]: " << e.what() << '\n';
    return kExitValidation;
  }

  std::vector<char*> cargv;
  for (auto& s : final_args) cargv.push_back(s.data());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*c_emden) return cmd_emden(g, emden, echo_emden);
    if (*c_selfsim) return cmd_selfsim(g, selfsim, echo_selfsim);
    if (*c_verify) return cmd_verify(g, verify, echo_verify);
    if (*c_riccati) return cmd_riccati(g, riccati, echo_riccati);
    if (*c_solve) return cmd_solve(g, solve, echo_solve);
    if (*c_sweep) return cmd_sweep(g, sweep, echo_sweep);
  } catch (const dp2::Error& e) {
    std::cerr << "error [" << e.key() << "]: " << e.what() << '\n';
    return e.is_validation() ? kExitValidation : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
