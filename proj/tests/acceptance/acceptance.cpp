// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "dp2/dp2.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dp2;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTol = 1e-11;

struct Result {
  bool ok = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Touchdown time from energy conservation, computed here without the library.
// V(a) with a'' = -V'(a). The energy level fixes a turning point a_top with
// V(a_top) = V(a0) + a1^2 / 2; the path is a fall from rest at a_top, entered
// above a0 when a1 > 0 and below it when a1 < 0.
struct EnergyOracle {
  double xi, kappa, mu, a0, a1;

  double V(double a) const {
    if (kappa == 1.0) return -(xi / mu) * std::log(a);
    return -xi * std::pow(a, 1.0 - kappa) / (mu * (1.0 - kappa));
  }

  double a_top() const {
    const double lift = 0.5 * a1 * a1;
    if (kappa == 1.0) return a0 * std::exp(lift * mu / -xi);
    const double q = 1.0 - kappa;
    return std::pow(std::pow(a0, q) + lift * mu * q / -xi, 1.0 / q);
  }

  // Time to fall from rest at top down to level b; a = top - w^2 removes the
  // inverse square root at the turning point.
  double fall(double top, double b) const {
    const double Vtop = V(top);
    auto g = [&](double w) {
      if (w == 0.0) {
        const double dV = -xi / (mu * std::pow(top, kappa));
        return 2.0 / std::sqrt(2.0 * dV);
      }
      const double a = top - w * w;
      if (a <= 0.0) return 0.0;
      return 2.0 * w / std::sqrt(2.0 * (Vtop - V(a)));
    };
    return oracle::simpson(g, 0.0, std::sqrt(top - b), 1e-10, 30);
  }

  double S() const {
    const double top = a_top();
    if (a1 == 0.0) return fall(top, 0.0);
    return fall(top, 0.0) + (a1 > 0.0 ? 1.0 : -1.0) * fall(top, a0);
  }
};

Result energy_conservation() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> kappa(0.0, 1.0), xi(-2.0, 2.0), a0(0.5, 2.0),
      a1(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    double k = kappa(rng);
    if (k == 0.0) k = 1.0;  // keep kappa in (0, 1]
    const emden::Problem p{xi(rng), k, 4.0, a0(rng), a1(rng), 8.0};
    const auto traj = emden::integrate(p, kTol);
    const EnergyOracle o{p.xi, p.kappa, p.mu, p.a0, p.a1};
    const double E0 = 0.5 * p.a1 * p.a1 + o.V(p.a0);
    const double norm = std::max(1.0, std::abs(E0));
    double drift = traj.energy_drift_max();
    for (const auto& s : traj.samples())
      drift = std::max(drift, std::abs(0.5 * s.a_dot * s.a_dot + o.V(s.a) - E0) / norm);
    worst = std::max(worst, drift);
  }
  return {worst < 1e-8, "max relative drift " + sci(worst) + " over 50 problems (< 1e-8)"};
}

Result touchdown_oracle() {
  const auto canon = emden::integrate({-1.0, 0.5, 4.0, 1.0, 0.0, 10.0}, kTol);
  const double S_canon = canon.fate().S;
  double worst_canon = std::abs(S_canon - 8.0 / 3.0) / (8.0 / 3.0);
  worst_canon = std::max(worst_canon,
                         std::abs(S_canon - EnergyOracle{-1.0, 0.5, 4.0, 1.0, 0.0}.S()) / S_canon);

  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> kappa(0.05, 1.0), xi(-2.0, -0.1), a0(0.5, 2.0),
      a1(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    emden::Problem p{xi(rng), kappa(rng), 4.0, a0(rng), a1(rng), 1e3};
    if (i % 4 == 0) p.kappa = 1.0;
    const auto traj = emden::integrate(p, kTol);
    if (traj.fate().kind != emden::FateKind::TouchdownAt)
      return {false, "case " + std::to_string(i) + " did not touch down"};
    const double S_ref = EnergyOracle{p.xi, p.kappa, p.mu, p.a0, p.a1}.S();
    worst = std::max(worst, std::abs(traj.fate().S - S_ref) / S_ref);
  }
  return {worst_canon < 1e-4 && worst < 1e-4,
          "canonical S=" + std::to_string(S_canon) + " rel err " + sci(worst_canon) +
              ", 20 random cases max rel err " + sci(worst) + " (< 1e-4)"};
}

Result classification_dichotomy() {
  int agree = 0, total = 0;
  std::string first_bad;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double xi = -2.0 + 4.0 * i / 9.0;  // never 0 on this lattice
      const double kappa = 0.1 * (j + 1);
      const emden::Problem p{xi, kappa, 4.0, 1.0, 0.0, 50.0};
      const auto fate = emden::integrate(p, kTol).fate().kind;
      const auto cls = emden::classify(p);
      const bool match = (cls == emden::Classification::BlowupFiniteTime) ==
                         (fate == emden::FateKind::TouchdownAt);
      ++total;
      if (match)
        ++agree;
      else if (first_bad.empty())
        first_bad = " first mismatch xi=" + std::to_string(xi) + " kappa=" + std::to_string(kappa);
    }
  }
  return {agree == total, std::to_string(agree) + "/" + std::to_string(total) + " agree" + first_bad};
}

Result profile_correctness() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ab(0.3, 3.0), frac(-0.8, 0.8);
  double lo = 1e9, hi = -1e9, worst_mass = 0.0;
  for (int c = 0; c < 10; ++c) {
    const Profile p(ab(rng), ab(rng));
    const double eta = frac(rng) * p.half_width();
    const double h0 = 0.02 * p.half_width();
    std::vector<double> hs, rs;
    for (int k = 0; k < 4; ++k) {
      hs.push_back(h0 / std::pow(2.0, k));
      rs.push_back(std::abs(ode_residual_f(p, eta, hs.back())));
    }
    const auto order = residual::fit_order(hs, rs);
    if (!order) return {false, "no measurable order in case " + std::to_string(c)};
    lo = std::min(lo, *order);
    hi = std::max(hi, *order);

    // Quadrature of the closed form, with eta = w sin(theta) to absorb the edge.
    const double w = p.half_width();
    const double quad = oracle::simpson(
        [&](double th) {
          const double e = w * std::sin(th);
          return std::sqrt(std::max(0.0, p.alpha() * p.alpha() - p.beta() * e * e)) * w *
                 std::cos(th);
        },
        -kPi / 2, kPi / 2, 1e-13);
    worst_mass = std::max(worst_mass, std::abs(mass_eta(p) - quad) / quad);
  }
  return {lo >= 1.7 && hi <= 2.3 && worst_mass < 1e-6,
          "order in [" + std::to_string(lo) + ", " + std::to_string(hi) +
              "], mass max rel err " + sci(worst_mass)};
}

Result residual_orders() {
  struct Branch {
    const char* name;
    SystemParams params;
    double xi;
    double s_max;
  };
  std::ostringstream msg;
  bool ok = true;
  for (const Branch& b : {Branch{"global", {1.0, 1.0, 1.0}, 1.0, 4.0},
                          Branch{"blowup", {1.0, 1.0, -1.0}, -1.0, 10.0}}) {
    const auto sol = SelfSimilarSolution::compact(b.params, b.xi, 1.0, {1.0, 0.0, b.s_max});
    const double t = 0.1;
    const Interval sup = sol.support(t);
    residual::StudyConfig cfg{t, residual::uniform_nodes(sup.lo, sup.hi, 401), sup, std::nullopt,
                              residual::refinement_sequence(8e-3, 2.0, 4, 0.1)};
    const auto rep = residual::convergence_study(sol, b.params, cfg);
    const double pm = rep.order_estimate_mass.value_or(NAN);
    const double pu = rep.order_estimate_momentum.value_or(NAN);
    ok = ok && pm >= 1.7 && pm <= 2.3 && pu >= 1.7 && pu <= 2.3;

    cfg.nodes = residual::uniform_nodes(sup.lo, sup.hi, 20001);
    cfg.band = 0.0;
    const auto edge = residual::convergence_study(sol, b.params, cfg);
    const double worst_edge = std::min(edge.order_estimate_mass.value_or(NAN),
                                       edge.order_estimate_momentum.value_or(NAN));
    ok = ok && worst_edge < 1.0;
    msg << b.name << ": orders " << pm << ", " << pu << " with band " << rep.interior_band
        << "; band 0 order " << worst_edge << ". ";
  }
  return {ok, msg.str()};
}

Result mass_scaling() {
  double worst = 0.0;
  for (auto [k1, k2] : std::vector<std::pair<double, double>>{{1, 1}, {0, 1}, {2, 0.5}}) {
    const auto sol = SelfSimilarSolution::compact({k1, k2, 1.0}, 1.0, 1.0, {1.0, 0.2, 4.0});
    const double m0 = 0.5 * kPi;  // alpha = 1, beta = 1
    for (int i = 0; i < 10; ++i) {
      const double t = 0.09 * (i + 1);
      const double a = sol.scale(t).a;
      worst = std::max(worst, std::abs(sol.mass(t) * std::pow(a, k1 / 4.0) - m0) / m0);
    }
  }
  return {worst < 1e-6, "max rel deviation " + sci(worst) + " (< 1e-6)"};
}

Result origin_density() {
  const auto blow = SelfSimilarSolution::compact({1.0, 1.0, -1.0}, -1.0, 1.0, {1.0, 0.0, 10.0});
  const auto lim = blow.origin_density_limit();
  const double T_ref = EnergyOracle{-1.0, 0.5, 4.0, 1.0, 0.0}.S() / 4.0;
  const double rho00 = blow(0.0, 0.0).rho;
  double peak = 0.0;
  for (auto [t, rho] : lim.series)
    if (T_ref - t < 1e-6 && t < T_ref) peak = std::max(peak, rho / rho00);
  // Direct evaluation just below T as well.
  peak = std::max(peak, blow(T_ref - 5e-7, 0.0).rho / rho00);
  const bool diverges = lim.kind == OriginLimitKind::DivergesAtT &&
                        std::abs(lim.T - T_ref) < 1e-6 && peak > 1e3;

  const auto glob = SelfSimilarSolution::compact({1.0, 1.0, 1.0}, 1.0, 1.0, {1.0, 0.0, 40.0});
  bool decreasing = true;
  double prev = INFINITY;
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    const double rho = glob(glob.t_limit() * i / n, 0.0).rho;
    decreasing = decreasing && rho < prev;
    prev = rho;
  }
  return {diverges && decreasing,
          "rho(t,0)/rho(0,0) reaches " + sci(peak) + " within 1e-6 of T=" + std::to_string(T_ref) +
              "; global branch strictly decreasing: " + (decreasing ? "yes" : "no")};
}

Result riccati_bound() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double M = 0.25 * i;
      const double v0 = -(std::sqrt(1.5) * M + 0.5 + 0.5 * j);
      const auto T = riccati::check({M, v0}).T;
      if (!T) return {false, "no bound for M=" + std::to_string(M)};
      const auto esc = riccati::escape_time(riccati::comparison_trajectory({M, v0}, 1e-5));
      if (!esc) return {false, "RK4 did not escape for M=" + std::to_string(M)};
      worst = std::max(worst, std::abs(*esc - *T) / *T);
    }
  }
  const double T0 = *riccati::check({0.0, -2.0}).T;
  const double Tsmall = *riccati::check({1e-4, -2.0}).T;
  const double cont = std::abs(Tsmall - T0);
  return {worst < 1e-3 && cont < 1e-3,
          "max rel gap " + sci(worst) + " on 100 points, |T(1e-4) - T(0)| = " + sci(cont)};
}

Result helmholtz() {
  double worst_mode = 0.0;
  for (double L : {2.0 * kPi, 3.0, 10.0}) {
    const Grid1D g(64, L);
    for (int m : {0, 1, 5, 20}) {
      const double w = 2.0 * kPi * m / L;
      const Field in = g.sample([&](double x) { return std::cos(w * x); });
      const Field out = helmholtz_inverse(g, in);
      for (std::size_t j = 0; j < g.n(); ++j)
        worst_mode = std::max(worst_mode, std::abs(out[j] - in[j] / (1.0 + w * w)));
    }
  }
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  double worst_quad = 0.0;
  for (double L : {2.0 * kPi, 5.0}) {
    std::vector<double> a(12), b(12);
    for (auto& v : a) v = gauss(rng);
    for (auto& v : b) v = gauss(rng);
    auto f = [&](double x) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k)
        s += a[k] * std::cos(2.0 * kPi * k * x / L) + b[k] * std::sin(2.0 * kPi * k * x / L);
      return s;
    };
    const Grid1D g(128, L);
    const Field out = helmholtz_inverse(g, g.sample(f));
    for (std::size_t j = 0; j < g.n(); ++j)
      worst_quad = std::max(worst_quad, std::abs(out[j] - oracle::green_convolution(f, g.node(j), L)));
  }
  return {worst_mode < 1e-14 && worst_quad < 1e-8,
          "single-mode error " + sci(worst_mode) + ", kernel quadrature error " + sci(worst_quad)};
}

Result odd_blowup() {
  auto run = [](std::size_t n) {
    pde::BlowupConfig cfg;
    cfg.grid = Grid1D(n, 2.0 * kPi);
    cfg.params = {1.0, 1.0, 1.0};
    cfg.rho0 = Field(n, 0.0);
    cfg.u0 = pde::odd_gaussian_derivative(cfg.grid, -5.0, 0.5);
    cfg.x0 = kPi;
    cfg.m_est = 0.0;
    cfg.threshold = 1e3;
    cfg.t_max = 0.24;
    return pde::run_blowup_experiment(cfg);
  };
  const auto coarse = run(8192);
  const auto fine = run(16384);
  if (!coarse.crossing_time || !fine.crossing_time)
    return {false, "min u_x did not cross -1e3 by t = 0.24"};
  const double change = std::abs(*fine.crossing_time - *coarse.crossing_time) / *coarse.crossing_time;
  const double parity = std::max(coarse.max_parity, fine.max_parity);
  const bool ok = *coarse.crossing_time <= 0.24 && *fine.crossing_time <= 0.24 && change < 0.02 &&
                  parity < 1e-10 && std::abs(coarse.v0 + 5.0) < 1e-6;
  return {ok, "crossing " + std::to_string(*coarse.crossing_time) + " (n=8192), " +
                  std::to_string(*fine.crossing_time) + " (n=16384), change " + sci(change) +
                  ", max parity " + sci(parity)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Result determinism() {
  const fs::path root = fs::temp_directory_path() / ("dp2_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> commands{
      "emden --xi -1 --kappa 0.5",
      "solve --n 256 --slope -3 --noise 0.2 --rho-amp 0.05 --t-max 0.05 --snapshots 0,0.05",
      "sweep --grid xi=-2:-0.5:4 kappa=0.25:1:4",
      "selfsim --times 0,0.1,0.2 --xi -1 --k3 -1 --s-max 10",
      "riccati --M 1 --v0 -2",
  };
  for (const char* run : {"a", "b"}) {
    for (const auto& c : commands) {
      const std::string cmd = std::string("\"") + DP2_CLI_PATH + "\" --seed 42 --out \"" +
                              (root / run).string() + "\" " + c + " > /dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + c};
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "a")) {
    const fs::path other = root / "b" / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other))
      return {false, "outputs differ: " + e.path().filename().string()};
    ++files;
  }
  std::size_t files_b = std::distance(fs::directory_iterator(root / "b"), fs::directory_iterator());
  fs::remove_all(root);
  return {files > 0 && files == files_b,
          std::to_string(files) + " files byte-identical across two runs with --seed 42"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"Emden energy conservation", energy_conservation},
      {"Touchdown time vs energy quadrature", touchdown_oracle},
      {"Classification agrees with integrated fate", classification_dichotomy},
      {"Profile residual order and mass", profile_correctness},
      {"Self-similar residual convergence", residual_orders},
      {"Mass scaling law", mass_scaling},
      {"Origin density limits", origin_density},
      {"Riccati bound vs RK4 escape", riccati_bound},
      {"Helmholtz inverse", helmholtz},
      {"Odd-data blowup experiment", odd_blowup},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!r.ok) ++failures;
    std::printf("%s %2zu %s: %s [%.1fs]\n", r.ok ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), r.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
