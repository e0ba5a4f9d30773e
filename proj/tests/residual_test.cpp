#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "dp2/residual.hpp"
#include "dp2/selfsim.hpp"

namespace {

using namespace dp2;
using namespace dp2::residual;

const SystemParams kUnit{1.0, 1.0, 1.0};

SelfSimilarSolution branch_global() {
  return SelfSimilarSolution::compact(kUnit, 1.0, 1.0, {1.0, 0.0, 4.0});
}

SelfSimilarSolution branch_blowup() {
  return SelfSimilarSolution::compact({1.0, 1.0, -1.0}, -1.0, 1.0, {1.0, 0.0, 10.0});
}

StudyConfig support_study(const SelfSimilarSolution& sol, double t, std::size_t n_nodes) {
  const Interval sup = sol.support(t);
  return {t, uniform_nodes(sup.lo, sup.hi, n_nodes), sup, std::nullopt,
          refinement_sequence(8e-3, 2.0, 4, 0.1)};
}

TEST(ResidualOperators, ConstantStateIsStationary) {
  auto s = [](double, double) { return FieldValue{0.7, 0.0}; };
  const std::vector<double> xs{-1.0, 0.0, 0.3, 2.0};
  for (double r : mass_equation_residual(s, kUnit, 0.5, xs, 1e-3, 1e-4)) EXPECT_EQ(r, 0.0);
  for (double r : momentum_equation_residual(s, kUnit, 0.5, xs, 1e-3, 1e-4)) EXPECT_EQ(r, 0.0);
}

TEST(ResidualOperators, LinearVelocityLeavesConvectiveTerm) {
  const double c = 1.7;
  auto s = [c](double, double x) { return FieldValue{0.0, c * x}; };
  const std::vector<double> xs{-1.0, -0.25, 0.0, 0.5, 3.0};
  for (double k3 : {-2.0, 0.0, 5.0}) {
    const auto r2 = momentum_equation_residual(s, {1.0, 1.0, k3}, 0.0, xs, 1e-2, 1e-3);
    for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(r2[i], 4.0 * c * c * xs[i], 1e-8);
  }
}

TEST(ResidualOperators, DensityOnlyMomentumTermIsOdd) {
  const double k3 = 2.5;
  auto rho = [](double x) { return std::exp(-x * x); };
  auto s = [&](double, double x) { return FieldValue{rho(x), 0.0}; };
  const std::vector<double> xs{0.1, 0.4, 0.9, 1.7};
  std::vector<double> both = xs;
  for (double x : xs) both.push_back(-x);
  const auto r2 = momentum_equation_residual(s, {1.0, 1.0, k3}, 0.0, both, 1e-4, 1e-4);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(r2[i] + r2[i + xs.size()], 0.0, 1e-12);
    const double x = xs[i];
    EXPECT_NEAR(r2[i], k3 * rho(x) * (-2.0 * x * rho(x)), 1e-7);
  }
}

TEST(ResidualOperators, SelfSimilarInteriorIsSmall) {
  const auto sol = branch_global();
  const double t = 0.1;
  const Interval sup = sol.support(t);
  const double band = 0.04;
  const auto xs = uniform_nodes(sup.lo + band, sup.hi - band, 401);
  EXPECT_LT(linf(mass_equation_residual(sol, kUnit, t, xs, 1e-3, 1e-4)), 1e-4);
  EXPECT_LT(linf(momentum_equation_residual(sol, kUnit, t, xs, 1e-3, 1e-4)), 1e-3);
}

TEST(ResidualOperators, HalvingStepsQuartersMassResidual) {
  const auto sol = branch_global();
  const double t = 0.1;
  const Interval sup = sol.support(t);
  const auto xs = uniform_nodes(sup.lo + 0.04, sup.hi - 0.04, 401);
  const double coarse = linf(mass_equation_residual(sol, kUnit, t, xs, 2e-3, 2e-4));
  const double fine = linf(mass_equation_residual(sol, kUnit, t, xs, 1e-3, 1e-4));
  EXPECT_GE(coarse / fine, 3.2);
  EXPECT_LE(coarse / fine, 5.0);
}

TEST(ConvergenceStudy, SecondOrderOnBothBranches) {
  for (const auto& [sol, params] :
       std::vector<std::pair<SelfSimilarSolution, SystemParams>>{
           {branch_global(), kUnit}, {branch_blowup(), {1.0, 1.0, -1.0}}}) {
    const auto rep = convergence_study(sol, params, support_study(sol, 0.1, 401));
    ASSERT_TRUE(rep.order_estimate_mass && rep.order_estimate_momentum);
    EXPECT_NEAR(*rep.order_estimate_mass, 2.0, 0.3);
    EXPECT_NEAR(*rep.order_estimate_momentum, 2.0, 0.3);
    EXPECT_DOUBLE_EQ(rep.interior_band, 0.04);
    EXPECT_DOUBLE_EQ(rep.grid_h, 1e-3);
    EXPECT_EQ(rep.levels.size(), 4u);
    EXPECT_GT(rep.interior_points, 300u);
  }
}

TEST(ConvergenceStudy, IncludingTheEdgeDestroysTheOrder) {
  const auto sol = branch_global();
  auto cfg = support_study(sol, 0.1, 20001);
  cfg.band = 0.0;
  const auto rep = convergence_study(sol, kUnit, cfg);
  ASSERT_TRUE(rep.order_estimate_mass && rep.order_estimate_momentum);
  EXPECT_LT(std::min(*rep.order_estimate_mass, *rep.order_estimate_momentum), 1.0);
}

TEST(ConvergenceStudy, NeedsThreeGrids) {
  auto s = [](double, double) { return FieldValue{1.0, 0.0}; };
  StudyConfig cfg{0.0, {0.0}, {-1.0, 1.0}, 0.1, refinement_sequence(1e-2, 2.0, 2, 0.1)};
  try {
    convergence_study(s, kUnit, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InsufficientGrids);
  }
  cfg.levels = {{1e-2, 1e-3}, {5e-3, 5e-4}, {1e-3, 1e-4}};
  EXPECT_THROW(convergence_study(s, kUnit, cfg), Error);
}

TEST(ConvergenceStudy, ExactStateHasNoOrder) {
  auto s = [](double, double) { return FieldValue{1.0, 0.0}; };
  StudyConfig cfg{0.0, uniform_nodes(-0.5, 0.5, 11), {-1.0, 1.0}, 0.1,
                  refinement_sequence(1e-2, 2.0, 3, 0.1)};
  const auto rep = convergence_study(s, kUnit, cfg);
  EXPECT_FALSE(rep.order_estimate_mass.has_value());
  EXPECT_FALSE(rep.order_estimate_momentum.has_value());
}

TEST(ResidualProperties, PerturbationResponseIsLinear) {
  const auto sol = branch_global();
  const double t = 0.1;
  const auto xs = uniform_nodes(-0.5, 0.5, 51);
  auto delta = [&](double eps, double h) {
    // Grid-scale oscillation: the centred difference of sin(pi x / (2h)) is cos(.)/h.
    auto noisy = [&, eps, h](double tt, double x) {
      FieldValue v = sol(tt, x);
      v.rho += eps * std::sin(std::numbers::pi * x / (2.0 * h));
      return v;
    };
    const auto b = mass_equation_residual(sol, kUnit, t, xs, h, 1e-3);
    const auto r = mass_equation_residual(noisy, kUnit, t, xs, h, 1e-3);
    double m = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) m = std::max(m, std::abs(r[i] - b[i]));
    return m;
  };
  const double d1 = delta(1e-6, 1e-2), d2 = delta(2e-6, 1e-2), d3 = delta(1e-6, 5e-3);
  EXPECT_NEAR(d2 / d1, 2.0, 1e-3);
  EXPECT_NEAR(d3 / d1, 2.0, 0.2);
}

TEST(ResidualProperties, ParityOfSymmetricSolution) {
  const auto sol = branch_global();
  const double t = 0.2;
  std::vector<double> xs = uniform_nodes(0.05, 0.8, 16);
  const std::size_t n = xs.size();
  for (std::size_t i = 0; i < n; ++i) xs.push_back(-xs[i]);
  const auto r1 = mass_equation_residual(sol, kUnit, t, xs, 2e-3, 2e-4);
  const auto r2 = momentum_equation_residual(sol, kUnit, t, xs, 2e-3, 2e-4);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(r1[i], r1[i + n], 1e-9);   // even
    EXPECT_NEAR(r2[i], -r2[i + n], 1e-9);  // odd
  }
}

TEST(ResidualHelpers, FitOrderRecoversPowerLaw) {
  const std::vector<double> hs{0.1, 0.05, 0.025};
  const std::vector<double> ns{3.0 * 0.01, 3.0 * 0.0025, 3.0 * 0.000625};
  EXPECT_NEAR(*fit_order(hs, ns), 2.0, 1e-12);
  EXPECT_FALSE(fit_order(hs, std::vector<double>{0.0, 1e-14, 0.0}).has_value());
}

}  // namespace
