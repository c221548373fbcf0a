#include <cmath>

#include <gtest/gtest.h>

#include "dirichlet_fixtures.hpp"
#include "khessian/dirichlet.hpp"
#include "oracle_values.hpp"

using namespace khessian;

namespace {

double max_diff(const std::vector<double> &a, const std::vector<double> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

} // namespace

TEST(ExplicitSubsolution, Examples) {
  const ProblemSpec s(3, 2, 2.0, 5.0);
  const auto sub = explicit_subsolution(s, Nonlinearity::constant(std::sqrt(3.0), 2));
  EXPECT_NEAR(sub.a, 1.0, 1e-15);
  EXPECT_NEAR(sub.value_at(0.0), 3.0, 1e-14);
  EXPECT_EQ(sub.value_at(2.0), 5.0);

  // g(u) = 2u so g(c) = 2 at c = 1.
  const auto s2 = explicit_subsolution(ProblemSpec(2, 1, 1.0, 1.0), Nonlinearity::power(1, 1, 2.0));
  EXPECT_NEAR(s2.a, 1.0, 1e-15);
  EXPECT_NEAR(s2.value_at(0.0), 0.5, 1e-15);
}

TEST(ExplicitSubsolution, NeedsBallAndDatum) {
  EXPECT_THROW(explicit_subsolution(ProblemSpec(3, 1), Nonlinearity::power(2, 1)), domain_error);
}

TEST(LaplaceSupersolution, Examples) {
  const ProblemSpec s(3, 1, 1.0, 2.0);
  const auto sup = laplace_supersolution(s, Nonlinearity::power(2, 1));
  EXPECT_GT(sup.beta, 0.0);
  EXPECT_TRUE(sup.radius.blows_up());
  EXPECT_GE(sup.radius.rho_low, 1.0);
  EXPECT_LE(sup.radius.rho_low, 1.0 + 1e-6);
  EXPECT_THROW(laplace_supersolution(s, Nonlinearity::power(1, 1)), no_explosive_solution);
}

TEST(LaplaceSupersolution, DominatesHessianSolution) {
  const ProblemSpec s(3, 2, 1.0, 10.0);
  const auto nl = Nonlinearity::power(2, 2);
  const auto sol = solve_shooting(s, nl);
  const auto sup = laplace_supersolution(s, nl);
  const auto grid = uniform_grid(1.0, 400);
  EXPECT_TRUE(comparison_check(grid, sol.sample(grid), grid, sup.sample(grid)));
}

TEST(Shooting, ConstantQuadratic) {
  const auto sol = solve_shooting(ProblemSpec(3, 2, 2.0, 5.0), Nonlinearity::constant(std::sqrt(3.0), 2));
  EXPECT_NEAR(sol.beta_star, 3.0, 1e-9);
  EXPECT_LE(sol.boundary_error, 1e-12 * 5.0);
}

TEST(Shooting, SinhProfile) {
  const auto sol = solve_shooting(ProblemSpec(3, 1, 1.0, 2.0), Nonlinearity::power(1, 1));
  EXPECT_NEAR(sol.beta_star, oracle::sinh_beta_star, 1e-8);
}

TEST(Shooting, OracleCentralValues) {
  EXPECT_NEAR(solve_shooting(ProblemSpec(4, 2, 1.0, 3.0), Nonlinearity::power(2, 2)).beta_star,
              oracle::beta_star_p2_k2_N4_c3, 1e-8);
  EXPECT_NEAR(solve_shooting(ProblemSpec(4, 2, 1.0, 3.0), Nonlinearity::power(3, 2)).beta_star,
              oracle::beta_star_p3_k2_N4_c3, 1e-8);
}

TEST(Shooting, CentralValueBelowDatum) {
  for (const auto &f : dirichlet_fixtures()) EXPECT_LT(solve_shooting(f.spec, f.nl).beta_star, f.spec.datum()) << f.name;
}

TEST(Shooting, Preconditions) {
  EXPECT_THROW(solve_shooting(ProblemSpec(3, 1, 1.0), Nonlinearity::power(2, 1)), domain_error);
  EXPECT_THROW(solve_shooting(ProblemSpec(3, 2, 1.0, 1.0), Nonlinearity::power(2, 1)), domain_error);
}

TEST(Monotone, ConstantSourceIsExactAfterOneStep) {
  const ProblemSpec s(3, 2, 2.0, 5.0);
  const auto [sol, trace] = solve_monotone(s, Nonlinearity::constant(std::sqrt(3.0), 2));
  ASSERT_GE(trace.snapshots.size(), 2u);
  std::vector<double> exact;
  for (double r : sol.r) exact.push_back(3.0 + r * r / 2.0);
  // Exact up to the march's discretization error.
  EXPECT_LE(max_diff(trace.snapshots[1], exact), 1e-7);
  EXPECT_LE(sol.iterations, 2u);
}

TEST(Monotone, AgreesWithShootingOnFixtures) {
  for (const auto &f : dirichlet_fixtures()) {
    const auto sh = solve_shooting(f.spec, f.nl);
    const auto [mo, trace] = solve_monotone(f.spec, f.nl);
    EXPECT_LE(max_diff(mo.u, sh.sample(mo.r)), 1e-6) << f.name;
    EXPECT_EQ(trace.monotonicity_violations, 0u) << f.name;
    for (std::size_t j = 1; j < trace.snapshots.size(); ++j)
      for (std::size_t i = 0; i < mo.r.size(); ++i)
        ASSERT_GE(trace.snapshots[j][i], trace.snapshots[j - 1][i] - 1e-13 * f.spec.datum()) << f.name;
  }
}

TEST(Monotone, SecondOrderInTheGrid) {
  const auto &f = dirichlet_fixtures()[2];
  const auto sh = solve_shooting(f.spec, f.nl);
  MonotoneOptions coarse;
  coarse.grid_size = 128;
  coarse.keep_snapshots = false;
  MonotoneOptions fine = coarse;
  fine.grid_size = 512;
  const auto a = solve_monotone(f.spec, f.nl, coarse).first;
  const auto b = solve_monotone(f.spec, f.nl, fine).first;
  const double ea = max_diff(a.u, sh.sample(a.r));
  const double eb = max_diff(b.u, sh.sample(b.r));
  // C = e h^{-2} from the coarse level bounds the fine level.
  EXPECT_LE(eb, 2.0 * ea / 16.0 + 1e-9);
}

TEST(Monotone, UnshiftedIterationIsNotMonotone) {
  const auto &f = dirichlet_fixtures()[0];
  MonotoneOptions o;
  o.shifted = false;
  EXPECT_THROW(solve_monotone(f.spec, f.nl, o), iteration_failure);
  o.strict = false;
  o.max_iterations = 20;
  std::size_t violations = 0;
  try {
    violations = solve_monotone(f.spec, f.nl, o).second.monotonicity_violations;
  } catch (const iteration_failure &e) {
    violations = e.trace().monotonicity_violations;
  }
  EXPECT_GT(violations, 0u);
}

TEST(Monotone, Preconditions) {
  MonotoneOptions o;
  o.grid_size = 32;
  EXPECT_THROW(solve_monotone(ProblemSpec(3, 1, 1.0, 1.0), Nonlinearity::power(2, 1), o), domain_error);
}

TEST(Ordering, SubSolutionSuperChain) {
  for (const auto &f : dirichlet_fixtures()) {
    const auto sol = solve_shooting(f.spec, f.nl);
    const auto grid = uniform_grid(f.spec.radius(), 512);
    const auto u = sol.sample(grid);
    EXPECT_TRUE(comparison_check(grid, explicit_subsolution(f.spec, f.nl).sample(grid), grid, u)) << f.name;
    EXPECT_TRUE(comparison_check(grid, u, grid, laplace_supersolution(f.spec, f.nl).sample(grid))) << f.name;
  }
}

TEST(Ordering, BoundaryMonotonicity) {
  const auto nl = Nonlinearity::power(2, 2);
  const auto grid = uniform_grid(1.0, 256);
  std::vector<double> prev;
  for (double c : {0.5, 1.0, 2.0, 4.0}) {
    const auto u = solve_shooting(ProblemSpec(4, 2, 1.0, c), nl).sample(grid);
    if (!prev.empty()) {
      EXPECT_TRUE(comparison_check(grid, prev, grid, u)) << "c=" << c;
    }
    prev = u;
  }
}

TEST(Ordering, SolutionsAreAdmissible) {
  for (const auto &f : dirichlet_fixtures()) {
    const auto sol = solve_shooting(f.spec, f.nl);
    const auto &t = *sol.trajectory;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const auto lam = radial_eigenvalues(f.spec.N, t.r[i], t.r[i] == 0.0 ? 0.0 : t.xip[i], t.xipp(i));
      ASSERT_TRUE(is_k_admissible(lam, f.spec.k)) << f.name << " r=" << t.r[i];
    }
  }
}

TEST(Ordering, VanishingDatum) {
  const auto nl = Nonlinearity::power(2, 2);
  double prev = inf;
  for (double c : {1e-1, 1e-2, 1e-3}) {
    const auto sol = solve_shooting(ProblemSpec(4, 2, 1.0, c), nl);
    double sup = 0.0;
    for (double v : sol.u) sup = std::max(sup, std::abs(v));
    EXPECT_LE(sup, c * (1.0 + 1e-9));
    EXPECT_LT(sup, prev);
    prev = sup;
  }
}

TEST(Comparison, Basics) {
  const auto grid = uniform_grid(1.0, 8);
  std::vector<double> a(grid.size(), 1.0);
  EXPECT_TRUE(comparison_check(grid, a, grid, a));
  auto b = a;
  b[3] -= 1e-6;
  EXPECT_FALSE(comparison_check(grid, a, grid, b));
  EXPECT_THROW(comparison_check(grid, a, uniform_grid(2.0, 8), a), domain_error);
  EXPECT_THROW(comparison_check(grid, a, grid, std::vector<double>(3, 0.0)), domain_error);
}

TEST(LargeSequence, QuadraticThreeDimensions) {
  const auto L = large_solution_sequence(ProblemSpec(3, 1, 1.0), Nonlinearity::power(2, 1), {2, 4, 8, 16, 32});
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(L.solutions[i].beta_star, oracle::u0_large[i], 1e-9);
  EXPECT_TRUE(L.monotone_in_n);
  EXPECT_TRUE(L.below_barrier);
  EXPECT_EQ(L.cauchy_differences.size(), 4u);
}

TEST(LargeSequence, CubicHessian) {
  const ProblemSpec s(4, 2, 1.0);
  const auto nl = Nonlinearity::power(3, 2);
  const auto L = large_solution_sequence(s, nl, {2, 4, 8});
  EXPECT_TRUE(L.monotone_in_n);
  EXPECT_TRUE(L.below_barrier);
  const auto sup = laplace_supersolution(ProblemSpec(4, 2, 1.0, 1.0), nl).sample(L.interior_grid);
  for (const auto &p : L.profiles) EXPECT_TRUE(comparison_check(L.interior_grid, p, L.interior_grid, sup));
}

TEST(LargeSequence, RejectsLinear) {
  EXPECT_THROW(large_solution_sequence(ProblemSpec(3, 1, 1.0), Nonlinearity::power(1, 1), {2, 4}), domain_error);
}
