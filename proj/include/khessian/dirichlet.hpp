#pragma once

// Radial Dirichlet problems sigma_k^{1/k}(D^2 u) = g(u) in B_R, u = c on the
// sphere: shooting on the central value, monotone iteration from the
// explicit subsolution, explosive radial barriers and the n -> infinity
// sequence of boundary data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "khessian/common.hpp"
#include "khessian/hessian.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/ode_ivp.hpp"

namespace khessian {

/// Uniform radial grid r_i = i R / n, i = 0..n.
inline std::vector<double> uniform_grid(double R, std::size_t n) {
  if (!(R > 0.0) || n < 1) throw domain_error("uniform_grid needs R > 0 and n >= 1");
  std::vector<double> r(n + 1);
  for (std::size_t i = 0; i <= n; ++i) r[i] = R * double(i) / double(n);
  r[n] = R;
  return r;
}

/// u(r) = c + a (r^2 - R^2) / 2 with a = g(c) C(N,k)^{-1/k}: sigma_k^{1/k} = g(c)
/// identically and u = c on the sphere.
struct ExplicitSubsolution {
  double c = 0.0;
  double a = 0.0;
  double R = 0.0;
  double value_at(double r) const { return c + 0.5 * a * (r * r - R * R); }
  std::vector<double> sample(const std::vector<double> &grid) const {
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) u[i] = value_at(grid[i]);
    return u;
  }
};

inline ExplicitSubsolution explicit_subsolution(const ProblemSpec &spec, const Nonlinearity &nl) {
  spec.validate();
  const double c = spec.datum();
  const double R = spec.radius();
  return {c, nl.g(c) * std::pow(spec.c_full(), -1.0 / spec.k), R};
}

/// Radial solution of the IVP exploding at (or just beyond) R, from below in beta.
struct ExplosiveProfile {
  double beta = 0.0;
  double R = 0.0;
  BlowupEstimate radius;
  std::optional<RadialTrajectory> trajectory;

  /// +inf past the threshold crossing.
  double value_at(double r) const {
    if (r > trajectory->last_radius()) return inf;
    return trajectory->value_at(r);
  }
  std::vector<double> sample(const std::vector<double> &grid) const {
    std::vector<double> u(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) u[i] = value_at(grid[i]);
    return u;
  }
};

/// KO failure for a barrier's nonlinearity: no explosive profile exists.
class no_explosive_solution : public domain_error {
public:
  using domain_error::domain_error;
};

/// Largest central value (to relative 1e-12) whose certified blow-up radius is >= R.
inline ExplosiveProfile explosive_profile(const ProblemSpec &spec, const Nonlinearity &nl, double R) {
  if (!(R > 0.0)) throw domain_error("explosive_profile needs R > 0");
  if (nl.is_test_only() || ko_classify(nl) != KOClass::holds)
    throw no_explosive_solution("Keller-Osserman condition fails: no explosive radial solution exists");
  const BlowupOptions opt{std::max(1e3, 10.0 * R)};
  const double btol = 1e-9 * R;
  auto survives = [&](double b) {
    const auto e = blowup_radius(spec, nl, b, btol, opt);
    return !e.blows_up() || e.rho_low >= R;
  };
  double lo = 1.0, hi = 1.0;
  if (survives(lo)) {
    do {
      lo = hi;
      hi *= 4.0;
      if (hi > 1e300) throw numerical_error("explosive_profile: no central value explodes inside R");
    } while (survives(hi));
  } else {
    do {
      hi = lo;
      lo /= 4.0;
      if (lo < 1e-300) throw numerical_error("explosive_profile: every central value explodes inside R");
    } while (!survives(lo));
  }
  while (hi / lo - 1.0 > 1e-12) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (survives(mid) ? lo : hi) = mid;
  }
  ExplosiveProfile out;
  out.beta = lo;
  out.R = R;
  out.radius = blowup_radius(spec, nl, lo, btol, opt);
  out.trajectory = integrate_ivp(spec, nl, lo, R);
  return out;
}

/// g~(u) = N C(N,k)^{-1/k} g(u) as a k = 1 nonlinearity.  By Maclaurin,
/// Delta w = g~(w) implies sigma_k(D^2 w) <= g(w)^k.
inline Nonlinearity laplace_nonlinearity(const ProblemSpec &spec, const Nonlinearity &nl) {
  return nl.root_transform(spec.N * std::pow(spec.c_full(), -1.0 / spec.k), 1.0, 1);
}

/// Explosive solution on B_R of the semilinear problem Delta w = g~(w).
inline ExplosiveProfile laplace_supersolution(const ProblemSpec &spec, const Nonlinearity &nl) {
  spec.validate();
  const double R = spec.radius();
  const auto gt = laplace_nonlinearity(spec, nl);
  if (gt.is_test_only() || ko_classify(gt) != KOClass::holds)
    throw no_explosive_solution("no explosive supersolution: the Keller-Osserman condition fails for the "
                                "Laplacian comparison nonlinearity");
  return explosive_profile(ProblemSpec(spec.N, 1), gt, R);
}

enum class DirichletMethod { shooting, monotone_iteration };

inline std::string to_string(DirichletMethod m) {
  return m == DirichletMethod::shooting ? "shooting" : "monotone_iteration";
}

struct DirichletSolution {
  ProblemSpec spec;
  DirichletMethod method = DirichletMethod::shooting;
  std::vector<double> r;  ///< trajectory nodes (shooting) or the iteration grid
  std::vector<double> u;
  double beta_star = 0.0;  ///< u(0)
  std::optional<RadialTrajectory> trajectory;
  std::size_t iterations = 0;
  double final_update_norm = 0.0;
  double residual = 0.0;  ///< max |sigma_k^{1/k} - g(u)| over interior nodes
  double boundary_error = 0.0;

  /// Hermite interpolation of the shooting trajectory, linear on the iteration grid.
  double value_at(double rr) const {
    if (trajectory) return trajectory->value_at(rr);
    if (rr <= r.front()) return u.front();
    if (rr >= r.back()) return u.back();
    auto it = std::upper_bound(r.begin(), r.end(), rr);
    const std::size_t i = static_cast<std::size_t>(std::distance(r.begin(), it)) - 1;
    const double t = (rr - r[i]) / (r[i + 1] - r[i]);
    return (1.0 - t) * u[i] + t * u[i + 1];
  }
  std::vector<double> sample(const std::vector<double> &grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = value_at(grid[i]);
    return out;
  }
};

/// Second-order finite-difference residual of sigma_k^{1/k}(u) = g(u) on a uniform grid.
inline double finite_difference_residual(const ProblemSpec &spec, const Nonlinearity &nl,
                                         const std::vector<double> &r, const std::vector<double> &u) {
  double worst = 0.0;
  for (std::size_t i = 2; i + 1 < r.size(); ++i) {
    const double h = r[i + 1] - r[i];
    const double d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
    const double d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    const double s = sigma_k_radial(r[i], d1, d2, spec);
    worst = std::max(worst, std::abs(std::pow(std::max(s, 0.0), 1.0 / spec.k) - nl.g(std::max(u[i], 0.0))));
  }
  return worst;
}

struct ShootingOptions {
  double rel_tol = 1e-12;  ///< |xi(R) - c| <= rel_tol * c
  StepControls controls{};
};

/// Boundary datum cannot be matched by any central value in (0, c].
class unreachable_datum : public numerical_error {
public:
  using numerical_error::numerical_error;
};

/// Bisection on beta in (c 1e-6, c] for xi_beta(R) = c.
inline DirichletSolution solve_shooting(const ProblemSpec &spec, const Nonlinearity &nl,
                                        const ShootingOptions &opt = {}) {
  spec.validate();
  const double R = spec.radius();
  const double c = spec.datum();
  if (nl.k() != spec.k) throw domain_error("solve_shooting: nonlinearity order differs from the problem's k");

  auto shoot = [&](double b) {
    auto t = integrate_ivp(spec, nl, b, R, opt.controls);
    const double end = t.termination == Termination::reached_rmax ? t.xi.back() : inf;
    return std::pair{end - c, std::move(t)};
  };
  double lo = 1e-6 * c, hi = c;
  auto [f_lo, t_lo] = shoot(lo);
  if (f_lo > 0.0) throw unreachable_datum("solve_shooting: xi(R) exceeds the datum even for the smallest central value");
  auto [f_hi, t_hi] = shoot(hi);
  if (f_hi < 0.0) throw unreachable_datum("solve_shooting: xi(R) stays below the datum for beta = c");

  std::optional<RadialTrajectory> best;
  double best_f = inf;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto [f, t] = shoot(mid);
    if (std::abs(f) < std::abs(best_f)) {
      best_f = f;
      best = std::move(t);
    }
    if (std::abs(f) <= opt.rel_tol * c || mid <= lo || mid >= hi) break;
    (f < 0.0 ? lo : hi) = mid;
  }
  if (!(std::abs(best_f) <= opt.rel_tol * c))
    throw numerical_error("solve_shooting: bisection stalled before matching the datum");

  DirichletSolution sol;
  sol.spec = spec;
  sol.method = DirichletMethod::shooting;
  sol.r = best->r;
  sol.u = best->xi;
  sol.beta_star = best->beta();
  sol.boundary_error = std::abs(best_f);
  for (std::size_t i = 1; i < best->size(); ++i) {
    const double s = sigma_k_radial(best->r[i], best->xip[i], best->xipp(i), spec);
    sol.residual = std::max(sol.residual, std::abs(std::pow(std::max(s, 0.0), 1.0 / spec.k) - nl.g(best->xi[i])));
  }
  sol.trajectory = std::move(best);
  return sol;
}

struct IterationTrace {
  std::vector<std::vector<double>> snapshots;  ///< u_0, u_1, ... on the shared grid
  std::vector<double> update_norms;
  std::size_t monotonicity_violations = 0;
  double worst_decrease = 0.0;  ///< largest pointwise drop u_{j-1} - u_j seen
};

struct MonotoneOptions {
  std::size_t grid_size = 1024;
  double tol = 1e-12;  ///< stop when max |u_j - u_{j-1}| <= tol * c
  std::size_t max_iterations = 10000;
  /// Shift by M >= Lip(g^k) on [min u_0, c]; false gives the plain source iteration.
  bool shifted = true;
  /// Throw when the trace is not pointwise non-decreasing.
  bool strict = true;
  bool keep_snapshots = true;
};

/// The iteration broke its contract; carries the trace so far.
class iteration_failure : public numerical_error {
public:
  iteration_failure(const std::string &what, IterationTrace trace)
      : numerical_error(what), trace_(std::move(trace)) {}
  const IterationTrace &trace() const noexcept { return trace_; }

private:
  IterationTrace trace_;
};

namespace detail {

// One frozen-source step: solve sigma_k(u) - M u = s on the grid with u(R) = c,
// written as u' = (k v / (C r^{N-k}))^{1/k}, v' = r^{N-1} (M u + s), v(0) = 0,
// and shot on u(0).  The first cell uses the series at the origin, the rest
// classical RK4 with s at half nodes by cubic interpolation.
class FrozenSourceStep {
public:
  FrozenSourceStep(const ProblemSpec &spec, const std::vector<double> &r) : spec_(spec), r_(r) {
    h_ = r[1] - r[0];
  }

  std::vector<double> solve(const std::vector<double> &s, double M, double c, double alpha_guess) {
    s_ = &s;
    mid_.resize(s.size() - 1);
    const std::size_t n = s.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
      // s is even in r, so the stencil reflects through the origin.
      const double a = i == 0 ? s[1] : s[i - 1];
      const double b = s[i], d = s[i + 1];
      const double e = i + 2 <= n ? s[i + 2] : 3.0 * s[n] - 3.0 * s[n - 1] + s[n - 2];
      mid_[i] = (-a + 9.0 * b + 9.0 * d - e) / 16.0;
    }
    M_ = M;
    if (M == 0.0) {
      // Source does not involve u: march once and shift to the datum.
      auto u = march(0.0);
      const double shift = c - u.back();
      for (auto &x : u) x += shift;
      return u;
    }
    auto f = [&](double alpha) { return march(alpha).back() - c; };
    double hi = c;
    double lo = std::min(alpha_guess, c) - 1e-3 * std::max(1.0, std::abs(c));
    double f_lo = f(lo);
    for (int it = 0; f_lo > 0.0 && it < 200; ++it) {
      lo -= 2.0 * (c - lo);
      f_lo = f(lo);
    }
    const double f_hi = f(hi);
    if (f_lo > 0.0 || f_hi < 0.0) throw numerical_error("frozen-source step: no bracket for the central value");
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi,
                                                        boost::math::tools::eps_tolerance<double>(52), iters);
    auto u = march(0.5 * (root.first + root.second));
    // Large shifts make the shot exponentially sensitive to u(0).
    if (!(std::abs(u.back() - c) <= 1e-9 * std::max(1.0, c)))
      throw numerical_error("frozen-source step: boundary value lost to conditioning (shift too large)");
    return u;
  }

private:
  double uprime(double r, double v) const {
    if (!(v > 0.0) || r <= 0.0) return 0.0;
    const int k = spec_.k;
    return std::pow(k * v / (spec_.c_div() * std::pow(r, spec_.N - k)), 1.0 / k);
  }

  std::vector<double> march(double alpha) const {
    const auto &s = *s_;
    const std::size_t n = s.size() - 1;
    const int N = spec_.N;
    std::vector<double> u(n + 1);
    u[0] = alpha;
    const double F0 = M_ * alpha + s[0];
    double v = F0 > 0.0 ? F0 * std::pow(h_, N) / N : 0.0;
    u[1] = alpha + (F0 > 0.0 ? 0.5 * std::pow(F0 / spec_.c_full(), 1.0 / spec_.k) * h_ * h_ : 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const double r0 = r_[i], rm = r0 + 0.5 * h_, r1 = r_[i + 1];
      const double y = u[i];
      auto dv = [&](double r, double uu, double src) { return std::pow(r, N - 1) * (M_ * uu + src); };
      const double ku1 = uprime(r0, v), kv1 = dv(r0, y, s[i]);
      const double ku2 = uprime(rm, v + 0.5 * h_ * kv1), kv2 = dv(rm, y + 0.5 * h_ * ku1, mid_[i]);
      const double ku3 = uprime(rm, v + 0.5 * h_ * kv2), kv3 = dv(rm, y + 0.5 * h_ * ku2, mid_[i]);
      const double ku4 = uprime(r1, v + h_ * kv3), kv4 = dv(r1, y + h_ * ku3, s[i + 1]);
      u[i + 1] = y + h_ / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4);
      v = std::max(v + h_ / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4), 0.0);
    }
    return u;
  }

  ProblemSpec spec_;
  const std::vector<double> &r_;
  const std::vector<double> *s_ = nullptr;
  std::vector<double> mid_;
  double h_ = 0.0;
  double M_ = 0.0;
};

} // namespace detail

/// Lipschitz bound of g^k on [0, c]: the forward difference at c, valid since g^k is convex.
inline double shift_constant(const Nonlinearity &nl, double c) {
  const double d = 1e-3 * std::max(c, 1e-8);
  return (nl.gk(c + d) - nl.gk(c)) / d;
}

/// Monotone iteration sigma_k(u_j) - M u_j = g^k(u_{j-1}) - M u_{j-1} from the
/// explicit subsolution, g extended by 0 below the origin.
inline std::pair<DirichletSolution, IterationTrace> solve_monotone(const ProblemSpec &spec, const Nonlinearity &nl,
                                                                   const MonotoneOptions &opt = {}) {
  spec.validate();
  if (opt.grid_size < 64) throw domain_error("solve_monotone: grid_size must be at least 64");
  if (nl.k() != spec.k) throw domain_error("solve_monotone: nonlinearity order differs from the problem's k");
  const double c = spec.datum();
  const auto r = uniform_grid(spec.radius(), opt.grid_size);
  const double M = opt.shifted ? shift_constant(nl, c) : 0.0;
  auto gk = [&](double x) { return nl.gk(std::max(x, 0.0)); };

  IterationTrace trace;
  std::vector<double> u = explicit_subsolution(spec, nl).sample(r);
  if (opt.keep_snapshots) trace.snapshots.push_back(u);
  detail::FrozenSourceStep step(spec, r);
  std::vector<double> s(r.size());
  const double slack = 1e-13 * std::max(1.0, c);

  std::size_t j = 0;
  double update = inf;
  while (update > opt.tol * c) {
    if (j >= opt.max_iterations) throw iteration_failure("solve_monotone: no convergence within max_iterations", trace);
    ++j;
    for (std::size_t i = 0; i < r.size(); ++i) s[i] = gk(u[i]) - M * u[i];
    auto next = step.solve(s, M, c, u[0]);
    update = 0.0;
    std::size_t drops = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      update = std::max(update, std::abs(next[i] - u[i]));
      if (next[i] < u[i] - slack) {
        ++drops;
        trace.worst_decrease = std::max(trace.worst_decrease, u[i] - next[i]);
      }
    }
    trace.monotonicity_violations += drops;
    trace.update_norms.push_back(update);
    u = std::move(next);
    if (opt.keep_snapshots) trace.snapshots.push_back(u);
    if (drops > 0 && opt.strict)
      throw iteration_failure("solve_monotone: iterate decreased at " + std::to_string(drops) + " grid points", trace);
  }

  DirichletSolution sol;
  sol.spec = spec;
  sol.method = DirichletMethod::monotone_iteration;
  sol.r = r;
  sol.u = u;
  sol.beta_star = u.front();
  sol.iterations = j;
  sol.final_update_norm = update;
  sol.boundary_error = std::abs(u.back() - c);
  sol.residual = finite_difference_residual(spec, nl, r, u);
  return {std::move(sol), std::move(trace)};
}

/// True iff lower <= upper + 1e-10 at every node of a shared grid.
inline bool comparison_check(const std::vector<double> &grid_lower, const std::vector<double> &lower,
                             const std::vector<double> &grid_upper, const std::vector<double> &upper,
                             double slack = 1e-10) {
  if (grid_lower.size() != lower.size() || grid_upper.size() != upper.size())
    throw domain_error("comparison_check: profile and grid lengths differ");
  if (grid_lower != grid_upper) throw domain_error("comparison_check: profiles live on different grids");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i] + slack)) return false;
  return true;
}

/// min_i (upper_i - lower_i); +inf where the upper profile is infinite.
inline double comparison_margin(const std::vector<double> &lower, const std::vector<double> &upper) {
  if (lower.size() != upper.size()) throw domain_error("comparison_margin: profile lengths differ");
  double m = inf;
  for (std::size_t i = 0; i < lower.size(); ++i) m = std::min(m, upper[i] - lower[i]);
  return m;
}

struct LargeSolutionResult {
  std::vector<double> n_values;
  std::vector<DirichletSolution> solutions;
  std::vector<double> interior_grid;               ///< uniform on [0, 0.9 R]
  std::vector<std::vector<double>> profiles;       ///< u_n on the interior grid
  std::vector<double> cauchy_differences;          ///< max |u_{n_{i+1}} - u_{n_i}| on the interior grid
  std::vector<double> barrier;                     ///< explosive radial solution on the interior grid
  double barrier_beta = 0.0;
  bool monotone_in_n = false;
  bool below_barrier = false;
  double min_barrier_margin = inf;
  const std::vector<double> &limit_profile() const { return profiles.back(); }
};

/// Dirichlet solutions with data c = n, their ordering in n, the explosive
/// radial barrier on B_R and the interior Cauchy differences.
inline LargeSolutionResult large_solution_sequence(const ProblemSpec &spec, const Nonlinearity &nl,
                                                   const std::vector<double> &n_values,
                                                   std::size_t interior_points = 181) {
  const double R = spec.radius();
  if (nl.is_test_only() || ko_classify(nl) != KOClass::holds)
    throw domain_error("large_solution_sequence: the Keller-Osserman condition fails, no interior bound exists");
  if (n_values.empty()) throw domain_error("large_solution_sequence: empty n sequence");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (!(n_values[i] > 0.0)) throw domain_error("boundary data n must be positive");
    if (i > 0 && !(n_values[i] > n_values[i - 1])) throw domain_error("boundary data n must increase");
  }
  LargeSolutionResult out;
  out.n_values = n_values;
  out.interior_grid = uniform_grid(0.9 * R, interior_points - 1);
  for (double n : n_values) {
    ProblemSpec s(spec.N, spec.k, R, n);
    out.solutions.push_back(solve_shooting(s, nl));
    out.profiles.push_back(out.solutions.back().sample(out.interior_grid));
  }
  const auto bar = explosive_profile(ProblemSpec(spec.N, spec.k), nl, R);
  out.barrier_beta = bar.beta;
  out.barrier = bar.sample(out.interior_grid);

  out.monotone_in_n = true;
  for (std::size_t j = 1; j < out.profiles.size(); ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < out.interior_grid.size(); ++i) {
      d = std::max(d, std::abs(out.profiles[j][i] - out.profiles[j - 1][i]));
      if (out.profiles[j][i] < out.profiles[j - 1][i] - 1e-10) out.monotone_in_n = false;
    }
    out.cauchy_differences.push_back(d);
  }
  for (const auto &p : out.profiles) out.min_barrier_margin = std::min(out.min_barrier_margin, comparison_margin(p, out.barrier));
  out.below_barrier = out.min_barrier_margin >= -1e-10;
  return out;
}

} // namespace khessian
