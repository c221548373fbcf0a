#pragma once

// Quantitative estimates checked along computed radial trajectories: the
// lower bound on the KO-type integral between two radii, the pointwise
// growth bound from the energy identity, the remaining-radius bound, and
// the small-ball limit that forces K(beta) -> 0.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "khessian/common.hpp"
#include "khessian/hessian.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/ode_ivp.hpp"
#include "khessian/quadrature.hpp"

namespace khessian {

struct EstimateReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  ///< positive when the inequality holds with room
  bool pass = false;
  double quadrature_error = 0.0;
  /// Radius where a pointwise check was tightest.
  std::optional<double> radius;
  /// Integrand read with dr instead of dxi; reported, never asserted.
  std::optional<double> literal_lhs;

  /// Fill slack and pass for "lhs >= rhs" (lower) or "lhs <= rhs" (upper).
  void settle(bool lower) {
    slack = lower ? lhs - rhs : rhs - lhs;
    const double rel = 1e-8 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    pass = slack >= -quadrature_error - rel;
  }
};

namespace detail {

inline void require_range(const RadialTrajectory &traj, double rho1, double rho2) {
  if (!(rho1 > 0.0) || !(rho2 > rho1)) throw domain_error("estimate radii must satisfy 0 < rho1 < rho2");
  if (!(rho2 < traj.last_radius())) throw domain_error("estimate radius beyond the trajectory");
}

// int_{rho1}^{rho2} w(r) dr / ((k+1)(G(xi(r)) - G(xi(rho1))))^{1/(k+1)} with
// w = xi' (dxi form) or w = 1 (literal dr form), substituting
// r = rho1 + s^{(k+1)/k} near the singular lower end.
inline quad::QuadResult r_parametrized(const RadialTrajectory &traj, double rho1, double rho2, bool with_slope) {
  const auto &nl = traj.nl();
  const int k = nl.k();
  const double xi1 = traj.value_at(rho1);
  const double alpha = double(k + 1) / k;
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double r = rho1 + std::pow(s, alpha);
    const auto [x, w] = traj.hermite(std::min(r, rho2));
    const double d = (k + 1) * nl.G_increment(xi1, x);
    if (!(d > 0.0)) return 0.0;
    return (with_slope ? w : 1.0) * std::pow(d, -1.0 / (k + 1)) * alpha * std::pow(s, alpha - 1.0);
  };
  return quad::integrate(integrand, 0.0, std::pow(rho2 - rho1, 1.0 / alpha), {1e-13, 1e-11, std::size_t{1} << 16});
}

} // namespace detail

/// Left side of the two-radius lower bound, evaluated along r by the chain
/// rule; agrees with the dxi evaluation for increasing xi.
inline quad::QuadResult lower_bound_lhs_in_r(const RadialTrajectory &traj, double rho1, double rho2) {
  detail::require_range(traj, rho1, rho2);
  auto q = detail::r_parametrized(traj, rho1, rho2, true);
  const double c = std::pow(traj.spec().c_div(), 1.0 / (traj.spec().k + 1));
  q.value *= c;
  q.error *= c;
  return q;
}

/// C^{1/(k+1)} int_{xi(rho1)}^{xi(rho2)} dt / ((k+1)(G(t) - G(xi(rho1))))^{1/(k+1)}
/// against its closed lower bound in rho1, rho2 (logarithmic when N = 2k).
inline EstimateReport check_lower_bound(const RadialTrajectory &traj, double rho1, double rho2) {
  detail::require_range(traj, rho1, rho2);
  const auto &spec = traj.spec();
  const auto &nl = traj.nl();
  const int N = spec.N;
  const int k = spec.k;
  const double xi1 = traj.value_at(rho1);
  const double xi2 = traj.value_at(rho2);
  if (!(xi2 > xi1)) throw domain_error("check_lower_bound: xi must increase between the radii");

  EstimateReport rep;
  const double c = std::pow(spec.c_div(), 1.0 / (k + 1));
  const auto q = ko_type_segment(nl, xi1, xi2, 0.0, double(k + 1));
  rep.lhs = c * q.value;
  rep.quadrature_error = c * q.error;
  const double lead = std::pow(rho1, 2.0 * k / (k + 1));
  if (N == 2 * k) {
    rep.name = "lower_bound_log";
    rep.rhs = lead * std::log(rho2 / rho1);
  } else {
    rep.name = "lower_bound";
    rep.rhs = double(k) / (N - 2 * k) * lead * (1.0 - std::pow(rho1 / rho2, double(N) / k - 2.0));
  }
  rep.literal_lhs = c * detail::r_parametrized(traj, rho1, rho2, false).value;
  rep.settle(true);
  return rep;
}

/// Pointwise r^{N/k-1} xi' <= ((k+1)/C)^{1/(k+1)} G(xi)^{1/(k+1)} r^{N/k-2/(k+1)};
/// the report carries the tightest grid point.
inline EstimateReport check_growth_bound(const RadialTrajectory &traj) {
  const auto &spec = traj.spec();
  const auto &nl = traj.nl();
  const int N = spec.N;
  const int k = spec.k;
  const double m = double(N) / k - 1.0;
  const double coef = std::pow((k + 1) / spec.c_div(), 1.0 / (k + 1));
  const double q = double(N) / k - 2.0 / (k + 1);

  EstimateReport worst;
  worst.name = "growth_bound";
  bool have = false;
  double worst_margin = inf;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double r = traj.r[i];
    if (r <= 0.0) continue;
    EstimateReport p;
    p.lhs = std::pow(r, m) * traj.xip[i];
    p.rhs = coef * std::pow(nl.G(traj.xi[i]), 1.0 / (k + 1)) * std::pow(r, q);
    p.settle(false);
    const double margin = p.slack / std::max({1.0, std::abs(p.lhs), std::abs(p.rhs)});
    if (!have || margin < worst_margin) {
      worst.lhs = p.lhs;
      worst.rhs = p.rhs;
      worst.radius = r;
      worst_margin = margin;
      have = true;
    }
  }
  if (!have) throw domain_error("check_growth_bound: trajectory has no r > 0 points");
  worst.settle(false);
  return worst;
}

/// int_beta^{xi(rho)} dt / ((k+1)(G(t) - G(beta)))^{1/(k+1)} <= C^{-1/(k+1)} (k+1)/(2k) rho^{2k/(k+1)}.
inline EstimateReport check_remaining_radius_bound(const RadialTrajectory &traj, double rho) {
  if (!traj.from_origin()) throw domain_error("check_remaining_radius_bound: trajectory must start at the origin");
  if (!(rho > 0.0) || !(rho < traj.last_radius())) throw domain_error("estimate radius outside the trajectory");
  const auto &spec = traj.spec();
  const int k = spec.k;
  const double beta = traj.beta();
  const double x = traj.value_at(rho);
  if (!(x > beta)) throw domain_error("check_remaining_radius_bound: xi must increase past the origin");
  EstimateReport rep;
  rep.name = "remaining_radius_bound";
  const auto q = ko_type_segment(traj.nl(), beta, x, 0.0, double(k + 1));
  rep.lhs = q.value;
  rep.quadrature_error = q.error;
  rep.rhs = std::pow(spec.c_div(), -1.0 / (k + 1)) * (k + 1) / (2.0 * k) * std::pow(rho, 2.0 * k / (k + 1));
  rep.settle(false);
  return rep;
}

/// Runs the lower bound on a few radius pairs, the growth bound and the
/// remaining-radius bound at 0.9 of the last radius.
inline std::vector<EstimateReport> verify_trajectory(const RadialTrajectory &traj) {
  std::vector<EstimateReport> out;
  const double R = traj.last_radius();
  for (auto [a, b] : {std::pair{0.25, 0.5}, std::pair{0.5, 0.75}, std::pair{0.1, 0.9}}) {
    const double r1 = a * R;
    const double r2 = b * R;
    if (traj.value_at(r2) > traj.value_at(r1)) out.push_back(check_lower_bound(traj, r1, r2));
  }
  out.push_back(check_growth_bound(traj));
  out.push_back(check_remaining_radius_bound(traj, 0.9 * R));
  return out;
}

struct NecessityEntry {
  double eps = 0.0;
  double beta = 0.0;
  BlowupEstimate radius;
  KOReport K;
  EstimateReport report;
};

struct NecessityResult {
  std::vector<NecessityEntry> entries;
  bool betas_increasing = false;
  bool K_decreasing = false;
  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto &e) { return e.report.pass; });
  }
};

/// Radius shrinks as beta grows; reports the offending pair otherwise.
class non_monotone_radius : public numerical_error {
public:
  non_monotone_radius(const std::string &what, double b1, double r1, double b2, double r2)
      : numerical_error(what), b1_(b1), r1_(r1), b2_(b2), r2_(r2) {}
  double beta_low() const { return b1_; }
  double rho_at_low() const { return r1_; }
  double beta_high() const { return b2_; }
  double rho_at_high() const { return r2_; }

private:
  double b1_, r1_, b2_, r2_;
};

/// Central value whose explosion radius is eps, by bisection in log beta.
inline std::pair<double, BlowupEstimate> beta_for_radius(const ProblemSpec &spec, const Nonlinearity &nl, double eps,
                                                         double rel_tol = 1e-7) {
  const double btol = 1e-2 * rel_tol * eps;
  auto rho = [&](double b) { return blowup_radius(spec, nl, b, btol, {std::max(1e3, 100.0 * eps)}); };
  auto mid = [](const BlowupEstimate &e) { return e.blows_up() ? e.midpoint() : inf; };

  double lo = 1.0, hi = 1.0;
  BlowupEstimate e_lo = rho(lo), e_hi = e_lo;
  while (mid(e_lo) < eps) {
    hi = lo;
    e_hi = e_lo;
    lo /= 4.0;
    e_lo = rho(lo);
    if (lo < 1e-200) throw numerical_error("beta_for_radius: no central value reaches the radius");
  }
  while (mid(e_hi) > eps) {
    lo = hi;
    e_lo = e_hi;
    hi *= 4.0;
    e_hi = rho(hi);
    if (hi > 1e200) throw numerical_error("beta_for_radius: no central value explodes fast enough");
  }
  for (int it = 0; it < 200; ++it) {
    const double b = std::sqrt(lo * hi);
    const auto e = rho(b);
    const double m = mid(e);
    if (m > mid(e_lo) + e_lo.width() + e.width() || m < mid(e_hi) - e_hi.width() - e.width())
      throw non_monotone_radius("beta_for_radius: explosion radius not monotone in beta", lo, mid(e_lo), b, m);
    if (std::abs(m - eps) <= rel_tol * eps) return {b, e};
    if (m > eps) {
      lo = b;
      e_lo = e;
    } else {
      hi = b;
      e_hi = e;
    }
  }
  throw numerical_error("beta_for_radius: bisection did not converge");
}

/// For each eps, the central value beta_n exploding at radius eps and the bound
/// K(beta_n) <= C^{-1/(k+1)} (k+1)/(2k) rho(beta_n)^{2k/(k+1)}, checked with the
/// upper bracket edge of rho(beta_n).
inline NecessityResult necessity_limit_check(const Nonlinearity &nl, const ProblemSpec &spec,
                                             const std::vector<double> &eps_sequence) {
  spec.validate();
  if (nl.is_test_only()) throw domain_error("necessity check needs a Keller-Osserman nonlinearity");
  if (ko_classify(nl) != KOClass::holds)
    throw domain_error("necessity check requires the Keller-Osserman condition to hold");
  for (std::size_t i = 0; i < eps_sequence.size(); ++i) {
    if (!(eps_sequence[i] > 0.0)) throw domain_error("eps values must be positive");
    if (i > 0 && !(eps_sequence[i] < eps_sequence[i - 1])) throw domain_error("eps values must decrease strictly");
  }
  const int k = spec.k;
  NecessityResult res;
  for (double eps : eps_sequence) {
    NecessityEntry e;
    e.eps = eps;
    std::tie(e.beta, e.radius) = beta_for_radius(spec, nl, eps);
    e.K = ko_integral(nl, e.beta, 1e-10);
    e.report.name = "small_ball_limit";
    e.report.lhs = e.K.value;
    e.report.quadrature_error = e.K.error_bound;
    e.report.rhs =
        std::pow(spec.c_div(), -1.0 / (k + 1)) * (k + 1) / (2.0 * k) * std::pow(e.radius.rho_high, 2.0 * k / (k + 1));
    e.report.radius = e.radius.rho_high;
    e.report.settle(false);
    res.entries.push_back(e);
  }
  res.betas_increasing = true;
  res.K_decreasing = true;
  for (std::size_t i = 1; i < res.entries.size(); ++i) {
    res.betas_increasing = res.betas_increasing && res.entries[i].beta > res.entries[i - 1].beta;
    res.K_decreasing = res.K_decreasing && res.entries[i].K.value < res.entries[i - 1].K.value;
  }
  return res;
}

} // namespace khessian
