#pragma once

// Radial initial-value problem
//
//     C(N-1,k-1) [ r^{N-k}/k (xi')^k ]' = r^{N-1} g^k(xi),  xi(0) = beta, xi'(0) = 0,
//
// integrated as the first-order system (xi, xi') with an embedded
// Dormand-Prince 5(4) pair, started off the singular origin by a Taylor
// step.  Finite-radius blow-up is detected by a threshold and bracketed by
// comparison integrals derived from the energy identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "khessian/common.hpp"
#include "khessian/hessian.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/quadrature.hpp"

namespace khessian {

struct StepControls {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::size_t max_steps = 10'000'000;
  double blowup_threshold = 1e12;
  /// Series-start radius; 0 selects 1e-6 times the curvature length scale.
  double r0 = 0.0;
};

enum class Termination { reached_rmax, blowup_detected, step_underflow };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::reached_rmax: return "ReachedRmax";
    case Termination::blowup_detected: return "BlowupDetected";
    case Termination::step_underflow: return "StepUnderflow";
  }
  return "unknown";
}

namespace detail {

inline double ipow(double x, int n) {
  if (n < 0) return 1.0 / ipow(x, -n);
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// xi'' from the expanded radial equation; NaN when the slope degenerates.
inline double radial_second_derivative(double r, double xi, double xip, const ProblemSpec &spec,
                                       const Nonlinearity &nl) {
  const int N = spec.N;
  const int k = spec.k;
  if (!(xi >= 0.0)) return std::numeric_limits<double>::quiet_NaN();
  const double gk = nl.gk(std::min(xi, nl.domain_max()));
  if (k == 1) return gk - (N - 1) * xip / r;
  const double s = xip / r;
  if (!(s > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (gk / spec.c_div() - double(N - k) / k * ipow(s, k)) * ipow(s, 1 - k);
}

} // namespace detail

/// xi''(r) solving the expanded radial equation for r > 0.
inline double ivp_rhs(double r, double xi, double xip, const ProblemSpec &spec, const Nonlinearity &nl) {
  if (!(r > 0.0)) throw domain_error("ivp_rhs: needs r > 0 (use series_start at the origin)");
  if (xip < 0.0) throw domain_error("ivp_rhs: negative slope");
  if (spec.k > 1 && xip == 0.0)
    throw domain_error("ivp_rhs: degenerate slope xi' = 0 at r > 0 for k > 1; start from series_start");
  return detail::radial_second_derivative(r, xi, xip, spec, nl);
}

/// xi''(0) = (g(beta)^k / C(N,k))^{1/k}.
inline double origin_curvature(const ProblemSpec &spec, const Nonlinearity &nl, double beta) {
  return nl.g(beta) * std::pow(spec.c_full(), -1.0 / spec.k);
}

struct SeriesPoint {
  double xi;
  double xip;
};

/// Two-term Taylor start at r0: xi = beta + a r0^2/2, xi' = a r0.
inline SeriesPoint series_start(const ProblemSpec &spec, const Nonlinearity &nl, double beta, double r0) {
  if (!(beta > 0.0)) throw domain_error("series_start: beta must be positive");
  if (!(r0 > 0.0)) throw domain_error("series_start: r0 must be positive");
  if (!(nl.g(beta) > 0.0)) throw domain_error("series_start: g(beta) = 0 violates g(s) > 0 for s > 0");
  const double a = origin_curvature(spec, nl, beta);
  return {beta + 0.5 * a * r0 * r0, a * r0};
}

/// Sampled radial solution with its integrator metadata.
class RadialTrajectory {
public:
  RadialTrajectory(ProblemSpec spec, Nonlinearity nl) : spec_(spec), nl_(std::move(nl)) {}

  std::vector<double> r, xi, xip;
  StepControls controls;
  Termination termination = Termination::reached_rmax;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t monotonicity_violations = 0;

  const ProblemSpec &spec() const { return spec_; }
  const Nonlinearity &nl() const { return nl_; }
  std::size_t size() const { return r.size(); }
  double beta() const { return xi.front(); }
  double last_radius() const { return r.back(); }
  bool from_origin() const { return !r.empty() && r.front() == 0.0 && xip.front() == 0.0; }

  /// Rebuild cached second derivatives after the sample arrays change.
  void finalize() {
    if (r.size() != xi.size() || r.size() != xip.size()) throw domain_error("trajectory: column lengths differ");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(r[i] > r[i - 1])) throw domain_error("trajectory: radii must increase strictly");
    xipp_.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == 0.0)
        xipp_[i] = origin_curvature(spec_, nl_, xi[i]);
      else
        xipp_[i] = detail::radial_second_derivative(r[i], xi[i], std::max(xip[i], 0.0), spec_, nl_);
    }
  }

  double xipp(std::size_t i) const { return xipp_.at(i); }

  /// Quintic Hermite interpolation of xi; +inf past a detected blow-up.
  double value_at(double rr) const { return hermite(rr).first; }
  double slope_at(double rr) const { return hermite(rr).second; }

  /// (xi, xi') at rr.
  std::pair<double, double> hermite(double rr) const {
    if (r.empty()) throw domain_error("trajectory is empty");
    if (rr < r.front()) throw domain_error("radius below trajectory start");
    if (rr > r.back()) {
      if (termination == Termination::blowup_detected) return {inf, inf};
      throw domain_error("radius beyond trajectory end");
    }
    auto it = std::upper_bound(r.begin(), r.end(), rr);
    std::size_t i = it == r.begin() ? 0 : static_cast<std::size_t>(std::distance(r.begin(), it)) - 1;
    if (i + 1 >= r.size()) return {xi.back(), xip.back()};
    return hermite_local(i, (rr - r[i]) / (r[i + 1] - r[i]));
  }

  /// (xi, xi') at fraction t of step i.  Near blow-up the steps are far
  /// narrower than ulp(r) allows t to be recovered from r.
  std::pair<double, double> hermite_local(std::size_t i, double t) const {
    const double h = r[i + 1] - r[i];
    const double y0 = xi[i], y1 = xi[i + 1];
    const double d0 = xip[i] * h, d1 = xip[i + 1] * h;
    const double s0 = xipp_[i] * h * h, s1 = xipp_[i + 1] * h * h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h00 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h10 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h20 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double h01 = 10 * t3 - 15 * t4 + 6 * t5;
    const double h11 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h21 = 0.5 * (t3 - 2 * t4 + t5);
    const double v = h00 * y0 + h10 * d0 + h20 * s0 + h01 * y1 + h11 * d1 + h21 * s1;
    const double dh00 = -30 * t2 + 60 * t3 - 30 * t4;
    const double dh10 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double dh20 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double dh01 = 30 * t2 - 60 * t3 + 30 * t4;
    const double dh11 = -12 * t2 + 28 * t3 - 15 * t4;
    const double dh21 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    const double dv = (dh00 * y0 + dh10 * d0 + dh20 * s0 + dh01 * y1 + dh11 * d1 + dh21 * s1) / h;
    return {v, dv};
  }

private:
  ProblemSpec spec_;
  Nonlinearity nl_;
  std::vector<double> xipp_;
};

/// Adaptive integration from the series start at r0 to r_max, a blow-up
/// threshold crossing, or step underflow.
inline RadialTrajectory integrate_ivp(const ProblemSpec &spec, const Nonlinearity &nl, double beta, double r_max,
                                      const StepControls &controls = {}) {
  spec.validate();
  if (!(beta > 0.0)) throw domain_error("integrate_ivp: beta must be positive");
  if (!(r_max > 0.0)) throw domain_error("integrate_ivp: r_max must be positive");
  if (nl.k() != spec.k) throw domain_error("integrate_ivp: nonlinearity order differs from the problem's k");

  RadialTrajectory traj(spec, nl);
  traj.controls = controls;
  const double a = origin_curvature(spec, nl, beta);
  if (!(a > 0.0)) throw domain_error("integrate_ivp: g(beta) must be positive");
  const double length = std::min(r_max, 1.0 / std::sqrt(a));
  const double r0 = controls.r0 > 0.0 ? std::min(controls.r0, 0.5 * r_max) : 1e-6 * length;
  const auto start = series_start(spec, nl, beta, r0);

  traj.r = {0.0, r0};
  traj.xi = {beta, start.xi};
  traj.xip = {0.0, start.xip};

  using State = std::array<double, 2>;
  auto f = [&](double r, const State &y) -> State {
    return {y[1], detail::radial_second_derivative(r, y[0], y[1], spec, nl)};
  };
  // Thresholds relative to the natural scales of the start; matters only for
  // large beta where the start slope alone can exceed an absolute threshold.
  const double xi_threshold = controls.blowup_threshold * std::max(1.0, beta);
  const double xip_threshold = controls.blowup_threshold * std::max(1.0, 1.0 / length);
  auto blown = [&](const State &y) {
    if (y[0] > xi_threshold || y[1] > xip_threshold) return true;
    if (y[0] >= nl.domain_max()) return true;
    const double gk = nl.gk(y[0]);
    return !std::isfinite(gk) || gk > 1e250;
  };

  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  double r = r0;
  State y{start.xi, start.xip};
  State k1 = f(r, y);
  double h = r0;
  bool done = false;

  if (blown(y)) {
    traj.termination = Termination::blowup_detected;
    done = true;
  }

  while (!done) {
    if (traj.accepted_steps + traj.rejected_steps >= controls.max_steps) {
      traj.termination = Termination::step_underflow;
      break;
    }
    if (r + h > r_max) h = r_max - r;
    // Relative to r: large central values blow up at tiny radii.
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * r) {
      traj.termination = Termination::step_underflow;
      break;
    }
    auto axpy = [&](std::initializer_list<std::pair<double, const State *>> terms) {
      State out = y;
      for (auto [c, s] : terms) {
        out[0] += h * c * (*s)[0];
        out[1] += h * c * (*s)[1];
      }
      return out;
    };
    const State k2 = f(r + c2 * h, axpy({{a21, &k1}}));
    const State k3 = f(r + c3 * h, axpy({{a31, &k1}, {a32, &k2}}));
    const State k4 = f(r + c4 * h, axpy({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const State k5 = f(r + c5 * h, axpy({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const State k6 = f(r + h, axpy({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const State yn = axpy({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const State k7 = f(r + h, yn);

    double err = 0.0;
    bool finite = true;
    for (int i = 0; i < 2; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = controls.abs_tol + controls.rel_tol * std::max(std::abs(y[i]), std::abs(yn[i]));
      if (!std::isfinite(e) || !std::isfinite(yn[i])) finite = false;
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(0.5 * err);
    if (!finite || !(err <= 1.0)) {
      ++traj.rejected_steps;
      h *= finite ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.25;
      continue;
    }

    ++traj.accepted_steps;
    r += h;
    y = yn;
    k1 = k7;
    if (y[1] < 0.0) {
      if (y[1] > -1e-14)
        y[1] = 0.0;
      else
        ++traj.monotonicity_violations;
    }
    if (y[0] < traj.xi.back()) ++traj.monotonicity_violations;
    traj.r.push_back(r);
    traj.xi.push_back(y[0]);
    traj.xip.push_back(y[1]);

    if (blown(y)) {
      traj.termination = Termination::blowup_detected;
      break;
    }
    if (r >= r_max) {
      traj.termination = Termination::reached_rmax;
      break;
    }
    const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
  }
  traj.finalize();
  return traj;
}

enum class BlowupVerdict { blowup, no_blowup_up_to };

struct BlowupEstimate {
  double beta = 0.0;
  double rho_low = 0.0;
  double rho_high = inf;
  BlowupVerdict verdict = BlowupVerdict::no_blowup_up_to;
  double r_max = 0.0;
  /// "comparison_bracket", "reached_rmax", "divergent_tail" or "bracket_beyond_rmax".
  std::string certificate;
  int refinements = 0;
  double threshold_radius = 0.0;  ///< radius where the threshold was crossed

  bool blows_up() const { return verdict == BlowupVerdict::blowup; }
  double width() const { return rho_high - rho_low; }
  double midpoint() const { return 0.5 * (rho_low + rho_high); }
};

/// Bracketing failed; carries the best bracket found.
class bracketing_failure : public numerical_error {
public:
  bracketing_failure(const std::string &what, BlowupEstimate best) : numerical_error(what), best_(std::move(best)) {}
  const BlowupEstimate &best() const noexcept { return best_; }

private:
  BlowupEstimate best_;
};

struct BlowupOptions {
  double r_max = 1e3;
  StepControls controls{};
  int max_refinements = 4;
};

namespace detail {

// Two-sided bound on the explosion radius from a state (r0, xi0, w0) past
// which xi is monotone.  With m = N/k - 1, e = N + N/k - 2 and
// E = (r^m xi')^{k+1}, the energy identity gives, for r in [r0, rho),
//   E0 + A(r0) dG <= E(r) <= E0 + A(rho) dG,   A(s) = (k+1) s^e / C(N-1,k-1),
// and rho - r0 = int_{xi0}^inf r^m E^{-1/(k+1)} dxi.
struct RadiusBracket {
  double low;
  double high;
};

inline RadiusBracket remaining_radius_bracket(const ProblemSpec &spec, const Nonlinearity &nl, double r0,
                                              double xi0, double w0, double abs_tol) {
  const int N = spec.N;
  const int k = spec.k;
  const double m = double(N) / k - 1.0;
  const double e = N + double(N) / k - 2.0;
  const double cdiv = spec.c_div();
  const double E0 = std::pow(std::pow(r0, m) * w0, k + 1);
  const TailIntegralOptions opt{abs_tol, 1e-11, 1e300, std::size_t{1} << 18};

  // Quadrature error widens the bracket outward on both sides.
  const double A_lo = (k + 1) / cdiv * std::pow(r0, e);
  const auto lo = ko_type_integral(nl, xi0, E0, A_lo, opt);
  const double J_lo = lo.value + lo.error_bound;
  double rho = r0;
  bool bounded = false;
  for (int it = 0; it < 10000; ++it) {
    const double next = r0 + std::pow(rho, m) * J_lo;
    if (!std::isfinite(next) || next > 1e6 * (1.0 + r0)) break;
    if (std::abs(next - rho) <= 1e-15 * next) {
      rho = next;
      bounded = true;
      break;
    }
    rho = next;
  }
  if (!bounded) return {r0, inf};
  const double A_hi = (k + 1) / cdiv * std::pow(rho, e);
  const auto hi = ko_type_integral(nl, xi0, E0, A_hi, opt);
  const double J_hi = std::max(hi.value - hi.error_bound, 0.0);
  return {r0 + std::pow(r0, m) * J_hi, rho};
}

} // namespace detail

/// Bracket the explosion radius rho(beta), or certify no blow-up up to r_max.
inline BlowupEstimate blowup_radius(const ProblemSpec &spec, const Nonlinearity &nl, double beta,
                                    double bracket_tol = 1e-4, const BlowupOptions &opt = {}) {
  if (!(bracket_tol > 0.0)) throw domain_error("blowup_radius: bracket_tol must be positive");
  BlowupEstimate est;
  est.beta = beta;
  est.r_max = opt.r_max;
  StepControls controls = opt.controls;
  bool threshold_raised = false;
  bool threshold_capped = false;

  for (int attempt = 0;; ++attempt) {
    est.refinements = attempt;
    auto traj = integrate_ivp(spec, nl, beta, opt.r_max, controls);
    est.threshold_radius = traj.last_radius();
    if (traj.termination == Termination::reached_rmax) {
      est.verdict = BlowupVerdict::no_blowup_up_to;
      est.rho_low = opt.r_max;
      est.rho_high = inf;
      est.certificate = "reached_rmax";
      return est;
    }
    if (traj.termination == Termination::step_underflow && attempt > 0 && threshold_raised) {
      // The raised threshold sits closer to the singularity than r can
      // resolve (fast sources); keep the previous one, tighten tolerances only.
      controls.blowup_threshold /= 1e4;
      threshold_raised = false;
      threshold_capped = true;
      continue;
    }
    if (traj.termination == Termination::step_underflow) {
      est.rho_low = traj.last_radius();
      est.rho_high = inf;
      throw bracketing_failure("blowup_radius: step underflow before a blow-up verdict", est);
    }
    if (nl.kind() != NonlinearityKind::constant && !fit_tail(nl).converges()) {
      // A divergent tail makes the remaining radius infinite from any state.
      est.verdict = BlowupVerdict::no_blowup_up_to;
      est.rho_low = opt.r_max;
      est.rho_high = inf;
      est.certificate = "divergent_tail";
      return est;
    }
    const std::size_t last = traj.size() - 1;
    const double r_end = traj.r[last];
    const double weight = std::max(1.0, std::pow(r_end, double(spec.N) / spec.k - 1.0));
    const double j_tol = 1e-3 * bracket_tol * std::pow(1e-2, attempt) / weight;
    const auto br = detail::remaining_radius_bracket(spec, nl, r_end, traj.xi[last], traj.xip[last], j_tol);
    // The threshold state carries the integrator's global error; pad by a
    // multiple of the relative tolerance at that radius.
    const double pad = 10.0 * controls.rel_tol * r_end;
    est.rho_low = std::max(r_end, br.low - pad);
    est.rho_high = br.high + pad;
    if (est.rho_low > opt.r_max) {
      est.verdict = BlowupVerdict::no_blowup_up_to;
      est.certificate = "bracket_beyond_rmax";
      return est;
    }
    est.verdict = BlowupVerdict::blowup;
    est.certificate = "comparison_bracket";
    if (est.width() <= bracket_tol) return est;
    if (attempt >= opt.max_refinements)
      throw bracketing_failure("blowup_radius: bracket wider than requested after refinement", est);
    controls.abs_tol = std::max(controls.abs_tol * 0.1, 1e-14);
    controls.rel_tol = std::max(controls.rel_tol * 0.1, 1e-14);
    threshold_raised = !threshold_capped;
    if (threshold_raised) controls.blowup_threshold *= 1e4;
  }
}

struct EnergyResidual {
  double identity = 0.0;     ///< max |E(r_i) - E(r_1) - int_{r_1}^{r_i} rhs|
  double from_origin = 0.0;  ///< max deviation from the integrated-from-zero form
  double scale = 0.0;        ///< max |E| over the grid
  double max() const { return std::max(identity, from_origin); }
};

/// Check the energy identity [(r^{N/k-1} xi')^{k+1}]' = (k+1)/C g^k(xi) r^{N+N/k-2} xi'
/// along a trajectory, integrating the right side adaptively on each stored
/// step through the Hermite interpolant.
inline EnergyResidual energy_identity_residual(const RadialTrajectory &traj) {
  if (traj.size() < 3) throw domain_error("energy_identity_residual: need at least 3 points");
  const auto &spec = traj.spec();
  const auto &nl = traj.nl();
  const int N = spec.N;
  const int k = spec.k;
  const double m = double(N) / k - 1.0;
  const double e = N + double(N) / k - 2.0;
  const double coef = (k + 1) / spec.c_div();

  auto energy = [&](double r, double w) { return std::pow(std::pow(r, m) * w, k + 1); };
  auto rhs = [&](std::size_t i, double t) {
    const auto [x, w] = traj.hermite_local(i, t);
    return coef * nl.gk(x) * std::pow(traj.r[i] + t * (traj.r[i + 1] - traj.r[i]), e) * w;
  };
  auto G_weight = [&](double s) { return nl.G(traj.value_at(s)) * std::pow(s, e - 1.0); };
  auto G_weight_local = [&](std::size_t i, double t) {
    const double s = traj.r[i] + t * (traj.r[i + 1] - traj.r[i]);
    return nl.G(traj.hermite_local(i, t).first) * std::pow(s, e - 1.0);
  };

  EnergyResidual out;
  const std::size_t first = traj.r.front() == 0.0 ? 1 : 0;
  const double E1 = energy(traj.r[first], traj.xip[first]);
  double integral = 0.0;
  double g_integral = 0.0;
  if (traj.from_origin()) g_integral = quad::gauss_legendre8(G_weight, 0.0, traj.r[first]);

  for (std::size_t i = first; i < traj.size(); ++i) {
    if (i > first) {
      // Steps near blow-up see a steep integrand; one Gauss panel is not enough there.
      auto step = [&](double t) { return rhs(i - 1, t); };
      integral += (traj.r[i] - traj.r[i - 1]) * quad::integrate(step, 0.0, 1.0, {0.0, 1e-13, 64}).value;
      if (traj.from_origin())
        g_integral += (traj.r[i] - traj.r[i - 1]) *
                      quad::gauss_legendre8([&](double t) { return G_weight_local(i - 1, t); }, 0.0, 1.0);
    }
    const double Ei = energy(traj.r[i], traj.xip[i]);
    out.scale = std::max(out.scale, std::abs(Ei));
    out.identity = std::max(out.identity, std::abs(Ei - E1 - integral));
    if (traj.from_origin()) {
      const double closed = coef * (nl.G(traj.xi[i]) * std::pow(traj.r[i], e) - e * g_integral);
      out.from_origin = std::max(out.from_origin, std::abs(Ei - closed));
    }
  }
  return out;
}

} // namespace khessian
