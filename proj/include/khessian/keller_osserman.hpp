#pragma once

// The generalized Keller-Osserman integral
//
//     K(beta) = int_beta^inf dt / ((k+1) (G(t) - G(beta)))^{1/(k+1)}
//
// and the closely related blow-up "remaining radius" integral
//
//     J = int_x0^inf dt / (E0 + A (G(t) - G(x0)))^{1/(k+1)},
//
// both evaluated by one engine: an endpoint substitution t = x0 + s^{(k+1)/k}
// on [x0, 2 x0], then geometric chunks [T, 4T] in log t until a remainder
// bound falls below tolerance.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "khessian/common.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/quadrature.hpp"

namespace khessian {

/// Tabulated data too short for a tail analysis.
class insufficient_data : public domain_error {
public:
  using domain_error::domain_error;
};

enum class KOVerdict { converges, diverges };
enum class DivergenceReason { none, tail };

struct KOReport {
  double beta = 0.0;
  KOVerdict verdict = KOVerdict::diverges;
  double value = inf;        ///< K(beta); +inf when divergent
  double error_bound = inf;  ///< quadrature error + tail remainder bound
  DivergenceReason reason = DivergenceReason::none;
  double tail_cutoff = 0.0;  ///< truncation point T (or end of the slope fit when divergent)
  double tail_exponent = 0.0;  ///< fitted exponent of the integrand at infinity
  bool singular_substitution_used = false;
  std::size_t intervals = 0;

  bool converges() const { return verdict == KOVerdict::converges; }
};

/// Log-log slope fit of G over the last two decades of its usable range.
struct TailFit {
  double slope = 0.0;          ///< d log G / d log t
  double integrand_exponent = 0.0;  ///< -slope / (k+1)
  double t_end = 0.0;
  bool converges() const { return integrand_exponent < -1.0 - 1e-3; }
};

inline TailFit fit_tail(const Nonlinearity &nl) {
  TailFit fit;
  const int k = nl.k();
  double t_end = 0.0;
  if (nl.kind() == NonlinearityKind::table) {
    const auto &u = nl.table_u();
    t_end = u.back();
    if (t_end / 100.0 < u[1]) throw insufficient_data("tabulated range spans less than two decades; no tail analysis possible");
  } else {
    // Walk out by decades while G stays comfortably finite.
    t_end = 100.0;
    for (double t = 1000.0; t <= 1e8; t *= 10.0) {
      const double Gt = nl.G(t);
      if (!std::isfinite(Gt) || Gt > 1e250) break;
      t_end = t;
    }
  }
  const double t_lo = t_end / 100.0;
  const double G_hi = nl.G(t_end);
  const double G_lo = nl.G(t_lo);
  fit.t_end = t_end;
  if (!std::isfinite(G_hi))
    fit.slope = inf;
  else
    fit.slope = std::log(G_hi / G_lo) / std::log(100.0);
  fit.integrand_exponent = -fit.slope / (k + 1);
  return fit;
}

struct TailIntegralOptions {
  double abs_tol = 1e-8;
  double rel_tol = 0.0;
  double cap = 1e300;  ///< largest truncation point
  std::size_t max_intervals = std::size_t{1} << 20;
};

struct TailIntegral {
  double value = 0.0;
  double error_bound = 0.0;
  double tail_cutoff = 0.0;
  std::size_t intervals = 0;
};

/// int_x0^inf (E0 + A (G(t) - G(x0)))^{-1/(k+1)} dt with E0 >= 0, A > 0.
/// Throws budget_exceeded when the tolerance cannot be met.
inline TailIntegral ko_type_integral(const Nonlinearity &nl, double x0, double E0, double A,
                                     const TailIntegralOptions &opt = {}) {
  if (!(x0 > 0.0)) throw domain_error("lower limit must be positive");
  if (!(A > 0.0) || !(E0 >= 0.0)) throw domain_error("integral coefficients must satisfy E0 >= 0, A > 0");
  const int k = nl.k();
  const double root = -1.0 / (k + 1);
  const double alpha = double(k + 1) / k;
  const double t_max = nl.domain_max();

  auto phi = [&](double t) {
    const double d = E0 + A * nl.G_increment(x0, t);
    if (!std::isfinite(d)) return 0.0;
    return std::pow(d, root);
  };
  // Same integrand by offset from x0; rounding x0 + h would swamp small h.
  auto phi_offset = [&](double h) {
    const double d = E0 + A * nl.G_offset(x0, h);
    if (!std::isfinite(d)) return 0.0;
    return std::pow(d, root);
  };

  TailIntegral out;
  double err = 0.0;
  auto budget_left = [&] { return opt.max_intervals > out.intervals ? opt.max_intervals - out.intervals : 0; };
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(out.value)); };

  // Head: t = x0 + s^alpha removes the (t - x0)^{-1/(k+1)} singularity.
  const double x1 = std::min(2.0 * x0, t_max);
  const double s1 = std::pow(x1 - x0, 1.0 / alpha);
  auto head = [&](double s) {
    if (s <= 0.0) return 0.0;
    return phi_offset(std::pow(s, alpha)) * alpha * std::pow(s, alpha - 1.0);
  };
  auto h = quad::integrate(head, 0.0, s1, {opt.abs_tol / 16, std::max(opt.rel_tol / 16, 1e-13), budget_left()});
  out.value += h.value;
  err += h.error;
  out.intervals += h.intervals;
  if (!h.converged) throw budget_exceeded("Keller-Osserman head integral did not converge", out.value, err);

  auto remainder = [&](double T) {
    if (T >= t_max) return 0.0;
    const double dG = nl.G_increment(x0, T);
    if (!std::isfinite(dG)) return 0.0;
    const double GT = nl.G(T);
    const double s = std::isfinite(GT) ? T * nl.gk(T) / GT : inf;
    const double decay = s / (k + 1) - 1.0;
    if (!(decay > 0.0)) return inf;
    if (!std::isfinite(decay)) return 0.0;
    return std::pow(A * dG, root) * T / decay;
  };

  double T = x1;
  double rem = remainder(T);
  while (rem > 0.5 * target()) {
    if (T >= t_max || T >= opt.cap)
      throw budget_exceeded("Keller-Osserman tail remainder above tolerance at the truncation cap", out.value,
                            err + rem);
    const double T_next = std::min({4.0 * T, t_max, opt.cap});
    auto chunk = [&](double v) {
      const double t = std::exp(v);
      return phi(t) * t;
    };
    auto c = quad::integrate(chunk, std::log(T), std::log(T_next),
                             {opt.abs_tol / 64, std::max(opt.rel_tol / 64, 1e-13), budget_left()});
    out.value += c.value;
    err += c.error;
    out.intervals += c.intervals;
    if (!c.converged) throw budget_exceeded("Keller-Osserman tail chunk did not converge", out.value, err);
    T = T_next;
    rem = remainder(T);
  }
  out.tail_cutoff = T;
  out.error_bound = err + rem;
  return out;
}

/// int_x0^x1 (E0 + A (G(t) - G(x0)))^{-1/(k+1)} dt over a finite range, with
/// the same endpoint substitution on [x0, 2 x0] and a log variable beyond.
inline quad::QuadResult ko_type_segment(const Nonlinearity &nl, double x0, double x1, double E0, double A,
                                        const quad::QuadOptions &opt = {1e-13, 1e-12, std::size_t{1} << 18}) {
  if (!(x0 > 0.0) || !(x1 >= x0)) throw domain_error("segment limits must satisfy 0 < x0 <= x1");
  if (!(A > 0.0) || !(E0 >= 0.0)) throw domain_error("integral coefficients must satisfy E0 >= 0, A > 0");
  const int k = nl.k();
  const double root = -1.0 / (k + 1);
  const double alpha = double(k + 1) / k;
  auto phi = [&](double t) {
    const double d = E0 + A * nl.G_increment(x0, t);
    if (!std::isfinite(d)) return 0.0;
    return std::pow(d, root);
  };
  auto phi_offset = [&](double h) {
    const double d = E0 + A * nl.G_offset(x0, h);
    if (!std::isfinite(d)) return 0.0;
    return std::pow(d, root);
  };
  const double xm = std::min(2.0 * x0, x1);
  auto head = [&](double s) {
    if (s <= 0.0) return 0.0;
    return phi_offset(std::pow(s, alpha)) * alpha * std::pow(s, alpha - 1.0);
  };
  auto out = quad::integrate(head, 0.0, std::pow(xm - x0, 1.0 / alpha), opt);
  if (x1 > xm) {
    auto body = [&](double v) {
      const double t = std::exp(v);
      return phi(t) * t;
    };
    const auto b = quad::integrate(body, std::log(xm), std::log(x1), opt);
    out.value += b.value;
    out.error += b.error;
    out.intervals += b.intervals;
    out.evaluations += b.evaluations;
    out.converged = out.converged && b.converged;
  }
  return out;
}

/// K(beta) with divergence detection from the tail exponent of G.
inline KOReport ko_integral(const Nonlinearity &nl, double beta, double tol = 1e-8) {
  if (nl.is_test_only()) throw domain_error("constant nonlinearity is excluded from Keller-Osserman analysis");
  if (!(beta > 0.0)) throw domain_error("ko_integral needs beta > 0");
  if (!(tol > 0.0)) throw domain_error("ko_integral needs tol > 0");
  if (beta >= nl.domain_max()) throw domain_error("beta lies outside the tabulated range");
  KOReport r;
  r.beta = beta;
  const TailFit fit = fit_tail(nl);
  r.tail_exponent = fit.integrand_exponent;
  if (!fit.converges()) {
    r.verdict = KOVerdict::diverges;
    r.reason = DivergenceReason::tail;
    r.tail_cutoff = fit.t_end;
    return r;
  }
  const int k = nl.k();
  auto ti = ko_type_integral(nl, beta, 0.0, double(k + 1), {tol, 0.0, 1e300, std::size_t{1} << 20});
  r.verdict = KOVerdict::converges;
  r.value = ti.value;
  r.error_bound = ti.error_bound;
  r.tail_cutoff = ti.tail_cutoff;
  r.singular_substitution_used = true;
  r.intervals = ti.intervals;
  return r;
}

enum class KOClass { holds, fails };

inline std::string to_string(KOClass c) { return c == KOClass::holds ? "Holds" : "Fails"; }

/// Canonical witness point for the classification.
inline double canonical_beta(const Nonlinearity &nl) {
  return nl.kind() == NonlinearityKind::table ? std::min(1.0, nl.domain_max() / 100.0) : 1.0;
}

inline KOClass ko_classify(const Nonlinearity &nl) {
  if (nl.is_test_only()) throw domain_error("constant nonlinearity is excluded from Keller-Osserman classification");
  const TailFit fit = fit_tail(nl);
  if (!fit.converges()) return KOClass::fails;
  const auto rep = ko_integral(nl, canonical_beta(nl), 1e-6);
  return rep.converges() ? KOClass::holds : KOClass::fails;
}

/// K(beta_i) along an increasing sequence; the running minimum must fall toward 0
/// for nonlinearities satisfying the condition.
inline std::vector<KOReport> sharpened_ko_scan(const Nonlinearity &nl, const std::vector<double> &betas,
                                               double tol = 1e-8) {
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw domain_error("scan betas must be positive");
    if (i > 0 && !(betas[i] > betas[i - 1])) throw domain_error("scan betas must increase strictly");
  }
  std::vector<KOReport> out;
  out.reserve(betas.size());
  for (double b : betas) out.push_back(ko_integral(nl, b, tol));
  return out;
}

} // namespace khessian
