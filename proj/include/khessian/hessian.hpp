#pragma once

// The k-Hessian sigma_k(lambda) on eigenvalue vectors, its closed radial
// form, the admissible-cone test and the Maclaurin gap.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "khessian/common.hpp"

namespace khessian {

/// Dimension N, order k and (for boundary problems) ball radius R and datum c.
struct ProblemSpec {
  int N = 3;
  int k = 1;
  std::optional<double> R;
  std::optional<double> c;

  ProblemSpec() = default;
  ProblemSpec(int N_, int k_, std::optional<double> R_ = std::nullopt, std::optional<double> c_ = std::nullopt)
      : N(N_), k(k_), R(R_), c(c_) {
    validate();
  }

  void validate() const {
    if (N < 2) throw domain_error("dimension N must be >= 2");
    if (k < 1 || k > N) throw domain_error("Hessian order k must satisfy 1 <= k <= N");
    if (R && !(*R > 0.0)) throw domain_error("ball radius R must be positive");
    if (c && !(*c > 0.0)) throw domain_error("boundary datum c must be positive");
  }

  double radius() const {
    if (!R) throw domain_error("problem has no ball radius R");
    return *R;
  }
  double datum() const {
    if (!c) throw domain_error("problem has no boundary datum c");
    return *c;
  }

  /// C(N-1, k-1), the coefficient of the divergence form.
  double c_div() const { return binomial(N - 1, k - 1); }
  /// C(N, k).
  double c_full() const { return binomial(N, k); }
};

using EigenProfile = std::vector<double>;

/// All elementary symmetric polynomials e_0..e_k of lambda, read off from
/// prod_i (1 + lambda_i x) one factor at a time.
inline std::vector<double> elementary_symmetric(std::span<const double> lambda, int k) {
  std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
  e[0] = 1.0;
  int seen = 0;
  for (double l : lambda) {
    ++seen;
    for (int j = std::min(seen, k); j >= 1; --j) e[j] += l * e[j - 1];
  }
  return e;
}

inline double sigma_k(std::span<const double> lambda, int k) {
  const int N = static_cast<int>(lambda.size());
  if (k < 1 || k > N) throw domain_error("sigma_k: order k out of range 1..N");
  return elementary_symmetric(lambda, k)[k];
}

/// (phi'', phi'/r, ..., phi'/r) for r > 0; (phi'', ..., phi'') at the origin.
inline EigenProfile radial_eigenvalues(int N, double r, double phi1, double phi2) {
  if (N < 1) throw domain_error("radial_eigenvalues: N must be positive");
  if (!(r >= 0.0)) throw domain_error("radial_eigenvalues: negative radius");
  if (r == 0.0) {
    if (phi1 != 0.0) throw domain_error("radial_eigenvalues: inconsistent profile, phi'(0) must vanish");
    return EigenProfile(static_cast<std::size_t>(N), phi2);
  }
  EigenProfile lam(static_cast<std::size_t>(N), phi1 / r);
  lam[0] = phi2;
  return lam;
}

/// Closed radial form of sigma_k. Radii below `origin_cutoff` use the
/// limit phi'/r -> phi'' of a smooth profile.
inline double sigma_k_radial(double r, double phi1, double phi2, const ProblemSpec &spec,
                             double origin_cutoff = 0.0) {
  const int N = spec.N;
  const int k = spec.k;
  if (!(r >= 0.0)) throw domain_error("sigma_k_radial: negative radius");
  if (r == 0.0 && phi1 != 0.0) throw domain_error("sigma_k_radial: inconsistent profile, phi'(0) must vanish");
  if (r == 0.0 || r < origin_cutoff) return spec.c_full() * std::pow(phi2, k);
  const double s = phi1 / r;
  const double c = spec.c_div();
  return c * phi2 * std::pow(s, k - 1) + c * double(N - k) / k * std::pow(s, k);
}

/// Strictness threshold for sigma_j > 0.
inline double admissibility_floor(std::span<const double> lambda, int j) {
  double norm2 = 0.0;
  for (double l : lambda) norm2 += l * l;
  return 1e-14 * std::max(1.0, std::pow(std::sqrt(norm2), j));
}

/// First order j <= k with sigma_j(lambda) <= 0 (up to roundoff), or 0 if admissible.
inline int first_inadmissible_order(std::span<const double> lambda, int k) {
  const int N = static_cast<int>(lambda.size());
  if (k < 1 || k > N) throw domain_error("admissibility: order k out of range 1..N");
  const auto e = elementary_symmetric(lambda, k);
  for (int j = 1; j <= k; ++j)
    if (!(e[j] > admissibility_floor(lambda, j))) return j;
  return 0;
}

/// lambda lies in the Garding cone: sigma_j > 0 for j = 1..k.
inline bool is_k_admissible(std::span<const double> lambda, int k) { return first_inadmissible_order(lambda, k) == 0; }

/// sigma_1/N - (sigma_k / C(N,k))^{1/k}; non-negative on the admissible cone.
inline double maclaurin_gap(std::span<const double> lambda, int k) {
  const int N = static_cast<int>(lambda.size());
  if (const int j = first_inadmissible_order(lambda, k); j != 0)
    throw domain_error("maclaurin_gap: eigenvalues not k-admissible (sigma_" + std::to_string(j) + " <= 0)");
  const auto e = elementary_symmetric(lambda, k);
  return e[1] / N - std::pow(e[k] / binomial(N, k), 1.0 / k);
}

} // namespace khessian
