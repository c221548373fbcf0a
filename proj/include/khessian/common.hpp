#pragma once

// Shared error types and small numeric helpers.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace khessian {

/// Precondition or domain violation (bad input, out-of-range order, ...).
class domain_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A numerical procedure failed to deliver its contract.
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Quadrature ran out of its evaluation budget; carries what it had.
class budget_exceeded : public numerical_error {
public:
  budget_exceeded(const std::string &what, double partial_value, double error_estimate)
      : numerical_error(what), partial_value_(partial_value), error_estimate_(error_estimate) {}

  double partial_value() const noexcept { return partial_value_; }
  double error_estimate() const noexcept { return error_estimate_; }

private:
  double partial_value_;
  double error_estimate_;
};

/// Input/output failure (unreadable or unwritable artifact).
class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Binomial coefficient C(n, r) as a double; 0 outside 0 <= r <= n.
inline double binomial(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  if (r > n - r) r = n - r;
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return std::round(c);
}

inline bool is_finite(double x) noexcept { return std::isfinite(x); }

inline constexpr double inf = std::numeric_limits<double>::infinity();

} // namespace khessian
