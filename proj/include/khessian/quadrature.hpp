#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature with an explicit
// subinterval budget, plus a fixed Gauss-Legendre rule for short panels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "khessian/common.hpp"

namespace khessian::quad {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;         ///< estimated absolute error
  std::size_t intervals = 0;  ///< subintervals in the final partition
  std::size_t evaluations = 0;
  bool converged = false;
};

struct QuadOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  std::size_t max_intervals = std::size_t{1} << 20;
};

namespace detail {

// Kronrod abscissae (descending); odd entries (1,3,5) are the Gauss nodes.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel &o) const { return error < o.error; }
};

template <class F>
Panel gk15(F &f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  std::array<double, 15> fv;
  fv[7] = fc;
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    fv[j] = f(c - dx);
    fv[14 - j] = f(c + dx);
    resk += kWgk[j] * (fv[j] + fv[14 - j]);
    if (j % 2 == 1) resg += kWg[j / 2] * (fv[j] + fv[14 - j]);
  }
  const double value = resk * h;
  // QUADPACK scaling of the raw Kronrod-Gauss difference, relative to the
  // mean deviation of f on the panel.
  const double mean = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) resasc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
  resasc *= std::abs(h);
  double err = std::abs((resk - resg) * h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  err = std::max(err, 50.0 * std::numeric_limits<double>::epsilon() * std::abs(value));
  return {a, b, value, err};
}

} // namespace detail

/// Integrate f over [a, b]. Never throws for non-convergence; the caller
/// inspects `converged` and decides.
template <class F>
QuadResult integrate(F &&f, double a, double b, const QuadOptions &opt = {}) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::priority_queue<detail::Panel> heap;
  auto first = detail::gk15(f, a, b);
  heap.push(first);
  double total = first.value;
  double total_err = first.error;
  out.evaluations = 15;
  const double min_width = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(b - a);

  while (total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (heap.size() >= opt.max_intervals) break;
    auto worst = heap.top();
    if (std::abs(worst.b - worst.a) < min_width) break;
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of incremental updates.
  total = 0.0;
  total_err = 0.0;
  out.intervals = heap.size();
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.converged = std::isfinite(total) && total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  return out;
}

/// Fixed 8-point Gauss-Legendre rule on [a, b]; exact for degree 15.
template <class F>
double gauss_legendre8(F &&f, double a, double b) {
  static constexpr std::array<double, 4> x = {0.183434642495649804939476142360184,
                                              0.525532409916328985817739049189246,
                                              0.796666477413626739591553936475830,
                                              0.960289856497536231683560868569473};
  static constexpr std::array<double, 4> w = {0.362683783378361982965150449277196,
                                              0.313706645877887287337962201986601,
                                              0.222381034453374470544355994426241,
                                              0.101228536290376259152531354309962};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += w[i] * (f(c - h * x[i]) + f(c + h * x[i]));
  return s * h;
}

} // namespace khessian::quad
