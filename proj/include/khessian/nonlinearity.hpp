#pragma once

// Admissible nonlinearities g and the antiderivative G(t) = int_0^t g^k.
//
// A Nonlinearity is immutable after construction.  Every kind evaluates as
//
//     g(u) = scale * base(u)^outer
//
// where base is u^p, e^{au} - 1, a constant, or a monotone cubic through a
// table.  `outer` is 1 for user-facing nonlinearities; the Laplace
// supersolution companion N (g / C(N,k))^{1/k} is the only producer of
// outer != 1.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

// Boost 1.74's pchip calls isnan unqualified.
#include <math.h>
#include <boost/math/interpolators/pchip.hpp>
#include <nlohmann/json.hpp>

#include "khessian/common.hpp"
#include "khessian/quadrature.hpp"

namespace khessian {

enum class NonlinearityKind { power, expm1, constant, table };

inline std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::power: return "power";
    case NonlinearityKind::expm1: return "expm1";
    case NonlinearityKind::constant: return "constant";
    case NonlinearityKind::table: return "table";
  }
  return "unknown";
}

/// Result of sampling the (G1) shape conditions on a grid.
struct ShapeCheck {
  bool vanishes_at_zero = true;
  bool positive = true;
  bool monotone = true;
  bool convex = true;
  bool ok() const { return vanishes_at_zero && positive && monotone && convex; }
};

class Nonlinearity {
public:
  static Nonlinearity power(double p, int k, double scale = 1.0) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw domain_error("power nonlinearity needs p >= 1");
    Nonlinearity nl(NonlinearityKind::power, k, scale);
    nl.param_ = p;
    return nl;
  }

  static Nonlinearity expm1(double a, int k, double scale = 1.0) {
    if (!(a > 0.0) || !std::isfinite(a)) throw domain_error("expm1 nonlinearity needs rate a > 0");
    Nonlinearity nl(NonlinearityKind::expm1, k, scale);
    nl.param_ = a;
    return nl;
  }

  /// Test-only kind: g is constant, so g(0) != 0 and KO classification is refused.
  static Nonlinearity constant(double c, int k) {
    if (!(c > 0.0) || !std::isfinite(c)) throw domain_error("constant nonlinearity needs c > 0");
    Nonlinearity nl(NonlinearityKind::constant, k, 1.0);
    nl.param_ = c;
    return nl;
  }

  /// Monotone cubic through (u_i, g_i); u must start at 0 and increase strictly.
  static Nonlinearity table(std::vector<double> u, std::vector<double> g, int k) {
    if (u.size() != g.size()) throw domain_error("table: u and g lengths differ");
    if (u.size() < 4) throw domain_error("table: at least four samples are required");
    if (u.front() != 0.0) throw domain_error("table: first abscissa must be 0");
    for (std::size_t i = 1; i < u.size(); ++i) {
      if (!(u[i] > u[i - 1])) throw domain_error("table: abscissae must increase strictly");
      if (g[i] < g[i - 1]) throw domain_error("table: g must be non-decreasing");
    }
    if (g.front() != 0.0) throw domain_error("table: g(0) must be 0");
    if (!(g[1] > 0.0)) throw domain_error("table: g must be positive for u > 0");
    for (std::size_t i = 2; i < u.size(); ++i) {
      const double s0 = (g[i - 1] - g[i - 2]) / (u[i - 1] - u[i - 2]);
      const double s1 = (g[i] - g[i - 1]) / (u[i] - u[i - 1]);
      if (s1 < s0 - 1e-12 * std::max(1.0, std::abs(s0))) throw domain_error("table: g must be convex");
    }
    Nonlinearity nl(NonlinearityKind::table, k, 1.0);
    auto t = std::make_shared<Table>();
    t->u = u;
    t->g = g;
    auto uu = u;
    auto gg = g;
    t->interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(uu),
                                                                                         std::move(gg));
    nl.table_ = std::move(t);
    nl.build_table_antiderivative();
    return nl;
  }

  NonlinearityKind kind() const { return kind_; }
  int k() const { return k_; }
  double scale() const { return scale_; }
  double outer() const { return outer_; }
  /// p for power, a for expm1, c for constant; unused for table.
  double parameter() const { return param_; }
  bool is_test_only() const { return kind_ == NonlinearityKind::constant; }
  /// Tabulated data cannot certify the C^{2+alpha} regularity of g^k.
  bool regularity_unchecked() const { return kind_ == NonlinearityKind::table; }
  /// Largest u at which g may be evaluated.
  double domain_max() const { return kind_ == NonlinearityKind::table ? table_->u.back() : inf; }
  const std::vector<double> &table_u() const { return table_->u; }
  const std::vector<double> &table_g() const { return table_->g; }

  /// Same g, different Hessian order.
  Nonlinearity with_k(int k) const {
    Nonlinearity c = *this;
    if (k < 1) throw domain_error("Hessian order k must be >= 1");
    c.k_ = k;
    if (c.table_) c.build_table_antiderivative();
    return c;
  }

  /// c * g (same kind and order).
  Nonlinearity scaled(double c) const {
    if (!(c > 0.0)) throw domain_error("scaling factor must be positive");
    Nonlinearity out = *this;
    if (kind_ == NonlinearityKind::constant)
      out.param_ *= c;
    else
      out.scale_ *= c;
    if (out.table_) out.build_table_antiderivative();
    return out;
  }

  /// scale * g^{outer} as an order-`k` nonlinearity.
  Nonlinearity root_transform(double scale, double outer, int k) const {
    Nonlinearity out = *this;
    out.scale_ = scale * std::pow(scale_, outer);
    out.outer_ = outer_ * outer;
    out.k_ = k;
    if (kind_ == NonlinearityKind::constant) {
      out.param_ = out.scale_ * std::pow(param_, out.outer_);
      out.scale_ = 1.0;
      out.outer_ = 1.0;
    }
    if (out.table_) out.build_table_antiderivative();
    return out;
  }

  /// g(u).
  double g(double u) const {
    if (!(u >= 0.0)) throw domain_error("g evaluated at negative argument");
    if (u > domain_max()) throw domain_error("g evaluated beyond the tabulated range");
    return scale_ * apply_outer(base(u));
  }

  /// g(u)^k.
  double gk(double u) const {
    const double v = g(u);
    return ipow(v, k_);
  }

  /// G(t) = int_0^t g^k.
  double G(double t) const {
    if (!(t >= 0.0)) throw domain_error("G evaluated at negative argument");
    return G_increment(0.0, t);
  }

  /// int_a^b g^k for 0 <= a <= b, without cancellation for short intervals.
  double G_increment(double a, double b) const {
    if (!(a >= 0.0) || !(b >= a)) throw domain_error("G_increment needs 0 <= a <= b");
    if (a == b) return 0.0;
    if (b > domain_max()) throw domain_error("G evaluated beyond the tabulated range");
    switch (kind_) {
      case NonlinearityKind::power: {
        const double q1 = param_ * outer_ * k_ + 1.0;
        const double c = ipow(scale_, k_) / q1;
        if (a == 0.0) return c * std::pow(b, q1);
        return c * std::pow(a, q1) * std::expm1(q1 * std::log1p((b - a) / a));
      }
      case NonlinearityKind::constant: return ipow(param_, k_) * (b - a);
      case NonlinearityKind::table: return table_G(b) - table_G(a);
      case NonlinearityKind::expm1: return quadrature_increment(a, b);
    }
    return 0.0;
  }

  /// int_a^{a+h} g^k, taking the offset h directly so that a + h is never rounded.
  double G_offset(double a, double h) const {
    if (!(a >= 0.0) || !(h >= 0.0)) throw domain_error("G_offset needs a >= 0, h >= 0");
    if (h == 0.0) return 0.0;
    if (a + h > domain_max()) throw domain_error("G evaluated beyond the tabulated range");
    switch (kind_) {
      case NonlinearityKind::power: {
        const double q1 = param_ * outer_ * k_ + 1.0;
        const double c = ipow(scale_, k_) / q1;
        if (a == 0.0) return c * std::pow(h, q1);
        return c * std::pow(a, q1) * std::expm1(q1 * std::log1p(h / a));
      }
      case NonlinearityKind::constant: return ipow(param_, k_) * h;
      case NonlinearityKind::expm1: {
        const double width = std::max(1.0 / (param_ * k_ * std::max(outer_, 1e-3)), 1e-300);
        if (h > width) return quadrature_increment(a, a + h);
        auto f = [&](double x) { return ipow(scale_ * apply_outer(base(a + h * x)), k_); };
        return h * quad::integrate(f, 0.0, 1.0, {0.0, 1e-14, 256}).value;
      }
      case NonlinearityKind::table: break;
    }
    return G_increment(a, a + h);
  }

  /// Log-elasticity t g^k(t) / G(t) of the antiderivative.
  double elasticity(double t) const {
    const double Gt = G(t);
    if (!(Gt > 0.0)) return 0.0;
    return t * gk(t) / Gt;
  }

  /// Sample the (G1) shape conditions on `samples` points of [0, u_max].
  ShapeCheck check_shape(double u_max, int samples = 200) const {
    ShapeCheck s;
    u_max = std::min(u_max, domain_max());
    if (g(0.0) != 0.0) s.vanishes_at_zero = false;
    std::vector<double> us(samples + 1), gs(samples + 1);
    for (int i = 0; i <= samples; ++i) {
      us[i] = u_max * i / samples;
      gs[i] = g(us[i]);
      if (i > 0 && !(gs[i] > 0.0)) s.positive = false;
      if (i > 0 && gs[i] < gs[i - 1] * (1.0 - 1e-14)) s.monotone = false;
    }
    for (int i = 1; i < samples; ++i) {
      const double mid = 0.5 * (gs[i - 1] + gs[i + 1]);
      if (gs[i] > mid + 1e-12 * std::max(1.0, std::abs(mid))) s.convex = false;
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind_);
    switch (kind_) {
      case NonlinearityKind::power: j["p"] = param_; break;
      case NonlinearityKind::expm1: j["a"] = param_; break;
      case NonlinearityKind::constant: j["c"] = param_; break;
      case NonlinearityKind::table:
        j["u"] = table_->u;
        j["g"] = table_->g;
        break;
    }
    if (scale_ != 1.0) j["scale"] = scale_;
    if (outer_ != 1.0) j["outer"] = outer_;
    j["k"] = k_;
    return j;
  }

  /// Parse {"kind": ..., parameters..., "k": ...}; `default_k` fills a missing "k".
  static Nonlinearity from_json(const nlohmann::json &j, int default_k = 0) {
    auto field = [&](const char *name) -> double {
      if (!j.contains(name)) throw domain_error(std::string("nonlinearity: missing field '") + name + "'");
      if (!j.at(name).is_number()) throw domain_error(std::string("nonlinearity: field '") + name + "' must be a number");
      return j.at(name).get<double>();
    };
    if (!j.is_object()) throw domain_error("nonlinearity: expected a JSON object");
    if (!j.contains("kind") || !j.at("kind").is_string()) throw domain_error("nonlinearity: missing field 'kind'");
    int k = default_k;
    if (j.contains("k")) {
      if (!j.at("k").is_number_integer()) throw domain_error("nonlinearity: field 'k' must be an integer");
      k = j.at("k").get<int>();
    }
    if (k < 1) throw domain_error("nonlinearity: field 'k' must be a positive integer");
    const double scale = j.contains("scale") ? field("scale") : 1.0;
    const std::string kind = j.at("kind").get<std::string>();
    Nonlinearity nl = [&] {
      if (kind == "power") return power(field("p"), k);
      if (kind == "expm1") return expm1(field("a"), k);
      if (kind == "constant") return constant(field("c"), k);
      if (kind == "table") {
        if (!j.contains("u") || !j.contains("g")) throw domain_error("nonlinearity: table needs 'u' and 'g'");
        try {
          return table(j.at("u").get<std::vector<double>>(), j.at("g").get<std::vector<double>>(), k);
        } catch (const nlohmann::json::exception &) {
          throw domain_error("nonlinearity: table fields 'u' and 'g' must be numeric arrays");
        }
      }
      throw domain_error("nonlinearity: unknown kind '" + kind + "'");
    }();
    if (scale != 1.0) nl = nl.scaled(scale);
    if (j.contains("outer")) nl = nl.root_transform(1.0, field("outer"), k);
    return nl;
  }

  std::string describe() const { return to_json().dump(); }

private:
  struct Table {
    std::vector<double> u, g;
    std::vector<double> G_nodes;  // G at each abscissa for the current k/scale/outer
    std::shared_ptr<boost::math::interpolators::pchip<std::vector<double>>> interp;
  };

  Nonlinearity(NonlinearityKind kind, int k, double scale) : kind_(kind), k_(k), scale_(scale) {
    if (k < 1) throw domain_error("Hessian order k must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw domain_error("nonlinearity scale must be positive");
  }

  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }

  double apply_outer(double b) const { return outer_ == 1.0 ? b : std::pow(b, outer_); }

  double base(double u) const {
    switch (kind_) {
      case NonlinearityKind::power: return std::pow(u, param_);
      case NonlinearityKind::expm1: return std::expm1(param_ * u);
      case NonlinearityKind::constant: return param_;
      case NonlinearityKind::table: return std::max(0.0, (*table_->interp)(u));
    }
    return 0.0;
  }

  // g^k = scale^k (e^{alpha u} - 1)^m with integer m: binomial expansion.
  // Cancellation in the alternating sum is bounded once alpha u >= 1.
  std::optional<int> expm1_integer_power() const {
    if (kind_ != NonlinearityKind::expm1) return std::nullopt;
    const double m = outer_ * k_;
    const double mr = std::round(m);
    if (std::abs(m - mr) > 1e-12 || mr < 1.0 || mr > 16.0) return std::nullopt;
    return static_cast<int>(mr);
  }

  double expm1_closed_increment(int m, double a, double b) const {
    const double alpha = param_;
    double sum = (m % 2 == 0 ? 1.0 : -1.0) * (b - a);
    double binom = 1.0;
    for (int j = 1; j <= m; ++j) {
      binom = binom * (m - j + 1) / j;
      const double ja = j * alpha;
      const double term = binom * std::exp(ja * a) * std::expm1(ja * (b - a)) / ja;
      sum += ((m - j) % 2 == 0 ? 1.0 : -1.0) * term;
    }
    return ipow(scale_, k_) * sum;
  }

  double quadrature_increment(double a, double b) const {
    if (const auto m = expm1_integer_power()) {
      const double u0 = 1.0 / param_;
      if (b > u0) {
        const double lo = std::max(a, u0);
        const double head = a < u0 ? quadrature_increment(a, u0) : 0.0;
        return head + expm1_closed_increment(*m, lo, b);
      }
    }
    auto f = [this](double z) { return ipow(scale_ * apply_outer(base(z)), k_); };
    // Panels of unit width in the exponent keep each GK panel well resolved.
    const double width = std::max(1.0 / (param_ * k_ * std::max(outer_, 1e-3)), 1e-300);
    if (b - a <= width) {
      auto r = quad::integrate(f, a, b, {0.0, 1e-14, 256});
      return r.value;
    }
    double total = 0.0;
    double lo = a;
    while (lo < b) {
      const double hi = std::min(b, lo + width);
      total += quad::integrate(f, lo, hi, {0.0, 1e-14, 256}).value;
      if (!std::isfinite(total)) return inf;
      lo = hi;
    }
    return total;
  }

  void build_table_antiderivative() {
    auto t = std::make_shared<Table>(*table_);
    t->G_nodes.assign(t->u.size(), 0.0);
    for (std::size_t i = 1; i < t->u.size(); ++i)
      t->G_nodes[i] = t->G_nodes[i - 1] + table_segment(*t, t->u[i - 1], t->u[i]);
    table_ = std::move(t);
  }

  double table_segment(const Table &t, double a, double b) const {
    auto f = [&](double z) { return ipow(scale_ * apply_outer(std::max(0.0, (*t.interp)(z))), k_); };
    // pchip^k is a polynomial of degree 3k on each cell; GL8 is exact up to k = 5.
    const int panels = k_ <= 5 ? 1 : 4;
    double s = 0.0;
    for (int i = 0; i < panels; ++i)
      s += quad::gauss_legendre8(f, a + (b - a) * i / panels, a + (b - a) * (i + 1) / panels);
    return s;
  }

  double table_G(double t) const {
    const auto &u = table_->u;
    auto it = std::upper_bound(u.begin(), u.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(u.begin(), it));
    if (i == 0) return 0.0;
    --i;
    if (i >= u.size() - 1) return table_->G_nodes.back();
    return table_->G_nodes[i] + table_segment(*table_, u[i], t);
  }

  NonlinearityKind kind_;
  int k_ = 1;
  double scale_ = 1.0;
  double outer_ = 1.0;
  double param_ = 0.0;
  std::shared_ptr<const Table> table_;
};

inline double eval_g(const Nonlinearity &nl, double u) { return nl.g(u); }
inline double eval_G(const Nonlinearity &nl, double t) { return nl.G(t); }

} // namespace khessian
