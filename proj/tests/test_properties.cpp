#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include "khessian/estimates.hpp"
#include "khessian/hessian.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/ode_ivp.hpp"
#include "khessian/quadrature.hpp"

using namespace khessian;

namespace {

std::mt19937_64 &rng() {
  static std::mt19937_64 g(20240611);
  return g;
}

double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

std::vector<double> random_vector(int N, double a, double b) {
  std::vector<double> v(N);
  for (auto &x : v) x = uniform(a, b);
  return v;
}

double sigma_by_subsets(const std::vector<double> &lam, int k) {
  const int N = static_cast<int>(lam.size());
  double s = 0.0;
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    if (__builtin_popcount(mask) != k) continue;
    double prod = 1.0;
    for (int i = 0; i < N; ++i)
      if (mask & (1u << i)) prod *= lam[i];
    s += prod;
  }
  return s;
}

} // namespace

// ---- sigma_k -------------------------------------------------------------

TEST(Property, RecurrenceMatchesSubsetEnumeration) {
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 2 + trial % 9;
    const auto lam = random_vector(N, -2.0, 3.0);
    double scale = 1.0;
    for (double l : lam) scale *= 1.0 + std::abs(l);
    for (int k = 1; k <= N; ++k)
      ASSERT_NEAR(sigma_k(lam, k), sigma_by_subsets(lam, k), 1e-12 * scale) << "N=" << N << " k=" << k;
  }
}

TEST(Property, PermutationInvariance) {
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 2 + trial % 7;
    auto lam = random_vector(N, -1.0, 2.0);
    const int k = 1 + trial % N;
    const double ref = sigma_k(lam, k);
    std::shuffle(lam.begin(), lam.end(), rng());
    ASSERT_NEAR(sigma_k(lam, k), ref, 1e-13 * (1.0 + std::abs(ref)));
  }
}

TEST(Property, RadialClosedFormMatchesGeneral) {
  for (int trial = 0; trial < 1000; ++trial) {
    const int N = 2 + trial % 7;
    const int k = 1 + (trial / 7) % N;
    const double r = uniform(1e-3, 5.0);
    const double phi1 = uniform(-3.0, 3.0);
    const double phi2 = uniform(-3.0, 3.0);
    const ProblemSpec s(N, k);
    const double general = sigma_k(radial_eigenvalues(N, r, phi1, phi2), k);
    ASSERT_NEAR(sigma_k_radial(r, phi1, phi2, s), general, 1e-12 * (1.0 + std::abs(general)))
        << "N=" << N << " k=" << k << " r=" << r;
  }
}

TEST(Property, ContinuityAtOrigin) {
  const ProblemSpec s(5, 3, 1.0);
  // phi(r) = a r^2/2 + b r^4/4, phi'/r -> a and phi'' -> a.
  const double a = 1.3, b = 0.7;
  const double at0 = sigma_k_radial(0.0, 0.0, a, s);
  double prev = inf;
  for (double r : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const double v = sigma_k_radial(r, a * r + b * r * r * r, a + 3 * b * r * r, s);
    const double d = std::abs(v - at0);
    EXPECT_LT(d, prev);
    prev = d;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Property, MaclaurinOnPositiveOrthantAndNearTheCone) {
  for (auto [N, k] : {std::pair{3, 2}, std::pair{4, 2}, std::pair{4, 3}, std::pair{6, 3}}) {
    int near_boundary = 0;
    for (int i = 0; i < 2000; ++i) {
      const auto lam = random_vector(N, 0.0, 5.0);
      if (is_k_admissible(lam, k)) {
        ASSERT_GE(maclaurin_gap(lam, k), -1e-14);
      }
    }
    while (near_boundary < 500) {
      const auto lam = random_vector(N, -3.0, 5.0);
      if (!is_k_admissible(lam, k) || *std::min_element(lam.begin(), lam.end()) >= 0.0) continue;
      ++near_boundary;
      ASSERT_GE(maclaurin_gap(lam, k), -1e-14);
    }
  }
}

// ---- nonlinearity and Keller-Osserman ------------------------------------

TEST(Property, AntiderivativeIncreasing) {
  for (const auto &nl : {Nonlinearity::power(2.5, 2), Nonlinearity::expm1(0.3, 3), Nonlinearity::power(1, 1)}) {
    for (int i = 0; i < 200; ++i) {
      const double t1 = uniform(0.0, 20.0);
      const double t2 = t1 + uniform(1e-6, 5.0);
      ASSERT_LT(nl.G(t1), nl.G(t2));
    }
  }
}

TEST(Property, ClosedFormAntiderivativeMatchesQuadrature) {
  const double tol = 1e-10;
  for (int i = 0; i < 100; ++i) {
    const double p = uniform(1.0, 4.0);
    const int k = 1 + i % 3;
    const double t = uniform(0.0, 3.0);
    const auto nl = Nonlinearity::power(p, k);
    const auto q = quad::integrate([&](double z) { return nl.gk(z); }, 0.0, t, {tol, 0.0});
    ASSERT_NEAR(nl.G(t), q.value, 10.0 * tol * std::max(1.0, q.value)) << "p=" << p << " k=" << k << " t=" << t;
  }
}

TEST(Property, ClassificationScaleInvariant) {
  for (double p : {1.0, 1.5, 2.0, 3.0})
    for (int k : {1, 2, 3}) {
      const auto base = ko_classify(Nonlinearity::power(p, k));
      for (double c : {1e-3, 0.5, 7.0, 1e3}) ASSERT_EQ(ko_classify(Nonlinearity::power(p, k, c)), base);
    }
}

TEST(Property, EndpointSubstitutionMatchesNaiveExtrapolation) {
  // Naive integral over [beta + eps, inf) with no substitution, then
  // extrapolation in eps^{k/(k+1)} (the leading behaviour of the missing piece).
  boost::math::quadrature::exp_sinh<double> es;
  for (auto [p, k] : {std::pair{2.0, 1}, std::pair{3.0, 2}}) {
    const auto nl = Nonlinearity::power(p, k);
    const double beta = 1.0;
    auto naive = [&](double eps) {
      auto f = [&](double t) { return std::pow((k + 1) * nl.G_increment(beta, t), -1.0 / (k + 1)); };
      return es.integrate([&](double s) { return f(beta + eps + s); }, 1e-12);
    };
    const double s = double(k) / (k + 1);
    const double e1 = 1e-4, e2 = 1e-5;
    const double I1 = naive(e1), I2 = naive(e2);
    const double w1 = std::pow(e1, s), w2 = std::pow(e2, s);
    const double extrap = (I2 * w1 - I1 * w2) / (w1 - w2);
    const auto r = ko_integral(nl, beta);
    EXPECT_NEAR(r.value, extrap, r.error_bound + 1e-5 * r.value) << "p=" << p << " k=" << k;
  }
}

TEST(Property, RunningMinimumFallsWhenRangeExtends) {
  for (const auto &nl : {Nonlinearity::power(2, 1), Nonlinearity::power(3, 2), Nonlinearity::expm1(1, 1)}) {
    auto min_K = [&](double top) {
      std::vector<double> betas;
      for (double b = 1.0; b <= top * (1 + 1e-12); b *= std::sqrt(10.0)) betas.push_back(b);
      double m = inf;
      for (const auto &r : sharpened_ko_scan(nl, betas)) m = std::min(m, r.value);
      return m;
    };
    EXPECT_LT(min_K(100.0), min_K(10.0)) << nl.describe();
  }
}

// ---- integrator ----------------------------------------------------------

TEST(Property, ErrorFallsWithTolerance) {
  const ProblemSpec s(3, 1);
  const auto nl = Nonlinearity::power(1, 1);
  auto err = [&](double tol) {
    StepControls c;
    c.abs_tol = c.rel_tol = tol;
    const auto t = integrate_ivp(s, nl, 1.0, 5.0, c);
    double e = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) e = std::max(e, std::abs(t.xi[i] - std::sinh(t.r[i]) / t.r[i]));
    return e;
  };
  const double e6 = err(1e-6), e8 = err(1e-8), e10 = err(1e-10);
  // Tolerance-proportional control: two decades of tolerance buy well over one decade of error.
  EXPECT_LT(e8, e6 / 10.0);
  EXPECT_LT(e10, e8 / 10.0);
}

TEST(Property, BlowupDichotomy) {
  BlowupOptions o;
  o.r_max = 1e3;
  for (auto [p, k, N] : {std::tuple{2.0, 1, 3}, std::tuple{1.5, 2, 4}, std::tuple{3.0, 3, 6}, std::tuple{1.0, 1, 3},
                         std::tuple{1.0, 2, 4}}) {
    const auto nl = Nonlinearity::power(p, k);
    const bool holds = ko_classify(nl) == KOClass::holds;
    for (double beta : {1.0, 4.0, 16.0}) {
      const auto e = blowup_radius(ProblemSpec(N, k), nl, beta, 1e-4, o);
      ASSERT_EQ(e.blows_up(), holds) << "p=" << p << " k=" << k << " beta=" << beta;
    }
  }
}

TEST(Property, GrowthBoundEverywhere) {
  for (auto [p, N, k] : {std::tuple{2.0, 3, 1}, std::tuple{2.0, 5, 2}, std::tuple{1.5, 4, 3}}) {
    const auto t = integrate_ivp(ProblemSpec(N, k), Nonlinearity::power(p, k), 2.0, 1e3);
    EXPECT_TRUE(check_growth_bound(t).pass);
  }
}

TEST(Property, RadiusDecreasesWithCentralValue) {
  const ProblemSpec s(4, 2);
  const auto nl = Nonlinearity::power(2, 2);
  double prev = inf;
  for (double beta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const auto e = blowup_radius(s, nl, beta);
    EXPECT_LT(e.rho_high, prev);
    prev = e.rho_low;
  }
}
