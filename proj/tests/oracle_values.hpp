#pragma once

// Reference values computed independently by tests/oracles/compute_fixtures.py
// (mpmath closed forms and high-precision quadrature, scipy DOP853 on a
// reformulated ODE).  Frozen here; do not regenerate from the library.

namespace oracle {

// K(beta) = int_beta^inf dt / ((k+1)(G(t)-G(beta)))^{1/(k+1)}
inline constexpr double K_p2_k1_b1 = 2.9744774254021756;
inline constexpr double K_p2_k2_b1 = 1.941805714012053;
inline constexpr double K_p3_k2_b1 = 1.1216467386559848;
inline constexpr double K_p2_k1_b10 = 0.94061235130244568;
inline constexpr double K_p2_k1_b100 = 0.29744774254021756;
inline constexpr double K_p3_k3_b1 = 0.89691523284940205;
inline constexpr double K_p15_k1_b1 = 5.0638384383449804;
inline constexpr double K_expm1_k1_b1 = 1.544856232349232;
inline constexpr double K_expm1_k1_b5 = 0.18272554519612475;
inline constexpr double K_expm1_k1_b25 = 8.2785418973663197e-6;
inline constexpr double K_expm1_k2_b1 = 0.96400174674381278;
// int_1^inf dt / sqrt(t^3 - 1)
inline constexpr double I_cubic = 2.4286506478875816;

// Blow-up radii of the radial problem.
inline constexpr double rho_p2_k1_N3_b1 = 3.96458563452113;
inline constexpr double rho_p2_k1_N3_b4 = 1.98229281726056;
inline constexpr double rho_p2_k2_N4_b1 = 3.01636221812032;
inline constexpr double rho_p2_k2_N4_b4 = 1.50818110906016;
inline constexpr double rho_p3_k2_N4_b1 = 2.03529435040004;
inline constexpr double rho_p15_k1_N3_b1 = 6.39686403230349;
inline constexpr double rho_p3_k3_N6_b1 = 1.97801117835118;
inline constexpr double rho_4u2_k1_N3_b1 = 1.98229281726056;

// Dirichlet problems on the unit ball.
inline constexpr double sinh_beta_star = 1.7018362564786431;
inline constexpr double u0_large[5] = {1.53669310209752, 2.55547065132938, 3.92444199081209, 5.55281337897112,
                                       7.28536676514659};
inline constexpr double beta_star_p2_k2_N4_c3 = 1.94950223092451;
inline constexpr double beta_star_p3_k2_N4_c3 = 1.53005209163581;

} // namespace oracle
