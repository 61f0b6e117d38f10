#pragma once

#include <numbers>
#include <span>

#include "bvc/report.hpp"

namespace bvc {

/// Exponent constant of the biharmonic kernel envelope, 3 * 2^(1/3) / 16.
inline constexpr double kA1 = 0.23623519685528871839;

/// Truncation point of the e^{-s^4}-damped radial integrals.
inline constexpr double kProfileCutoff = 6.2;

/// J_v(z) for half-integer or integer v >= -1/2 and z >= 0.
///
/// Power series for z <= 12 (or z < v), otherwise Miller's backward
/// recurrence normalized by J_0 + 2 sum J_2k = 1 for integer orders, and
/// upward recurrence from the closed forms of J_{+-1/2} for half-integer
/// orders. Absolute error is below 1e-13 for z <= 50.
double bessel_j(double v, double z);

/// J_v(x) / x^v, continuous at x = 0 where it equals 2^{-v} / Gamma(v + 1).
double bessel_j_scaled(double v, double x);

/// Unit-ball volume in R^n.
double unit_ball_volume(int n);
/// Surface area of the unit sphere S^{n-1} in R^n (n >= 1; equals 2 for n = 1).
double unit_sphere_area(int n);

struct ProfileQuery {
  int n = 1;
  double eta = 0.0;
  int order = 0;

  void validate() const;
};

/// g(eta) = (2 pi)^{-n/2} int_{R^n} e^{i eta.k - |k|^4} dk evaluated through
/// its radial reduction int_0^S e^{-s^4} s^{n-1} Lambda_v(|eta| s) ds, with
/// v = (n-2)/2 and Lambda_v the scaled Bessel function above.
double g_profile(const ProfileQuery& q);
inline double g_profile(int n, double eta) { return g_profile(ProfileQuery{n, eta, 0}); }

/// n = 1 only: (2 pi)^{-1/2} int_{-S}^{S} cos(eta k) e^{-k^4} dk on a full
/// symmetric mesh, independent of the Bessel route.
double g_profile_direct(double eta);

/// m-th radial derivative of g, m in 1..4, by differentiating under the integral.
double g_derivative(const ProfileQuery& q);
inline double g_derivative(int n, double eta, int order) { return g_derivative(ProfileQuery{n, eta, order}); }

/// int_{R^n} g. With the (2 pi)^{-n/2} prefactor this is (2 pi)^{n/2}, so the
/// unit-mass profile of e^{-Delta^2} is (2 pi)^{-n/2} g.
double profile_integral(int n);

/// Ratios |g^(m)(eta)| / [(1+eta)^{-(n-m)/3} e^{-A1 eta^{4/3}}] over eta_grid.
/// Stabilized when the maximum over eta <= (2/3) eta_max is within 1% of
/// the overall maximum (the 8-versus-12 rule for the default grid).
BoundSweepReport check_g_envelope(int n, std::span<const double> eta_grid, int m);

}  // namespace bvc
