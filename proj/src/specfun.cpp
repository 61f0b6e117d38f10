#include "bvc/specfun.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "bvc/quadrature.hpp"

namespace bvc {
namespace {

constexpr double kSeriesCutoff = 12.0;

bool is_half_integer_order(double v) {
  const double twice = 2.0 * v;
  return v >= -0.5 && std::isfinite(v) && twice == std::round(twice);
}

bool is_integer_order(double v) { return v == std::round(v); }

// sum_k (-x^2/4)^k / (k! Gamma(k+v+1)) * 2^{-v}
double scaled_series(double v, double x) {
  const double q = -0.25 * x * x;
  double term = std::exp(-v * std::numbers::ln2 - std::lgamma(v + 1.0));
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (k * (k + v));
    sum += term;
    if (std::abs(term) < 1e-17 * std::max(std::abs(sum), 1e-300) && k > x) break;
  }
  return sum;
}

double miller_integer(int order, double z) {
  const double top = std::max<double>(order, z);
  int start = static_cast<int>(top + 30.0 + 10.0 * std::cbrt(top));
  if (start % 2) ++start;
  double above = 0.0, current = 1.0, sum = 0.0, answer = 0.0;
  for (int k = start; k >= 1; --k) {
    const double below = 2.0 * k / z * current - above;
    above = current;
    current = below;  // J_{k-1}, unnormalized
    if (std::abs(current) > 1e250) {
      current *= 1e-250;
      above *= 1e-250;
      sum *= 1e-250;
      answer *= 1e-250;
    }
    if (k - 1 == order) answer = current;
    if ((k - 1) % 2 == 0 && k - 1 > 0) sum += 2.0 * current;
  }
  sum += current;
  return answer / sum;
}

double half_integer_upward(double v, double z) {
  const double scale = std::sqrt(2.0 / (std::numbers::pi * z));
  double lower = scale * std::cos(z);  // J_{-1/2}
  double upper = scale * std::sin(z);  // J_{1/2}
  if (v == -0.5) return lower;
  for (double nu = 0.5; nu < v; nu += 1.0) {
    const double next = 2.0 * nu / z * upper - lower;
    lower = upper;
    upper = next;
  }
  return upper;
}

void check_order(double v) {
  if (!is_half_integer_order(v)) throw std::invalid_argument("bessel_j: unsupported order " + std::to_string(v));
}

}  // namespace

double bessel_j(double v, double z) {
  check_order(v);
  if (!(z >= 0.0) || !std::isfinite(z)) throw std::invalid_argument("bessel_j: argument must be finite and >= 0");
  if (z == 0.0) {
    if (v == 0.0) return 1.0;
    if (v > 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  if (z <= kSeriesCutoff || z < v) return scaled_series(v, z) * std::pow(z, v);
  if (is_integer_order(v)) return miller_integer(static_cast<int>(v), z);
  return half_integer_upward(v, z);
}

double bessel_j_scaled(double v, double x) {
  check_order(v);
  x = std::abs(x);
  if (x <= kSeriesCutoff || x < v) return scaled_series(v, x);
  return bessel_j(v, x) / std::pow(x, v);
}

double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

void ProfileQuery::validate() const {
  if (n < 1 || n > 8) throw std::invalid_argument("ProfileQuery: dimension must be in 1..8");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw std::invalid_argument("ProfileQuery: eta must be finite and >= 0");
  if (order < 0) throw std::invalid_argument("ProfileQuery: derivative order must be >= 0");
}

namespace {

// d^m/dx^m Lambda_v(x) using Lambda_v' = -x Lambda_{v+1}.
double scaled_bessel_derivative(double v, double x, int m) {
  switch (m) {
    case 0: return bessel_j_scaled(v, x);
    case 1: return -x * bessel_j_scaled(v + 1, x);
    case 2: return -bessel_j_scaled(v + 1, x) + x * x * bessel_j_scaled(v + 2, x);
    case 3: return 3.0 * x * bessel_j_scaled(v + 2, x) - x * x * x * bessel_j_scaled(v + 3, x);
    case 4: {
      const double x2 = x * x;
      return 3.0 * bessel_j_scaled(v + 2, x) - 6.0 * x2 * bessel_j_scaled(v + 3, x) +
             x2 * x2 * bessel_j_scaled(v + 4, x);
    }
    default: throw std::invalid_argument("g_derivative: order must be <= 4");
  }
}

double radial_profile(const ProfileQuery& q) {
  const double v = 0.5 * (q.n - 2);
  const int power = q.n - 1 + q.order;
  auto integrand = [&](double s) {
    const double s2 = s * s;
    return std::exp(-s2 * s2) * std::pow(s, power) * scaled_bessel_derivative(v, q.eta * s, q.order);
  };
  return integrate_doubling(integrand, 0.0, kProfileCutoff).value;
}

}  // namespace

double g_profile(const ProfileQuery& q) {
  q.validate();
  if (q.order != 0) throw std::invalid_argument("g_profile: order must be 0 (use g_derivative)");
  return radial_profile(q);
}

double g_derivative(const ProfileQuery& q) {
  q.validate();
  if (q.order < 1 || q.order > 4) throw std::invalid_argument("g_derivative: order must be in 1..4");
  return radial_profile(q);
}

double g_profile_direct(double eta) {
  if (!std::isfinite(eta)) throw std::invalid_argument("g_profile_direct: eta must be finite");
  auto integrand = [eta](double k) {
    const double k2 = k * k;
    return std::cos(eta * k) * std::exp(-k2 * k2);
  };
  DoublingOptions opt;
  opt.abs_tol = 1e-12;
  opt.start_panels = 6;
  const double value = integrate_doubling(integrand, -kProfileCutoff, kProfileCutoff, opt).value;
  return value / std::sqrt(2.0 * std::numbers::pi);
}

double profile_integral(int n) {
  ProfileQuery probe{n, 0.0, 0};
  probe.validate();
  // |g| decays roughly like exp(-A1 r^{4/3}) (g(24) is still ~2e-8 for n = 1), so the
  // tail is cut at 40; the tolerance is relative because r^{n-1} amplifies roundoff in g.
  auto integrand = [n](double r) { return g_profile(n, r) * std::pow(r, n - 1); };
  DoublingOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-10;
  opt.start_panels = 16;
  const double radial = integrate_doubling(integrand, 0.0, 40.0, opt).value;
  return unit_sphere_area(n) * radial;
}

BoundSweepReport check_g_envelope(int n, std::span<const double> eta_grid, int m) {
  ProfileQuery{n, 0.0, m}.validate();
  if (m > 4) throw std::invalid_argument("check_g_envelope: order must be <= 4");
  BoundSweepReport report;
  report.bound_name = "envelope";
  double previous = -1.0;
  for (double eta : eta_grid) {
    if (!(eta >= 0.0) || !std::isfinite(eta) || eta < previous)
      throw std::invalid_argument("check_g_envelope: grid must be finite, nonnegative and sorted");
    previous = eta;
    KernelPoint p;
    p.n = n;
    p.x_mag = eta;
    p.t = 1.0;
    p.eta = eta;
    p.value = m == 0 ? g_profile(n, eta) : g_derivative(n, eta, m);
    p.bound = std::pow(1.0 + eta, -(n - m) / 3.0) * std::exp(-kA1 * std::pow(eta, 4.0 / 3.0));
    report.points.push_back(p);
  }
  finalize_ratios(report);
  report.stabilized = tail_stabilized(report);
  return report;
}

}  // namespace bvc
