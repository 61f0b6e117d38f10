#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "bvc/error.hpp"

namespace bvc {

/// Nodes and weights of an interpolatory rule.
template <typename Scalar>
struct QuadratureRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  Eigen::Index size() const { return nodes.size(); }
};

using Rule = QuadratureRule<double>;

/// Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    Scalar dp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      const Scalar dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < Scalar(4) * std::numeric_limits<Scalar>::epsilon()) break;
    }
    // refresh derivative at the converged node
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? Scalar(1) : n * (x * p1 - p0) / (x * x - 1);
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    rule.nodes(i) = -x;
    rule.nodes(n - 1 - i) = x;
    rule.weights(i) = w;
    rule.weights(n - 1 - i) = w;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = 0;
  return rule;
}

/// The 16-point Gauss-Legendre rule, built once.
const Rule& gauss_legendre16();

/// Composite rule: `panels` equal panels on [a, b], each with `rule`.
template <typename F>
double composite_integral(F&& f, double a, double b, int panels, const Rule& rule) {
  const double width = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    double sum = 0.0;
    for (Eigen::Index k = 0; k < rule.size(); ++k) sum += rule.weights(k) * f(mid + half * rule.nodes(k));
    total += half * sum;
  }
  return total;
}

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

struct DoublingOptions {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  int start_panels = 4;
  int max_panels = 2048;
};

/// Composite 16-point Gauss-Legendre with panel doubling until two successive
/// results differ by less than max(abs_tol, rel_tol*|value|).
template <typename F>
IntegrationResult integrate_doubling(F&& f, double a, double b, const DoublingOptions& opt = {}) {
  const Rule& rule = gauss_legendre16();
  int panels = opt.start_panels;
  double previous = composite_integral(f, a, b, panels, rule);
  double diff = 0.0;
  while (panels < opt.max_panels) {
    panels *= 2;
    const double current = composite_integral(f, a, b, panels, rule);
    diff = std::abs(current - previous);
    if (diff <= std::max(opt.abs_tol, opt.rel_tol * std::abs(current))) return {current, diff, panels};
    previous = current;
  }
  throw QuadratureError("panel doubling did not converge", diff);
}

/// Generalized Gauss-Laguerre rule for the weight r^alpha e^{-r} on (0, inf),
/// via Golub-Welsch. Weights sum to Gamma(alpha + 1).
Rule gauss_laguerre(int n, double alpha);

}  // namespace bvc
