#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvc/field.hpp"

namespace bvc {

/// Strictly decreasing positive times t_0 > t_1 > ... (at least two).
struct TimeLadder {
  std::vector<double> times;

  TimeLadder() = default;
  explicit TimeLadder(std::vector<double> t);

  /// t_j = t_max * ratio^j, j = 0 .. count-1.
  static TimeLadder geometric(double t_max, double ratio, int count);
  /// "geometric:t_max,ratio,count" or an explicit comma-separated list.
  static TimeLadder parse(const std::string& spec);
  /// Default ladder: 64 times, t_max = 1, ratio 0.85.
  static TimeLadder defaults() { return geometric(1.0, 0.85, 64); }

  /// Doubles the density: inserts the geometric mean between neighbours, so
  /// the result contains every original time.
  TimeLadder refined() const;

  std::size_t size() const { return times.size(); }
  void validate() const;
};

struct VariationParams {
  double rho = 3.0;

  void validate() const {
    if (!(rho > 1.0) || !std::isfinite(rho)) throw std::invalid_argument("VariationParams: rho must exceed 1");
  }
  /// The boundedness results need rho > 2; smaller values are computed but flagged.
  bool outside_theorem_regime() const { return rho <= 2.0; }
};

/// |d|^rho with exact products for rho in {2, 3, 4}.
inline double abs_pow(double d, double rho) {
  const double a = std::abs(d);
  if (rho == 2.0) return a * a;
  if (rho == 3.0) return a * a * a;
  if (rho == 4.0) return (a * a) * (a * a);
  return std::pow(a, rho);
}

/// Largest sum_i |w(s_i) - w(s_{i+1})|^rho over increasing index subsequences,
/// before the 1/rho root. O(m^2) dynamic program; sums run along the chain in
/// index order, so the value equals the exhaustive maximum bit for bit.
template <typename Derived>
double rho_variation_power(const Eigen::DenseBase<Derived>& samples, double rho) {
  const Eigen::Index m = samples.size();
  std::vector<double> best(static_cast<std::size_t>(m), 0.0);
  double top = 0.0;
  for (Eigen::Index j = 1; j < m; ++j) {
    const double wj = samples(j);
    double value = 0.0;
    for (Eigen::Index i = 0; i < j; ++i) {
      const double candidate = best[i] + abs_pow(samples(i) - wj, rho);
      if (candidate > value) value = candidate;
    }
    best[j] = value;
    if (value > top) top = value;
  }
  return top;
}

/// The E_rho seminorm of the samples along a ladder.
template <typename Derived>
double rho_variation_seminorm(const Eigen::DenseBase<Derived>& samples, const VariationParams& params) {
  params.validate();
  for (Eigen::Index i = 0; i < samples.size(); ++i)
    if (std::isnan(samples(i))) throw std::invalid_argument("rho_variation_seminorm: NaN sample");
  return std::pow(rho_variation_power(samples, params.rho), 1.0 / params.rho);
}

double rho_variation_seminorm(std::span<const double> samples, const VariationParams& params);
/// Checks that samples and ladder have equal length before evaluating.
double rho_variation_seminorm(std::span<const double> samples, const TimeLadder& ladder,
                              const VariationParams& params);

/// Maximizing subsequence (indices) with its value. Ties keep the shorter chain.
struct VariationPath {
  double value = 0.0;
  std::vector<int> indices;
};
VariationPath rho_variation_path(std::span<const double> samples, const VariationParams& params);

/// Exhaustive maximum over all subsequences, length <= 16.
double brute_force_seminorm(std::span<const double> samples, const VariationParams& params);

/// Column p of `paths` is the time path of point p (rows follow the ladder).
/// Returns the seminorm of every column.
Eigen::VectorXd variation_of_paths(const Eigen::MatrixXd& paths, const VariationParams& params);
/// sqrt(sum_i |row_i - row_{i+1}|^2) for every column.
Eigen::VectorXd square_function_of_paths(const Eigen::MatrixXd& paths);

using Evolution = std::function<SampledField(double)>;

/// Pointwise V_rho restricted to the ladder.
SampledField variation_field(const Evolution& evolve, const TimeLadder& ladder, const VariationParams& params);
/// Pointwise square function over the fixed ladder.
SampledField square_function_field(const Evolution& evolve, const TimeLadder& ladder);

}  // namespace bvc
