#pragma once

#include <limits>

#include <Eigen/Dense>

#include "bvc/field.hpp"

namespace bvc {

inline constexpr double kInfinityNorm = std::numeric_limits<double>::infinity();

/// (cell volume * sum |f|^p)^{1/p}; p = kInfinityNorm gives max |f|.
double lp_norm(const SampledField& f, double p);

/// Sums of g over periodic grid balls {y : |x - y| <= r} for every center x.
/// Balls wider than the torus are clipped to one copy of each point.
Eigen::VectorXd ball_sums(const GridSpec& grid, const Eigen::VectorXd& g, double r);

/// The radii scanned by maximal_function: radius_count values, log-spaced
/// from half a cell (the single-point ball) to sqrt(d) * box / 2.
Eigen::VectorXd maximal_radii(const GridSpec& grid, int radius_count);

/// Centered Hardy-Littlewood maximal function: max over the radii above of
/// the mean of |f| over the grid points in the ball. Mf >= |f| pointwise.
SampledField maximal_function(const SampledField& f, int radius_count = 24);

struct MorreyParams {
  double p = 2.0;
  double lambda = 0.0;
  double alpha = 0.0;
  int n = 1;

  void validate() const;
};

/// Radii of the Morrey scan: radius_count values, log-spaced in [cell, sqrt(d) * box / 2].
Eigen::VectorXd morrey_radii(const GridSpec& grid, int radius_count);

/// (sup_{x0, r} r^{-lambda} int_{B(x0, r)} |f|^p)^{1/p} over all grid centers
/// and the radii above; alpha is ignored.
double morrey_norm(const SampledField& f, const MorreyParams& params, int radius_count = 24);

/// Same scan with the weight (1 + r / gamma(x0))^alpha. gamma = +inf gives weight 1.
double morrey_potential_norm(const SampledField& f, const MorreyParams& params, const Eigen::VectorXd& gamma,
                             int radius_count = 24);

}  // namespace bvc
