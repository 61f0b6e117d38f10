#pragma once

#include <span>
#include <vector>

#include "bvc/report.hpp"

namespace bvc {

/// b(x, t) = t^{-n/4} g(|x| t^{-1/4}), the biharmonic heat kernel at |x| = x_mag.
double b_eval(int n, double x_mag, double t);

/// d/dt b = -t^{-n/4-1} [ (n/4) g(eta) + (eta/4) g'(eta) ].
double b_time_derivative(int n, double x_mag, double t);

/// |grad_x b| = t^{-(n+1)/4} |g'(eta)|.
double b_space_gradient(int n, double x_mag, double t);

/// |d/dt grad_x b| = t^{-(n+1)/4-1} |(n+1)/4 g'(eta) + (eta/4) g''(eta)|.
double b_mixed_derivative(int n, double x_mag, double t);

/// Kernel sweep grid. When x_grid is empty the x values are generated per t
/// as x = eta * t^{1/4} from eta_grid.
struct KernelGrid {
  std::vector<double> t_grid;
  std::vector<double> eta_grid;
  std::vector<double> x_grid;
  /// Points with eta above this are outside the resolved range and flagged.
  double eta_max = 12.0;

  /// 24 log-spaced t in [1e-3, 1e3] and 32 eta in [0, 12].
  static KernelGrid defaults();
  /// Same t grid, eta grid truncated at eta_end (keeps the spacing of the default grid).
  static KernelGrid defaults_up_to(double eta_end);
  /// Grid for the polynomial (bxt) bounds: same t grid and eta spacing, eta in
  /// [0, 36]. Those ratios peak between eta = 11 and 16, so [0, 12] cannot
  /// show the turnover.
  static KernelGrid mixed_defaults();
};

/// Reports for the pointwise kernel bounds: (k) size, (kt) time derivative,
/// (kx) gradient, and (bxt) the mixed bounds for (k,l) in {(0,1),(1,1)}
/// (both orders stored in `bxt`, first all (0,1) points then all (1,1)).
struct LemmaKReport {
  BoundSweepReport k;
  BoundSweepReport kt;
  BoundSweepReport kx;
  BoundSweepReport bxt;
};

/// Sweeps the four bounds for dimension n. Quadrature failures are recorded
/// per point; denominators that underflow are flagged and excluded.
/// Stabilization uses the tail rule on eta. The (bxt) sweep runs on mixed_grid.
LemmaKReport verify_lemma_k(int n, const KernelGrid& grid = KernelGrid::defaults(),
                            const KernelGrid& mixed_grid = KernelGrid::mixed_defaults());

}  // namespace bvc
