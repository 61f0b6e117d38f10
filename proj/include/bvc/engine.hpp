#pragma once

#include <functional>

#include <Eigen/Dense>

#include "bvc/field.hpp"

namespace bvc {

/// Multiplies every Fourier mode of f by multiplier(|xi|^2), xi = (2 pi / box) k.
SampledField apply_spectral(const SampledField& f, const std::function<double(double)>& multiplier);

/// Unnormalized forward DFT of f, one coefficient per grid slot.
Eigen::VectorXcd spectrum(const SampledField& f);
/// |xi|^2 for every slot of the spectrum.
Eigen::VectorXd squared_wavenumbers(const GridSpec& grid);
/// Real part of the inverse DFT of coefficients .* multipliers.
SampledField from_spectrum(const GridSpec& grid, const Eigen::VectorXcd& coefficients,
                           const Eigen::VectorXd& multipliers);

/// e^{-t Delta^2} f on the torus: mode xi scaled by e^{-t |xi|^4}. t = 0 is the identity.
SampledField biharmonic_step(const SampledField& f, double t);

/// Strang splitting for e^{-t L}, L = Delta^2 + V^2: per substep a half step
/// of e^{-dt V^2 / 2}, a full biharmonic step, another half step.
SampledField schrodinger4_evolve(const SampledField& f, const SampledField& V, double t, int substeps);

/// Fourier-spectral matrix of Delta^2 plus diag(V^2) on a d = 1 grid (m <= 512).
Eigen::MatrixXd dense_generator(const GridSpec& grid, const SampledField& V);

/// Eigendecomposition of dense_generator, reused for any number of times t.
class DenseSchrodinger {
 public:
  DenseSchrodinger(const GridSpec& grid, const SampledField& V);

  const GridSpec& grid() const { return grid_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  /// Q diag(fn(lambda)) Q^T applied to the columns of values.
  Eigen::MatrixXd apply_function(const Eigen::MatrixXd& values, const std::function<double(double)>& fn) const;
  /// e^{-t M} as a dense matrix.
  Eigen::MatrixXd propagator(double t) const;

  SampledField evolve(const SampledField& f, double t) const;
  Eigen::MatrixXd evolve_columns(const Eigen::MatrixXd& values, double t) const;

 private:
  GridSpec grid_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Exact e^{-t M} f through the eigendecomposition (d = 1, m <= 512).
SampledField dense_evolve(const SampledField& f, const SampledField& V, double t);

/// B_t(., y): e^{-t M} applied to the discrete delta at y_index, divided by the cell volume.
SampledField heat_kernel_column(const GridSpec& grid, const SampledField& V, double t, Eigen::Index y_index);

/// e_loc f(x) = int_{|x-y| < gamma(x)} B_t(x, y) f(y) dy with periodic distance.
/// gamma holds one critical radius per grid point (+inf allowed).
SampledField local_truncated_evolve(const SampledField& f, const SampledField& V, const Eigen::VectorXd& gamma,
                                    double t);
SampledField local_truncated_evolve(const DenseSchrodinger& op, const SampledField& f, const Eigen::VectorXd& gamma,
                                    double t);

/// || e^{-tL} f - e^{-t Delta^2} f + int_0^t e^{-(t-s) Delta^2} V^2 e^{-sL} f ds ||_2,
/// the integral by composite Simpson on s_panels (even, >= 4) subintervals.
double duhamel_residual(const SampledField& f, const SampledField& V, double t, int s_panels);

enum class SubordinationRule {
  /// Trapezoid rule in u = log(r / sqrt(b)), applied per eigenvalue.
  log_trapezoid,
  /// Generalized Gauss-Laguerre for r^{sigma-1} e^{-r}, applied to the semigroup.
  gauss_laguerre,
};

struct PoissonParams {
  double sigma = 0.5;
  int nodes = 64;
  SubordinationRule rule = SubordinationRule::log_trapezoid;

  void validate() const;
};

/// (1 / Gamma(sigma)) int_0^inf e^{-r} r^{sigma-1} e^{-b/r} dr for b >= 0.
double subordinated_multiplier(double b, const PoissonParams& params);

/// Generalized Poisson operator P^sigma_t f = (1/Gamma(sigma)) int_0^inf e^{-r} r^{sigma-1}
/// e^{-(t^2 / 4r) L} f dr. Spectral route when V == 0, dense route when d = 1.
SampledField poisson_apply(const SampledField& f, const SampledField& V, double t, const PoissonParams& params);
SampledField poisson_apply(const DenseSchrodinger& op, const SampledField& f, double t, const PoissonParams& params);
Eigen::MatrixXd poisson_apply_columns(const DenseSchrodinger& op, const Eigen::MatrixXd& values, double t,
                                      const PoissonParams& params);

/// True when every sample of V is exactly zero.
bool is_zero_potential(const SampledField& V);

}  // namespace bvc
