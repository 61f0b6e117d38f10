#include "bvc/engine.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include "bvc/norms.hpp"
#include "bvc/quadrature.hpp"

namespace bvc {
namespace {

using Complex = std::complex<double>;

constexpr int kDenseLimit = 512;

// In-place d-dimensional transform, one axis at a time.
void transform(std::vector<Complex>& data, const GridSpec& grid, bool inverse) {
  Eigen::FFT<double> fft;
  const int m = grid.m;
  std::vector<Complex> line(m), out(m);
  const Eigen::Index total = grid.size();
  Eigen::Index stride = total;
  for (int axis = 0; axis < grid.d; ++axis) {
    stride /= m;
    const Eigen::Index block = stride * m;
    for (Eigen::Index outer = 0; outer < total; outer += block) {
      for (Eigen::Index inner = 0; inner < stride; ++inner) {
        const Eigen::Index base = outer + inner;
        for (int j = 0; j < m; ++j) line[j] = data[base + j * stride];
        if (inverse)
          fft.inv(out, line);
        else
          fft.fwd(out, line);
        for (int j = 0; j < m; ++j) data[base + j * stride] = out[j];
      }
    }
  }
}

double squared_wavenumber(const GridSpec& grid, Eigen::Index flat) {
  const auto idx = grid.unflatten(flat);
  double sum = 0.0;
  for (int k = 0; k < grid.d; ++k) {
    const double xi = grid.wavenumber(idx[k]);
    sum += xi * xi;
  }
  return sum;
}

void check_time(double t, const char* who) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument(std::string(who) + ": t must be finite and >= 0");
}

void check_potential(const SampledField& f, const SampledField& V) {
  V.validate();
  if (!(V.grid == f.grid)) throw std::invalid_argument("potential must be sampled on the field's grid");
  if ((V.values.array() < 0.0).any()) throw std::invalid_argument("potential samples must be nonnegative");
}

void check_dense_grid(const GridSpec& grid) {
  grid.validate();
  if (grid.d != 1) throw std::invalid_argument("dense operator requires d = 1");
  if (grid.m > kDenseLimit) throw std::invalid_argument("dense operator requires m <= 512");
}

}  // namespace

Eigen::VectorXcd spectrum(const SampledField& f) {
  f.validate();
  std::vector<Complex> data(f.values.data(), f.values.data() + f.values.size());
  transform(data, f.grid, false);
  return Eigen::Map<Eigen::VectorXcd>(data.data(), static_cast<Eigen::Index>(data.size()));
}

Eigen::VectorXd squared_wavenumbers(const GridSpec& grid) {
  grid.validate();
  Eigen::VectorXd xi2(grid.size());
  for (Eigen::Index i = 0; i < xi2.size(); ++i) xi2(i) = squared_wavenumber(grid, i);
  return xi2;
}

SampledField from_spectrum(const GridSpec& grid, const Eigen::VectorXcd& coefficients,
                           const Eigen::VectorXd& multipliers) {
  if (coefficients.size() != grid.size() || multipliers.size() != grid.size())
    throw std::invalid_argument("from_spectrum: size mismatch");
  std::vector<Complex> data(coefficients.size());
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) data[i] = coefficients(i) * multipliers(i);
  transform(data, grid, true);
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = data[i].real();
  return SampledField(grid, std::move(out));
}

SampledField apply_spectral(const SampledField& f, const std::function<double(double)>& multiplier) {
  f.validate();
  std::vector<Complex> data(f.values.data(), f.values.data() + f.values.size());
  transform(data, f.grid, false);
  for (Eigen::Index i = 0; i < f.grid.size(); ++i) data[i] *= multiplier(squared_wavenumber(f.grid, i));
  transform(data, f.grid, true);
  Eigen::VectorXd out(f.grid.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = data[i].real();
  return SampledField(f.grid, std::move(out));
}

SampledField biharmonic_step(const SampledField& f, double t) {
  check_time(t, "biharmonic_step");
  if (t == 0.0) return f;
  return apply_spectral(f, [t](double xi2) { return std::exp(-t * xi2 * xi2); });
}

SampledField schrodinger4_evolve(const SampledField& f, const SampledField& V, double t, int substeps) {
  check_time(t, "schrodinger4_evolve");
  check_potential(f, V);
  if (substeps < 1) throw std::invalid_argument("schrodinger4_evolve: substeps must be >= 1");
  const double dt = t / substeps;
  const Eigen::ArrayXd half = (-0.5 * dt * V.values.array().square()).exp();
  SampledField u = f;
  for (int s = 0; s < substeps; ++s) {
    u.values.array() *= half;
    u = biharmonic_step(u, dt);
    u.values.array() *= half;
  }
  return u;
}

Eigen::MatrixXd dense_generator(const GridSpec& grid, const SampledField& V) {
  check_dense_grid(grid);
  if (!(V.grid == grid)) throw std::invalid_argument("dense_generator: potential grid mismatch");
  check_potential(V, V);
  const int m = grid.m;
  // First column of the circulant F^{-1} diag(xi^4) F.
  Eigen::VectorXd column(m);
  for (int k = 0; k <= m / 2; ++k) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double xi = grid.wavenumber(j);
      const long phase = (static_cast<long>(j) * k) % m;
      sum += xi * xi * xi * xi * std::cos(2.0 * std::numbers::pi * phase / m);
    }
    column(k) = sum / m;
    column((m - k) % m) = column(k);
  }
  Eigen::MatrixXd generator(m, m);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) generator(i, l) = column((i - l + m) % m);
  generator.diagonal().array() += V.values.array().square();
  return generator;
}

namespace {

// Spectral weights below this are dropped: they are far under double resolution of the result, and
// keeping them pushes the eigenvector products into subnormal arithmetic, which is very slow.
constexpr double kNegligibleWeight = 1e-200;

Eigen::VectorXd flush_negligible(const Eigen::VectorXd& weights) {
  return (weights.array().abs() < kNegligibleWeight).select(0.0, weights);
}

}  // namespace

DenseSchrodinger::DenseSchrodinger(const GridSpec& grid, const SampledField& V) : grid_(grid) {
  const Eigen::MatrixXd generator = dense_generator(grid, V);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(generator);
  if (solver.info() != Eigen::Success) throw std::runtime_error("DenseSchrodinger: eigensolver failed");
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

Eigen::MatrixXd DenseSchrodinger::apply_function(const Eigen::MatrixXd& values,
                                                 const std::function<double(double)>& fn) const {
  if (values.rows() != eigenvectors_.rows()) throw std::invalid_argument("DenseSchrodinger: size mismatch");
  Eigen::VectorXd weights(eigenvalues_.size());
  for (Eigen::Index k = 0; k < weights.size(); ++k) weights(k) = fn(eigenvalues_(k));
  weights = flush_negligible(weights);
  const Eigen::MatrixXd coefficients = eigenvectors_.transpose() * values;
  return eigenvectors_ * (weights.asDiagonal() * coefficients);
}

Eigen::MatrixXd DenseSchrodinger::propagator(double t) const {
  check_time(t, "DenseSchrodinger::propagator");
  const Eigen::VectorXd weights = flush_negligible((-t * eigenvalues_.array()).exp());
  const Eigen::MatrixXd scaled = eigenvectors_ * weights.asDiagonal();
  return scaled * eigenvectors_.transpose();
}

Eigen::MatrixXd DenseSchrodinger::evolve_columns(const Eigen::MatrixXd& values, double t) const {
  check_time(t, "dense_evolve");
  return apply_function(values, [t](double lambda) { return std::exp(-t * lambda); });
}

SampledField DenseSchrodinger::evolve(const SampledField& f, double t) const {
  if (!(f.grid == grid_)) throw std::invalid_argument("dense_evolve: grid mismatch");
  return SampledField(grid_, evolve_columns(f.values, t).col(0));
}

SampledField dense_evolve(const SampledField& f, const SampledField& V, double t) {
  check_dense_grid(f.grid);
  return DenseSchrodinger(f.grid, V).evolve(f, t);
}

SampledField heat_kernel_column(const GridSpec& grid, const SampledField& V, double t, Eigen::Index y_index) {
  check_dense_grid(grid);
  if (y_index < 0 || y_index >= grid.size()) throw std::out_of_range("heat_kernel_column: y_index");
  SampledField delta = SampledField::zeros(grid);
  delta.values(y_index) = 1.0 / grid.cell_volume();
  return dense_evolve(delta, V, t);
}

SampledField local_truncated_evolve(const DenseSchrodinger& op, const SampledField& f, const Eigen::VectorXd& gamma,
                                    double t) {
  const GridSpec& grid = op.grid();
  if (!(f.grid == grid)) throw std::invalid_argument("local_truncated_evolve: grid mismatch");
  if (gamma.size() != grid.size()) throw std::invalid_argument("local_truncated_evolve: gamma length mismatch");
  const Eigen::MatrixXd kernel = op.propagator(t);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < grid.size(); ++j)
      if (periodic_distance(grid, i, j) < gamma(i)) sum += kernel(i, j) * f.values(j);
    out(i) = sum;
  }
  return SampledField(grid, std::move(out));
}

SampledField local_truncated_evolve(const SampledField& f, const SampledField& V, const Eigen::VectorXd& gamma,
                                    double t) {
  check_dense_grid(f.grid);
  return local_truncated_evolve(DenseSchrodinger(f.grid, V), f, gamma, t);
}

double duhamel_residual(const SampledField& f, const SampledField& V, double t, int s_panels) {
  check_dense_grid(f.grid);
  check_potential(f, V);
  if (!(t > 0.0)) throw std::invalid_argument("duhamel_residual: t must be positive");
  if (s_panels < 4 || s_panels % 2 != 0) throw std::invalid_argument("duhamel_residual: s_panels must be even and >= 4");
  const DenseSchrodinger op(f.grid, V);
  const Eigen::ArrayXd v2 = V.values.array().square();
  const double h = t / s_panels;
  Eigen::VectorXd integral = Eigen::VectorXd::Zero(f.grid.size());
  for (int k = 0; k <= s_panels; ++k) {
    const double s = k * h;
    const double weight = (k == 0 || k == s_panels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    SampledField source = op.evolve(f, s);
    source.values.array() *= v2;
    integral += weight * biharmonic_step(source, t - s).values;
  }
  integral *= h / 3.0;
  const Eigen::VectorXd residual = op.evolve(f, t).values - biharmonic_step(f, t).values + integral;
  return lp_norm(SampledField(f.grid, residual), 2.0);
}

void PoissonParams::validate() const {
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("PoissonParams: sigma must lie in (0, 1)");
  if (nodes < 8) throw std::invalid_argument("PoissonParams: at least 8 nodes required");
}

double subordinated_multiplier(double b, const PoissonParams& params) {
  params.validate();
  if (!(b >= 0.0)) throw std::invalid_argument("subordinated_multiplier: b must be >= 0");
  const double sigma = params.sigma;
  if (params.rule == SubordinationRule::gauss_laguerre) {
    const Rule rule = gauss_laguerre(params.nodes, sigma - 1.0);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < rule.size(); ++i) sum += rule.weights(i) * std::exp(-b / rule.nodes(i));
    return sum / std::tgamma(sigma);
  }
  if (b == 0.0) return 1.0;
  if (!std::isfinite(b)) return 0.0;
  // With r = sqrt(b) e^u the integral is 2 b^{sigma/2} int_0^inf e^{-z cosh u} cosh(sigma u) du, z = 2 sqrt(b).
  const double z = 2.0 * std::sqrt(b);
  constexpr double decades = 38.0;
  double upper = std::acosh(1.0 + decades / z);
  for (int iter = 0; iter < 8; ++iter) upper = std::acosh(1.0 + (decades + sigma * upper) / z);
  const int n = params.nodes;
  const double h = upper / (n - 1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = i * h;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    sum += w * std::exp(-z * (std::cosh(u) - 1.0)) * std::cosh(sigma * u);
  }
  const double log_prefix = std::log(2.0) + 0.5 * sigma * std::log(b) - z - std::lgamma(sigma);
  return std::exp(log_prefix) * h * sum;
}

bool is_zero_potential(const SampledField& V) { return (V.values.array() == 0.0).all(); }

SampledField poisson_apply(const SampledField& f, const SampledField& V, double t, const PoissonParams& params) {
  params.validate();
  check_time(t, "poisson_apply");
  check_potential(f, V);
  if (is_zero_potential(V)) {
    if (params.rule == SubordinationRule::gauss_laguerre) {
      const Rule rule = gauss_laguerre(params.nodes, params.sigma - 1.0);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(f.grid.size());
      for (Eigen::Index i = 0; i < rule.size(); ++i)
        sum += rule.weights(i) * biharmonic_step(f, t * t / (4.0 * rule.nodes(i))).values;
      return SampledField(f.grid, sum / std::tgamma(params.sigma));
    }
    const double scale = 0.25 * t * t;
    return apply_spectral(f, [&](double xi2) { return subordinated_multiplier(scale * xi2 * xi2, params); });
  }
  if (f.grid.d != 1) throw std::invalid_argument("poisson_apply: nonzero potential requires d = 1 (dense route)");
  return poisson_apply(DenseSchrodinger(f.grid, V), f, t, params);
}

Eigen::MatrixXd poisson_apply_columns(const DenseSchrodinger& op, const Eigen::MatrixXd& values, double t,
                                      const PoissonParams& params) {
  params.validate();
  check_time(t, "poisson_apply");
  if (params.rule == SubordinationRule::gauss_laguerre) {
    const Rule rule = gauss_laguerre(params.nodes, params.sigma - 1.0);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < rule.size(); ++i)
      sum += rule.weights(i) * op.evolve_columns(values, t * t / (4.0 * rule.nodes(i)));
    return sum / std::tgamma(params.sigma);
  }
  const double scale = 0.25 * t * t;
  return op.apply_function(values, [&](double lambda) {
    return subordinated_multiplier(scale * std::max(lambda, 0.0), params);
  });
}

SampledField poisson_apply(const DenseSchrodinger& op, const SampledField& f, double t, const PoissonParams& params) {
  if (!(f.grid == op.grid())) throw std::invalid_argument("poisson_apply: grid mismatch");
  return SampledField(f.grid, poisson_apply_columns(op, f.values, t, params).col(0));
}

}  // namespace bvc
