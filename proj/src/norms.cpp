#include "bvc/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace bvc {

double lp_norm(const SampledField& f, double p) {
  if (p == kInfinityNorm) return f.values.size() == 0 ? 0.0 : f.values.cwiseAbs().maxCoeff();
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
  const double sum = f.values.cwiseAbs().array().pow(p).sum();
  return std::pow(f.grid.cell_volume() * sum, 1.0 / p);
}

namespace {

// Offsets -J..J along one axis, clipped so no point is counted twice.
std::pair<int, int> axis_range(long long reach, int m) {
  if (reach >= m / 2) return {-(m / 2), m - m / 2 - 1};
  return {static_cast<int>(-reach), static_cast<int>(reach)};
}

long long lattice_reach(double r2_cells) {
  if (r2_cells < 0.0) return -1;
  // small slack keeps lattice points that sit exactly on the sphere
  return static_cast<long long>(std::floor(std::sqrt(r2_cells) * (1.0 + 1e-12)));
}

}  // namespace

Eigen::VectorXd ball_sums(const GridSpec& grid, const Eigen::VectorXd& g, double r) {
  grid.validate();
  if (g.size() != grid.size()) throw std::invalid_argument("ball_sums: size mismatch");
  const int m = grid.m;
  const int d = grid.d;
  const double rc = r / grid.cell();
  const double r2 = rc * rc;
  const Eigen::Index rows = grid.size() / m;

  // prefix[row * (2m + 1) + k] = sum of the first k entries of the row repeated twice
  std::vector<double> prefix(static_cast<std::size_t>(rows) * (2 * m + 1));
  for (Eigen::Index row = 0; row < rows; ++row) {
    double* p = &prefix[static_cast<std::size_t>(row) * (2 * m + 1)];
    p[0] = 0.0;
    for (int k = 0; k < 2 * m; ++k) p[k + 1] = p[k] + g(row * m + (k % m));
  }
  auto segment = [&](Eigen::Index row, int center, long long reach) {
    if (reach < 0) return 0.0;
    const auto [lo, hi] = axis_range(reach, m);
    const double* p = &prefix[static_cast<std::size_t>(row) * (2 * m + 1)];
    const int start = ((center + lo) % m + m) % m;
    const int len = hi - lo + 1;
    return p[start + len] - p[start];
  };

  Eigen::VectorXd out(grid.size());
  for (Eigen::Index flat = 0; flat < grid.size(); ++flat) {
    const auto idx = grid.unflatten(flat);
    const int last = idx[d - 1];
    double total = 0.0;
    if (d == 1) {
      total = segment(0, last, lattice_reach(r2));
    } else if (d == 2) {
      const auto [lo, hi] = axis_range(lattice_reach(r2), m);
      for (int j = lo; j <= hi; ++j) {
        const Eigen::Index row = ((idx[0] + j) % m + m) % m;
        total += segment(row, last, lattice_reach(r2 - double(j) * j));
      }
    } else {
      const auto [lo, hi] = axis_range(lattice_reach(r2), m);
      for (int j = lo; j <= hi; ++j) {
        const double rest = r2 - double(j) * j;
        const auto [lo2, hi2] = axis_range(lattice_reach(rest), m);
        for (int k = lo2; k <= hi2; ++k) {
          const Eigen::Index row = static_cast<Eigen::Index>(((idx[0] + j) % m + m) % m) * m + ((idx[1] + k) % m + m) % m;
          total += segment(row, last, lattice_reach(rest - double(k) * k));
        }
      }
    }
    out(flat) = total;
  }
  return out;
}

namespace {

Eigen::VectorXd log_radii(double lo, double hi, int count) {
  Eigen::VectorXd r(count);
  for (int i = 0; i < count; ++i) r(i) = lo * std::pow(hi / lo, count == 1 ? 0.0 : double(i) / (count - 1));
  return r;
}

double torus_half_diagonal(const GridSpec& grid) { return std::sqrt(double(grid.d)) * 0.5 * grid.box; }

}  // namespace

Eigen::VectorXd maximal_radii(const GridSpec& grid, int radius_count) {
  if (radius_count < 4) throw std::invalid_argument("maximal_function: radius_count must be >= 4");
  return log_radii(0.5 * grid.cell(), torus_half_diagonal(grid), radius_count);
}

SampledField maximal_function(const SampledField& f, int radius_count) {
  const GridSpec& grid = f.grid;
  const Eigen::VectorXd radii = maximal_radii(grid, radius_count);
  const Eigen::VectorXd absf = f.values.cwiseAbs();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid.size());
  Eigen::VectorXd best = absf;
  for (Eigen::Index k = 0; k < radii.size(); ++k) {
    const Eigen::VectorXd sums = ball_sums(grid, absf, radii(k));
    const Eigen::VectorXd counts = ball_sums(grid, ones, radii(k));
    best = best.cwiseMax(sums.cwiseQuotient(counts));
  }
  return SampledField(grid, best);
}

void MorreyParams::validate() const {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("MorreyParams: p must be finite and >= 1");
  if (n < 1) throw std::invalid_argument("MorreyParams: n must be >= 1");
  if (!(lambda >= 0.0) || !(lambda < n)) throw std::invalid_argument("MorreyParams: lambda must lie in [0, n)");
  if (!std::isfinite(alpha)) throw std::invalid_argument("MorreyParams: alpha must be finite");
}

Eigen::VectorXd morrey_radii(const GridSpec& grid, int radius_count) {
  if (radius_count < 2) throw std::invalid_argument("morrey scan needs at least two radii");
  return log_radii(grid.cell(), torus_half_diagonal(grid), radius_count);
}

namespace {

double morrey_scan(const SampledField& f, const MorreyParams& params, const Eigen::VectorXd* gamma, int radius_count) {
  params.validate();
  if (params.n != f.grid.d) throw std::invalid_argument("morrey norm: params.n must equal the grid dimension");
  if (gamma && gamma->size() != f.grid.size()) throw std::invalid_argument("morrey norm: gamma size mismatch");
  const Eigen::VectorXd radii = morrey_radii(f.grid, radius_count);
  const Eigen::VectorXd fp = f.values.cwiseAbs().array().pow(params.p).matrix();
  const double cell = f.grid.cell_volume();
  double best = 0.0;
  for (Eigen::Index k = 0; k < radii.size(); ++k) {
    const double r = radii(k);
    const Eigen::VectorXd sums = ball_sums(f.grid, fp, r);
    const double scale = std::pow(r, -params.lambda) * cell;
    for (Eigen::Index i = 0; i < sums.size(); ++i) {
      double weight = 1.0;
      if (gamma && params.alpha != 0.0) {
        const double g = (*gamma)(i);
        if (!(g > 0.0)) throw std::invalid_argument("morrey norm: gamma must be positive");
        if (std::isfinite(g)) weight = std::pow(1.0 + r / g, params.alpha);
      }
      best = std::max(best, weight * scale * sums(i));
    }
  }
  return std::pow(best, 1.0 / params.p);
}

}  // namespace

double morrey_norm(const SampledField& f, const MorreyParams& params, int radius_count) {
  return morrey_scan(f, params, nullptr, radius_count);
}

double morrey_potential_norm(const SampledField& f, const MorreyParams& params, const Eigen::VectorXd& gamma,
                             int radius_count) {
  return morrey_scan(f, params, &gamma, radius_count);
}

}  // namespace bvc
