#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>

#include <Eigen/Dense>

namespace bvc {

/// Periodic grid: m points per axis on a torus of side `box` in d dimensions.
/// Axis coordinates are x_i = -box/2 + i * box/m.
struct GridSpec {
  int d = 1;
  int m = 64;
  double box = 1.0;

  void validate() const;
  Eigen::Index size() const;
  double cell() const { return box / m; }
  double cell_volume() const;
  double coordinate(int i) const { return -0.5 * box + i * cell(); }
  /// Flat row-major index -> per-axis indices (last axis fastest).
  std::array<int, 3> unflatten(Eigen::Index flat) const;
  /// Angular frequency of integer mode k in [-m/2, m/2) stored at FFT slot j.
  double wavenumber(int slot) const;

  bool operator==(const GridSpec&) const = default;
};

/// Minimum-image distance between two grid points.
double periodic_distance(const GridSpec& grid, Eigen::Index a, Eigen::Index b);

/// Real field sampled on a GridSpec, values in row-major axis order.
struct SampledField {
  GridSpec grid;
  Eigen::VectorXd values;

  SampledField() = default;
  SampledField(const GridSpec& g, Eigen::VectorXd v);

  static SampledField zeros(const GridSpec& g);
  static SampledField constant(const GridSpec& g, double c);
  /// Samples f at the grid coordinates (span of length d).
  static SampledField from_function(const GridSpec& g, const std::function<double(std::span<const double>)>& f);

  void validate() const;
};

/// Binary layout: "BVC1", then d, m (uint64) and box (float64), then m^d
/// float64 values; all little-endian.
void write_field(std::ostream& out, const SampledField& field);
SampledField read_field(std::istream& in);

}  // namespace bvc
