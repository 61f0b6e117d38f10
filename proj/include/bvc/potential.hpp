#pragma once

#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bvc/field.hpp"
#include "bvc/report.hpp"

namespace bvc {

enum class PotentialFamily { constant, power, periodic_bump, sampled };

/// Nonnegative potential with its claimed reverse Hölder exponent q0.
///
///   constant:       V = c
///   power:          V = coefficient * |x|^a
///   periodic_bump:  V = amplitude * (1/n) sum_i sin^2(pi * frequency * x_i)
///   sampled:        periodic multilinear interpolant of a grid field (n = grid d)
struct Potential {
  PotentialFamily family = PotentialFamily::constant;
  int n = 1;
  double q0 = std::numeric_limits<double>::infinity();
  double c = 0.0;
  double a = 2.0;
  double coefficient = 1.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  std::shared_ptr<const SampledField> samples;

  static Potential constant(double c, int n, double q0 = std::numeric_limits<double>::infinity());
  static Potential power(double a, int n, double q0, double coefficient = 1.0);
  static Potential periodic_bump(double amplitude, double frequency, int n,
                                 double q0 = std::numeric_limits<double>::infinity());
  static Potential sampled(SampledField field, double q0 = std::numeric_limits<double>::infinity());

  /// Whitespace-separated key=value tokens, e.g. "family=power a=2 n=5 q0=3".
  static Potential parse(const std::string& spec);
  static Potential from_keys(const std::map<std::string, std::string>& keys);

  /// 2 - n / q0.
  double delta() const { return 2.0 - n / q0; }
  /// n >= 5 and q0 > n/2, the regime the boundedness results cover.
  bool in_theorem_regime() const { return n >= 5 && q0 > 0.5 * n; }
  bool radial() const { return family == PotentialFamily::constant || family == PotentialFamily::power; }
  bool is_zero() const;

  double value(std::span<const double> x) const;
  /// V as a function of |x| (radial families only).
  double radial_value(double r) const;

  void validate() const;
  std::string describe() const;
};

/// Samples V at the grid coordinates (grid d <= n; missing coordinates are 0).
SampledField sample_on_grid(const Potential& V, const GridSpec& grid);

enum class Integration { automatic, quadrature };

/// int_{B(center, r)} V^q. Closed forms where available unless `quadrature` is requested.
double ball_integral(const Potential& V, std::span<const double> center, double r, double q,
                     Integration how = Integration::automatic);
/// ((1/|B|) int_B V^q)^{1/q}.
double ball_average(const Potential& V, std::span<const double> center, double r, double q,
                    Integration how = Integration::automatic);

struct SamplePlan {
  std::vector<std::vector<double>> centers;
  std::vector<double> radii;

  /// Seeded uniform centers in [-1, 1]^n and log-spaced radii in [1e-2, 10].
  static SamplePlan defaults(int n, int center_count = 256, int radius_count = 16, std::uint64_t seed = 0x5eedULL);
};

struct RhEstimate {
  double constant = 1.0;
  std::vector<double> worst_center;
  double worst_radius = 0.0;
  /// Raised when the estimate exceeds 1e6 (RH_q likely fails).
  bool flagged = false;
};

/// sup over the plan of ball_average(q) / ball_average(1). Balls where V
/// vanishes identically are skipped.
RhEstimate rh_constant_estimate(const Potential& V, double q, const SamplePlan& plan);

enum class RadiusFlag { ok, infinite, zero };
const char* to_string(RadiusFlag flag);

struct CriticalRadius {
  double gamma = 0.0;
  int iterations = 0;
  RadiusFlag flag = RadiusFlag::ok;
};

struct CriticalRadiusOptions {
  double r_min = 1e-6;
  double r_max = 1e6;
  int per_decade = 20;
  Integration integration = Integration::automatic;
};

/// sup{ r > 0 : r^{-(n-2)} int_{B(x,r)} V <= 1 }. Log-spaced scan for the last
/// upward crossing of level 1, then bisection to relative width tol.
/// Closed forms for constant V and power V (a = 2 anywhere, any a at 0).
CriticalRadius critical_radius(const Potential& V, std::span<const double> x, double tol,
                               const CriticalRadiusOptions& options = {});

/// gamma at every grid point; +inf where the scan finds no violation.
Eigen::VectorXd critical_radius_field(const Potential& V, const GridSpec& grid, double tol = 1e-8);

struct ComparabilityReport {
  double C = 0.0;
  double k0 = 0.0;
  std::size_t worst_pair = 0;
  bool feasible = false;
};

/// Smallest C (over k0_grid, ties to the smaller k0) with
/// C^{-1} g(x) (1 + |x-y|/g(x))^{-k0} <= g(y) <= C g(x) (1 + |x-y|/g(x))^{k0/(k0+1)}
/// on every pair. Infeasible if some gamma is not finite and positive.
ComparabilityReport check_gamma_comparability(const Potential& V,
                                              const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
                                              const std::vector<double>& k0_grid, double tol = 1e-10);

/// int_{R^n} V^2(y) t^{-n/4} exp(-A4 |x-y|^{4/3} / t^{1/3}) dy.
double lemma_v_integral(const Potential& V, std::span<const double> x, double t, double A4);

/// LHS / RHS of the V^2-integral bound, RHS = t^{-1} (t^{1/4}/gamma(x))^{2 delta}, over
/// x_list x t_grid (each t <= gamma(x)^4, rejected otherwise). Points store
/// x_mag = |x| and eta = t^{1/4}/gamma(x). Stabilized when the maximum changes
/// by less than 1% after inserting geometric midpoints into t_grid.
/// A4 = min(A, A1) with A defaulting to A1.
BoundSweepReport check_lemma_v(const Potential& V, const std::vector<std::vector<double>>& x_list,
                               const std::vector<double>& t_grid, double A = -1.0);

}  // namespace bvc
