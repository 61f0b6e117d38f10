#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "bvc/potential.hpp"
#include "bvc/specfun.hpp"

using namespace bvc;

namespace {

constexpr double kPi = std::numbers::pi;
const double kOmega5 = 8.0 * kPi * kPi / 15.0;

// Monte Carlo mean of V^q over a ball, with its standard error.
std::pair<double, double> monte_carlo_mean(const Potential& V, const std::vector<double>& c, double r, double q,
                                           int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int n = V.n;
  double sum = 0.0, sum2 = 0.0;
  int kept = 0;
  std::vector<double> y(n);
  while (kept < samples) {
    double norm2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = unit(rng);
      y[i] = c[i] + r * u;
      norm2 += u * u;
    }
    if (norm2 > 1.0) continue;
    const double v = std::pow(V.value(y), q);
    sum += v;
    sum2 += v * v;
    ++kept;
  }
  const double mean = sum / kept;
  return {mean, std::sqrt(std::max(0.0, sum2 / kept - mean * mean) / kept)};
}

SampledField smooth_sample(const GridSpec& grid) {
  return SampledField::from_function(grid, [&](std::span<const double> x) {
    double v = 1.0;
    for (double xi : x) v += 0.5 * std::sin(2 * kPi * xi / grid.box) + 0.25 * std::cos(4 * kPi * xi / grid.box);
    return v * v;
  });
}

}  // namespace

TEST_CASE("potential construction and parsing") {
  const Potential p = Potential::parse("family=power a=2 n=5 q0=3");
  CHECK(p.family == PotentialFamily::power);
  CHECK(p.n == 5);
  CHECK(p.a == 2.0);
  CHECK(p.delta() == doctest::Approx(2.0 - 5.0 / 3.0));
  CHECK(p.in_theorem_regime());
  CHECK_FALSE(Potential::power(2, 3, 3).in_theorem_regime());
  CHECK_FALSE(Potential::power(2, 5, 2.5).in_theorem_regime());
  CHECK(Potential::parse(p.describe()).describe() == p.describe());
  const Potential bump = Potential::parse("family=periodic_bump amplitude=3 frequency=0.5 n=2");
  const std::vector<double> x = {0.5, 1.0};
  CHECK(bump.value(x) == doctest::Approx(3.0 * 0.5 * (0.5 + 1.0)));
  CHECK_THROWS_AS(Potential::parse("family=unknown"), std::invalid_argument);
  CHECK_THROWS_AS(Potential::parse("family=power a=2 n=2.5"), std::invalid_argument);
  CHECK_THROWS_AS(Potential::parse("family=constant c=-1"), std::invalid_argument);
  CHECK_THROWS_AS(Potential::parse("c"), std::invalid_argument);
  CHECK_THROWS_AS(Potential::parse("family=sampled"), std::invalid_argument);
  CHECK(Potential::constant(0.0, 3).is_zero());
}

TEST_CASE("sampled potentials load from field files") {
  const GridSpec grid{2, 16, 2.0};
  const SampledField field = smooth_sample(grid);
  const auto path = std::filesystem::temp_directory_path() / "bvc_test_potential.field";
  {
    std::ofstream out(path, std::ios::binary);
    write_field(out, field);
  }
  const Potential V = Potential::parse("family=sampled q0=4 file=" + path.string());
  std::filesystem::remove(path);
  CHECK(V.n == 2);
  CHECK(sample_on_grid(V, grid).values == field.values);
  // the interpolant reproduces grid values and is periodic
  const std::vector<double> node = {grid.coordinate(3), grid.coordinate(5)};
  const std::vector<double> shifted = {node[0] + grid.box, node[1] - grid.box};
  CHECK(V.value(node) == doctest::Approx(field.values(3 * 16 + 5)).epsilon(1e-14));
  CHECK(V.value(shifted) == doctest::Approx(V.value(node)).epsilon(1e-12));
}

TEST_CASE("sample_on_grid pads missing coordinates with zero") {
  const Potential V = Potential::power(2, 5, 3);
  const GridSpec grid{1, 8, 2.0};
  const SampledField s = sample_on_grid(V, grid);
  for (int i = 0; i < 8; ++i) CHECK(s.values(i) == doctest::Approx(grid.coordinate(i) * grid.coordinate(i)));
  CHECK_THROWS_AS(sample_on_grid(Potential::constant(1, 1), GridSpec{2, 8, 1.0}), std::invalid_argument);
}

TEST_CASE("ball averages in closed form") {
  const std::vector<double> c = {0.3, -0.2, 0.1, 0.0, 0.7};
  for (double q : {1.0, 2.0, 3.5}) CHECK(ball_average(Potential::constant(2.5, 5), c, 0.8, q) == doctest::Approx(2.5));
  const Potential power = Potential::power(2, 5, 3);
  const std::vector<double> origin(5, 0.0);
  CHECK(ball_average(power, origin, 1.7, 1.0) == doctest::Approx(1.7 * 1.7 * 5.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("closed forms agree with the quadrature path") {
  const std::vector<double> c5 = {0.3, -0.2, 0.1, 0.0, 0.7};
  const Potential power = Potential::power(2, 5, 3, 1.5);
  for (double r : {0.1, 0.9, 3.0}) {
    const double closed = ball_integral(power, c5, r, 1.0);
    CHECK(ball_integral(power, c5, r, 1.0, Integration::quadrature) == doctest::Approx(closed).epsilon(1e-9));
  }
  const Potential cubic = Potential::power(3, 4, 3);
  const std::vector<double> o4(4, 0.0);
  CHECK(ball_integral(cubic, o4, 1.3, 2.0, Integration::quadrature) ==
        doctest::Approx(ball_integral(cubic, o4, 1.3, 2.0)).epsilon(1e-9));
  for (int n : {1, 2, 3}) {
    const Potential bump = Potential::periodic_bump(4.0, 0.7, n);
    const std::vector<double> c = {0.2, -0.4, 0.9};
    for (double r : {0.05, 0.6, 2.2}) {
      CAPTURE(n);
      CAPTURE(r);
      const std::vector<double> cn(c.begin(), c.begin() + n);
      CHECK(ball_integral(bump, cn, r, 1.0, Integration::quadrature) ==
            doctest::Approx(ball_integral(bump, cn, r, 1.0)).epsilon(1e-8));
    }
  }
  const Potential line = Potential::sampled(smooth_sample(GridSpec{1, 32, 2.0}));
  const std::vector<double> c1 = {0.37};
  for (double r : {0.01, 0.3, 1.7, 5.0})
    CHECK(ball_integral(line, c1, r, 1.0, Integration::quadrature) ==
          doctest::Approx(ball_integral(line, c1, r, 1.0)).epsilon(1e-12));
}

TEST_CASE("ball averages agree with Monte Carlo") {
  const Potential sampled = Potential::sampled(smooth_sample(GridSpec{2, 16, 2.0}));
  const Potential bump = Potential::periodic_bump(3.0, 0.8, 3);
  const std::vector<double> c2 = {0.2, -0.5};
  const std::vector<double> c3 = {0.2, -0.5, 0.1};
  for (double q : {1.0, 2.0}) {
    const auto [mean2, se2] = monte_carlo_mean(sampled, c2, 0.7, q, 200000, 17);
    CHECK(std::abs(std::pow(ball_average(sampled, c2, 0.7, q), q) - mean2) <= 3.0 * se2);
    const auto [mean3, se3] = monte_carlo_mean(bump, c3, 1.1, q, 200000, 23);
    CHECK(std::abs(std::pow(ball_average(bump, c3, 1.1, q), q) - mean3) <= 3.0 * se3);
  }
}

TEST_CASE("reverse Hoelder estimates") {
  const SamplePlan plan = SamplePlan::defaults(5, 16, 8);
  CHECK(rh_constant_estimate(Potential::constant(3.0, 5), 3.0, plan).constant == doctest::Approx(1.0).epsilon(1e-14));

  // centered balls of a homogeneous potential: ratio independent of r
  SamplePlan centered;
  centered.centers = {std::vector<double>(5, 0.0)};
  const double expected = std::cbrt(5.0 / 11.0) / (5.0 / 7.0);
  for (double r : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    centered.radii = {r};
    CHECK(rh_constant_estimate(Potential::power(2, 5, 3), 3.0, centered).constant ==
          doctest::Approx(expected).epsilon(1e-6));
  }

  // a ball that only grazes the support of a ramp makes the ratio blow up like eps^{1/q - 1}
  const GridSpec grid{1, 64, 4.0};
  const SampledField indicator = SampledField::from_function(grid, [](std::span<const double> x) {
    return std::abs(x[0]) <= 0.5 ? 1.0 : 0.0;
  });
  const Potential V = Potential::sampled(indicator);
  SamplePlan graze;
  const double r = 0.25, edge = -0.5625, eps = 1e-9;
  graze.centers = {{edge + eps - r}};
  graze.radii = {r};
  const RhEstimate low = rh_constant_estimate(V, 2.0, graze);
  const RhEstimate high = rh_constant_estimate(V, 20.0, graze);
  CHECK(high.constant > low.constant);
  CHECK_FALSE(low.flagged);
  CHECK(high.flagged);
  CHECK(high.constant == doctest::Approx(std::pow(eps, 1.0 / 20 - 1.0) * std::pow(10.5, -1.0 / 20)).epsilon(1e-6));
}

TEST_CASE("critical radius closed forms and the generic path") {
  const std::vector<double> origin(5, 0.0);
  const CriticalRadiusOptions generic{1e-6, 1e6, 20, Integration::quadrature};

  const double gamma_constant = std::pow(kOmega5, -0.5);
  CHECK(critical_radius(Potential::constant(1.0, 5), origin, 1e-12).gamma == doctest::Approx(gamma_constant).epsilon(1e-14));
  const CriticalRadius scanned = critical_radius(Potential::constant(1.0, 5), origin, 1e-10, generic);
  CHECK(std::abs(scanned.gamma - gamma_constant) <= 1e-6 * gamma_constant);
  CHECK(scanned.iterations > 0);

  const double gamma_power = std::pow(5.0 / 7.0 * kOmega5, -0.25);
  CHECK(critical_radius(Potential::power(2, 5, 3), origin, 1e-12).gamma == doctest::Approx(gamma_power).epsilon(1e-14));
  CHECK(std::abs(critical_radius(Potential::power(2, 5, 3), origin, 1e-10, generic).gamma - gamma_power) <=
        1e-6 * gamma_power);

  // off-center power potential and a periodic bump only have the generic path
  const std::vector<double> x = {0.4, -0.3, 0.0, 0.2, 0.1};
  const Potential power = Potential::power(2, 5, 3);
  CHECK(std::abs(critical_radius(power, x, 1e-10).gamma - critical_radius(power, x, 1e-10, generic).gamma) <=
        1e-8 * critical_radius(power, x, 1e-10).gamma);
}

TEST_CASE("critical radius scaling and flags") {
  // s^2 V(s x) for V = |x|^2 is s^4 |x|^2, and gamma(0) scales by 1/s
  const std::vector<double> origin(5, 0.0);
  const CriticalRadiusOptions generic{1e-6, 1e6, 20, Integration::quadrature};
  const double base = critical_radius(Potential::power(2, 5, 3), origin, 1e-10, generic).gamma;
  for (double s : {0.5, 2.0, 3.0})
    CHECK(critical_radius(Potential::power(2, 5, 3, std::pow(s, 4)), origin, 1e-10, generic).gamma ==
          doctest::Approx(base / s).epsilon(1e-7));

  CHECK(critical_radius(Potential::constant(0.0, 5), origin, 1e-8).flag == RadiusFlag::infinite);
  CHECK(critical_radius(Potential::constant(1e20, 5), origin, 1e-8, generic).flag == RadiusFlag::zero);
  CHECK(critical_radius(Potential::constant(1e-20, 5), origin, 1e-8, generic).flag == RadiusFlag::infinite);
  CHECK(std::string(to_string(RadiusFlag::zero)) == "zero");
  CHECK_THROWS_AS(critical_radius(Potential::constant(1.0, 5), origin, 0.0), std::invalid_argument);
}

TEST_CASE("critical radius is positive and finite for the power family") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(5);
    for (double& v : x) v = unit(rng);
    const CriticalRadius cr = critical_radius(Potential::power(2, 5, 3), x, 1e-10);
    CHECK(cr.flag == RadiusFlag::ok);
    CHECK(cr.gamma > 0.0);
    CHECK(std::isfinite(cr.gamma));
    // the level function equals one at gamma
    const double level = std::pow(cr.gamma, -3.0) * ball_integral(Potential::power(2, 5, 3), x, cr.gamma, 1.0);
    CHECK(level == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("gamma on a grid") {
  const GridSpec grid{1, 16, 2 * kPi};
  const Potential bump = Potential::periodic_bump(10.0, 1.0 / kPi, 1);
  const Eigen::VectorXd gamma = critical_radius_field(bump, grid);
  for (int i = 0; i < grid.m; ++i) {
    const std::vector<double> x = {grid.coordinate(i)};
    CHECK(gamma(i) == doctest::Approx(critical_radius(bump, x, 1e-8).gamma).epsilon(1e-12));
  }
  // sin^2 is even about 0, so gamma is symmetric on the grid
  for (int i = 1; i < grid.m; ++i) CHECK(gamma(i) == doctest::Approx(gamma(grid.m - i)).epsilon(1e-7));
}

TEST_CASE("gamma comparability") {
  const std::vector<double> k0_grid = {1, 2, 4};
  const Potential power = Potential::power(2, 5, 3);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> same = {{{0.5, 0, 0, 0, 0}, {0.5, 0, 0, 0, 0}}};
  const ComparabilityReport diag = check_gamma_comparability(power, same, k0_grid);
  CHECK(diag.feasible);
  CHECK(diag.C == doctest::Approx(1.0));

  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int i = 0; i < 40; ++i) {
    std::vector<double> x(5), y(5);
    for (double& v : x) v = unit(rng);
    for (double& v : y) v = unit(rng);
    pairs.emplace_back(x, y);
  }
  const ComparabilityReport constant = check_gamma_comparability(Potential::constant(2.0, 5), pairs, k0_grid);
  CHECK(constant.feasible);
  CHECK(constant.C == doctest::Approx(1.0));
  CHECK(constant.k0 == 1.0);

  // close pairs: gamma(x) / gamma(y) stays below the reported C
  std::vector<std::pair<std::vector<double>, std::vector<double>>> close;
  std::uniform_real_distribution<double> dir(-1.0, 1.0);
  for (const auto& [x, unused] : pairs) {
    const double gx = critical_radius(power, x, 1e-10).gamma;
    std::vector<double> y = x;
    y[0] += 0.9 * gx * dir(rng) / std::sqrt(5.0);
    y[1] += 0.9 * gx * dir(rng) / std::sqrt(5.0);
    close.emplace_back(x, y);
  }
  const ComparabilityReport r = check_gamma_comparability(power, close, k0_grid);
  REQUIRE(r.feasible);
  double needed = 0.0;
  for (const auto& [x, y] : close) {
    const double gx = critical_radius(power, x, 1e-10).gamma, gy = critical_radius(power, y, 1e-10).gamma;
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    const double s = 1.0 + std::sqrt(d2) / gx;
    const double lower = gx * std::pow(s, -r.k0) / gy;
    const double upper = gy / (gx * std::pow(s, r.k0 / (r.k0 + 1.0)));
    CHECK(lower <= r.C * (1 + 1e-9));
    CHECK(upper <= r.C * (1 + 1e-9));
    needed = std::max({needed, lower, upper});
  }
  // C is the smallest constant for the chosen k0
  CHECK(r.C == doctest::Approx(std::max(1.0, needed)).epsilon(1e-9));
  std::vector<std::pair<std::vector<double>, std::vector<double>>> degenerate = {{{0.0}, {1.0}}};
  CHECK_FALSE(check_gamma_comparability(Potential::constant(0.0, 1), degenerate, k0_grid).feasible);
}

TEST_CASE("V^2 integral against its closed form for constant V") {
  const double c = 1.7, A4 = kA1, t = 0.3;
  const std::vector<double> x = {0.2, 0.1, -0.3, 0.0, 0.5};
  // t^{-n/4} int exp(-A4 |z|^{4/3} / t^{1/3}) dz = |S^4| (3/4) Gamma(15/4) A4^{-15/4}
  const double expected = c * c * unit_sphere_area(5) * 0.75 * std::tgamma(3.75) * std::pow(A4, -3.75);
  CHECK(lemma_v_integral(Potential::constant(c, 5), x, t, A4) == doctest::Approx(expected).epsilon(1e-8));
  const std::vector<double> origin(5, 0.0);
  CHECK(lemma_v_integral(Potential::constant(0.0, 5), origin, t, A4) == 0.0);
}

TEST_CASE("V^2 integral bound sweeps") {
  SUBCASE("zero potential") {
    const BoundSweepReport r = check_lemma_v(Potential::constant(0.0, 5), {{0, 0, 0, 0, 0}}, {0.1, 1.0});
    for (const auto& p : r.points) CHECK(p.ratio == 0.0);
    CHECK(r.empirical_C == 0.0);
  }
  SUBCASE("constant potential ratio does not depend on x") {
    const Potential V = Potential::constant(1.0, 5, 10.0);
    const double g4 = std::pow(critical_radius(V, std::vector<double>(5, 0.0), 1e-12).gamma, 4);
    const BoundSweepReport r =
        check_lemma_v(V, {{0, 0, 0, 0, 0}, {1.0, 2.0, 0, 0, 0}}, {0.01 * g4, 0.1 * g4, g4});
    REQUIRE(r.points.size() == 6);
    for (std::size_t i = 0; i < 3; ++i) CHECK(r.points[i].ratio == doctest::Approx(r.points[i + 3].ratio).epsilon(1e-9));
    CHECK_THROWS_AS(check_lemma_v(V, {{0, 0, 0, 0, 0}}, {2.0 * g4}), std::invalid_argument);
  }
  SUBCASE("power potential ratios stay bounded") {
    const Potential V = Potential::power(2, 5, 3);
    const std::vector<std::vector<double>> xs = {{0.5, 0, 0, 0, 0}, {0, 1.0, 0.5, 0, 0}, {2.0, 0, 0, 0, 0}};
    double gmin = 1e300;
    for (const auto& x : xs) gmin = std::min(gmin, critical_radius(V, x, 1e-12).gamma);
    std::vector<double> ts;
    for (int j = 0; j < 12; ++j) ts.push_back(std::pow(gmin, 4) * std::pow(0.5, j));
    const BoundSweepReport r = check_lemma_v(V, xs, ts);
    CHECK(std::isfinite(r.empirical_C));
    CHECK(r.empirical_C > 0.0);
    CHECK(r.stabilized);
    CHECK(r.bound_name == "V");
  }
}
