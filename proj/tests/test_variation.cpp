#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bvc/engine.hpp"
#include "bvc/variation.hpp"

using namespace bvc;

namespace {

// Exhaustive search by recursion over the next chosen index, kept apart from the library's bitmask version.
double recursive_power(const std::vector<double>& w, int last, double rho) {
  double best = 0.0;
  for (std::size_t j = static_cast<std::size_t>(last) + 1; j < w.size(); ++j)
    best = std::max(best, std::pow(std::abs(w[last] - w[j]), rho) + recursive_power(w, static_cast<int>(j), rho));
  return best;
}

double recursive_seminorm(const std::vector<double>& w, double rho) {
  double best = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) best = std::max(best, recursive_power(w, static_cast<int>(i), rho));
  return std::pow(best, 1.0 / rho);
}

std::vector<double> random_samples(std::mt19937_64& rng, int length) {
  std::normal_distribution<double> normal;
  std::vector<double> w(static_cast<std::size_t>(length));
  for (double& x : w) x = normal(rng);
  return w;
}

}  // namespace

TEST_CASE("seminorm on small examples") {
  const VariationParams p3{3.0};
  const std::vector<double> constant = {2.0, 2.0, 2.0, 2.0};
  const std::vector<double> step = {0.0, 1.0};
  const std::vector<double> alternating = {0.0, 1.0, 0.0, 1.0};
  CHECK(rho_variation_seminorm(constant, p3) == 0.0);
  CHECK(rho_variation_seminorm(step, p3) == 1.0);
  CHECK(rho_variation_seminorm(alternating, p3) == doctest::Approx(std::cbrt(3.0)).epsilon(1e-15));
  CHECK(brute_force_seminorm(constant, p3) == 0.0);
  CHECK(brute_force_seminorm(step, p3) == 1.0);
  CHECK(brute_force_seminorm(alternating, p3) == rho_variation_seminorm(alternating, p3));
}

TEST_CASE("dynamic program equals exhaustive search bit for bit") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> length(1, 12);
  int mismatches = 0;
  for (int trial = 0; trial < 300; ++trial) {
    for (double rho : {2.5, 3.0, 4.0}) {
      const auto w = random_samples(rng, length(rng));
      const VariationParams p{rho};
      const double dp = rho_variation_seminorm(w, p);
      if (dp != brute_force_seminorm(w, p)) ++mismatches;
      CHECK(dp == doctest::Approx(recursive_seminorm(w, rho)).epsilon(1e-13));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("maximizing path reproduces the value") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = random_samples(rng, 10);
    const VariationParams p{3.0};
    const VariationPath path = rho_variation_path(w, p);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < path.indices.size(); ++i) {
      CHECK(path.indices[i] < path.indices[i + 1]);
      sum += std::pow(std::abs(w[path.indices[i]] - w[path.indices[i + 1]]), 3.0);
    }
    CHECK(std::cbrt(sum) == doctest::Approx(path.value).epsilon(1e-14));
    CHECK(path.value == doctest::Approx(rho_variation_seminorm(w, p)).epsilon(1e-15));
  }
}

TEST_CASE("seminorm properties on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto v = random_samples(rng, 9);
    const auto w = random_samples(rng, 9);
    std::vector<double> sum(9), scaled(9), shifted(9);
    for (int i = 0; i < 9; ++i) {
      sum[i] = v[i] + w[i];
      scaled[i] = -2.5 * v[i];
      shifted[i] = v[i] + 4.0;
    }
    const VariationParams p{3.0};
    const double nv = rho_variation_seminorm(v, p);
    CHECK(rho_variation_seminorm(scaled, p) == doctest::Approx(2.5 * nv).epsilon(1e-13));
    CHECK(rho_variation_seminorm(shifted, p) == doctest::Approx(nv).epsilon(1e-13));
    CHECK(rho_variation_seminorm(sum, p) <= nv + rho_variation_seminorm(w, p) + 1e-13);
    // larger rho gives a smaller seminorm
    CHECK(rho_variation_seminorm(v, VariationParams{2.5}) >= nv - 1e-13);
    CHECK(rho_variation_seminorm(v, VariationParams{4.0}) <= nv + 1e-13);
    // dropping a sample never increases the value
    std::vector<double> fewer(v.begin(), v.end());
    fewer.erase(fewer.begin() + 4);
    CHECK(rho_variation_seminorm(fewer, p) <= nv);
  }
}

TEST_CASE("invalid inputs are rejected") {
  const std::vector<double> with_nan = {0.0, std::nan(""), 1.0};
  CHECK_THROWS_AS(rho_variation_seminorm(with_nan, VariationParams{3.0}), std::invalid_argument);
  const std::vector<double> w = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(rho_variation_seminorm(w, TimeLadder::geometric(1.0, 0.5, 4), VariationParams{3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(rho_variation_seminorm(w, VariationParams{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_seminorm(std::vector<double>(17, 0.0), VariationParams{3.0}), std::invalid_argument);
  CHECK(VariationParams{2.0}.outside_theorem_regime());
  CHECK_FALSE(VariationParams{2.5}.outside_theorem_regime());
}

TEST_CASE("time ladders") {
  const TimeLadder g = TimeLadder::geometric(1.0, 0.85, 64);
  CHECK(g.size() == 64);
  CHECK(g.times[0] == 1.0);
  CHECK(g.times[63] == doctest::Approx(std::pow(0.85, 63)));
  const TimeLadder d = TimeLadder::defaults();
  CHECK(d.times == g.times);

  const TimeLadder parsed = TimeLadder::parse("geometric:2,0.5,5");
  CHECK(parsed.times == std::vector<double>{2.0, 1.0, 0.5, 0.25, 0.125});
  CHECK(TimeLadder::parse("1,0.3,0.01").times == std::vector<double>{1.0, 0.3, 0.01});
  CHECK_THROWS_AS(TimeLadder::parse("geometric:1,1.5,4"), std::invalid_argument);
  CHECK_THROWS_AS(TimeLadder::parse("1,2"), std::invalid_argument);
  CHECK_THROWS_AS(TimeLadder::parse("1,x"), std::invalid_argument);

  const TimeLadder r = parsed.refined();
  CHECK(r.size() == 2 * parsed.size() - 1);
  for (std::size_t i = 0; i < parsed.size(); ++i) CHECK(r.times[2 * i] == parsed.times[i]);
  CHECK(r.times[1] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("variation and square function fields") {
  const GridSpec grid{1, 64, 2.0 * std::numbers::pi};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(grid.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  const SampledField f(grid, v);
  const Evolution heat = [&](double t) { return biharmonic_step(f, t); };
  const Evolution frozen = [&](double) { return f; };
  const TimeLadder ladder = TimeLadder::geometric(1.0, 0.7, 12);

  SUBCASE("constant evolution gives zero") {
    CHECK(variation_field(frozen, ladder, VariationParams{3.0}).values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(square_function_field(frozen, ladder).values.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("two-time ladder is the pointwise increment") {
    const TimeLadder two({0.5, 0.1});
    const Eigen::VectorXd expected = (heat(0.5).values - heat(0.1).values).cwiseAbs();
    CHECK((variation_field(heat, two, VariationParams{3.0}).values - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("refinement never decreases the field") {
    const Eigen::VectorXd coarse = variation_field(heat, ladder, VariationParams{3.0}).values;
    const Eigen::VectorXd fine = variation_field(heat, ladder.refined(), VariationParams{3.0}).values;
    CHECK((fine - coarse).minCoeff() >= 0.0);
  }
  SUBCASE("square function is a fixed-sequence lower bound for rho = 2") {
    const Eigen::VectorXd sq = square_function_field(heat, ladder).values;
    const Eigen::VectorXd var2 = variation_field(heat, ladder, VariationParams{2.0}).values;
    CHECK((var2 - sq).minCoeff() >= -1e-15);
    Eigen::VectorXd direct = Eigen::VectorXd::Zero(grid.size());
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i)
      direct += (heat(ladder.times[i]).values - heat(ladder.times[i + 1]).values).array().square().matrix();
    CHECK((sq - direct.cwiseSqrt()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("path matrices agree with the field routines") {
    Eigen::MatrixXd paths(static_cast<Eigen::Index>(ladder.size()), grid.size());
    for (std::size_t i = 0; i < ladder.size(); ++i)
      paths.row(static_cast<Eigen::Index>(i)) = heat(ladder.times[i]).values.transpose();
    CHECK((variation_of_paths(paths, VariationParams{3.0}) - variation_field(heat, ladder, VariationParams{3.0}).values)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((square_function_of_paths(paths) - square_function_field(heat, ladder).values).cwiseAbs().maxCoeff() < 1e-15);
  }
}
