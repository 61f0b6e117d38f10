#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "bvc/kernel.hpp"
#include "bvc/quadrature.hpp"
#include "bvc/specfun.hpp"

using namespace bvc;

namespace {

// (2 pi)^{-1/2} int cos(x k) e^{-k^4} dk by a fixed composite rule, independent of specfun.
double direct_b1(double x) {
  const Rule rule = gauss_legendre(20);
  return composite_integral([x](double k) { return std::cos(x * k) * std::exp(-k * k * k * k); }, -7.0, 7.0, 64,
                            rule) /
         std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("b at the origin and unit time is g(0)") {
  CHECK(b_eval(1, 0.0, 1.0) == doctest::Approx(g_profile(1, 0.0)).epsilon(1e-15));
  CHECK(std::abs(b_eval(1, 0.0, 1.0) - std::tgamma(0.25) / (2.0 * std::sqrt(2.0 * std::numbers::pi))) < 1e-12);
}

TEST_CASE("b is self-similar") {
  const int n = 2;
  const double x = 1.3, t = 0.7;
  CHECK(b_eval(n, x, t) == doctest::Approx(std::pow(t, -0.5) * b_eval(n, x * std::pow(t, -0.25), 1.0)).epsilon(1e-13));
}

TEST_CASE("b matches an independent cosine quadrature") {
  for (double x : {0.5, 2.0, 3.7}) CHECK(std::abs(b_eval(1, x, 1.0) - direct_b1(x)) < 1e-12);
  CHECK(std::abs(b_eval(1, 2.0, 0.3) - std::pow(0.3, -0.25) * direct_b1(2.0 * std::pow(0.3, -0.25))) < 1e-11);
  CHECK_THROWS_AS(b_eval(1, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("time derivative of b") {
  SUBCASE("origin") { CHECK(std::abs(b_time_derivative(1, 0.0, 1.0) + 0.25 * g_profile(1, 0.0)) < 1e-13); }
  SUBCASE("finite differences") {
    const double h = 1e-5;
    const double fd = (b_eval(1, 1.5, 0.5 + h) - b_eval(1, 1.5, 0.5 - h)) / (2 * h);
    CHECK(std::abs(b_time_derivative(1, 1.5, 0.5) - fd) < 1e-7);
    const double fd3 = (b_eval(3, 0.8, 2.0 + h) - b_eval(3, 0.8, 2.0 - h)) / (2 * h);
    CHECK(std::abs(b_time_derivative(3, 0.8, 2.0) - fd3) < 1e-8);
  }
  SUBCASE("scaling") {
    const int n = 2;
    const double x = 1.0, t = 2.0;
    CHECK(b_time_derivative(n, x, t) ==
          doctest::Approx(std::pow(t, -0.25 * n - 1.0) * b_time_derivative(n, x * std::pow(t, -0.25), 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("space gradient of b") {
  CHECK(std::abs(b_space_gradient(1, 0.0, 1.0)) < 1e-14);
  const double h = 1e-5;
  const double fd = (b_eval(1, 1.0 + h, 1.0) - b_eval(1, 1.0 - h, 1.0)) / (2 * h);
  CHECK(std::abs(b_space_gradient(1, 1.0, 1.0) - std::abs(fd)) < 1e-8);
  // t = 16 maps x = 2 to eta = 1 and scales by 16^{-(n+1)/4} = 1/16 for n = 3
  const double g1 = (g_profile(3, 1.0 + h) - g_profile(3, 1.0 - h)) / (2 * h);
  CHECK(std::abs(b_space_gradient(3, 2.0, 16.0) - std::abs(g1) / 16.0) < 1e-9);
}

TEST_CASE("mixed derivative of b matches nested finite differences") {
  constexpr double h = 1e-4;
  for (auto [n, x, t] : {std::tuple{1, 1.2, 0.8}, std::tuple{2, 0.6, 1.5}}) {
    auto dx = [n = n, x = x](double s) { return (b_eval(n, x + h, s) - b_eval(n, x - h, s)) / (2 * h); };
    const double fd = (dx(t + h) - dx(t - h)) / (2 * h);
    CHECK(std::abs(b_mixed_derivative(n, x, t) - std::abs(fd)) < 1e-6);
  }
}

TEST_CASE("single-point kernel sweep at the origin") {
  KernelGrid grid;
  grid.t_grid = {1.0};
  grid.eta_grid = {0.0};
  const LemmaKReport r = verify_lemma_k(1, grid, grid);
  REQUIRE(r.k.points.size() == 1);
  CHECK(r.k.points[0].ratio == doctest::Approx(g_profile(1, 0.0)).epsilon(1e-14));
  CHECK(r.k.empirical_C == doctest::Approx(g_profile(1, 0.0)).epsilon(1e-14));
  CHECK(r.bxt.points.size() == 2);
}

TEST_CASE("degenerate denominators are flagged and excluded") {
  BoundSweepReport report;
  KernelPoint good;
  good.value = 2.0;
  good.bound = 4.0;
  good.eta = 1.0;
  KernelPoint tiny = good;
  tiny.value = 1.0;
  tiny.bound = 1e-320;
  tiny.eta = 400.0;
  KernelPoint zero = good;
  zero.bound = 0.0;
  report.points = {good, tiny, zero};
  finalize_ratios(report);
  CHECK(report.points[0].ratio == 0.5);
  CHECK(report.points[1].flag == PointFlag::underflow);
  CHECK(report.points[2].flag == PointFlag::underflow);
  CHECK(report.empirical_C == 0.5);
  CHECK(report.flagged_count() == 2);
}

TEST_CASE("points beyond the resolved range are flagged") {
  KernelGrid grid;
  grid.t_grid = {1.0};
  grid.eta_grid = {0.0, 5.0, 13.0};
  const LemmaKReport r = verify_lemma_k(2, grid, grid);
  CHECK(r.k.points[2].flag == PointFlag::unresolved);
  CHECK(r.k.flagged_count() == 1);
}

TEST_CASE("tail rule") {
  BoundSweepReport report;
  for (int i = 0; i <= 12; ++i) {
    KernelPoint p;
    p.eta = i;
    p.ratio = (i == 3) ? 2.0 : 1.0;
    report.points.push_back(p);
  }
  CHECK(tail_stabilized(report));
  report.points.back().ratio = 2.5;
  CHECK_FALSE(tail_stabilized(report));
}

TEST_CASE("kernel sweeps stabilize for n = 5 up to eta = 10") {
  const LemmaKReport r = verify_lemma_k(5, KernelGrid::defaults_up_to(10.0));
  for (const BoundSweepReport* s : {&r.k, &r.kt, &r.kx, &r.bxt}) {
    CAPTURE(s->bound_name);
    CHECK(std::isfinite(s->empirical_C));
    CHECK(s->empirical_C > 0.0);
    CHECK(s->stabilized);
  }
}

TEST_CASE("sweep CSV has the documented header") {
  KernelGrid grid;
  grid.t_grid = {1.0};
  grid.eta_grid = {0.0, 1.0};
  std::ostringstream out;
  write_csv(out, verify_lemma_k(1, grid, grid).k);
  const std::string text = out.str();
  CHECK(text.rfind("n,x_mag,t,eta,value,bound,ratio,flag\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}
