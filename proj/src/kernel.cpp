#include "bvc/kernel.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "bvc/error.hpp"
#include "bvc/specfun.hpp"

namespace bvc {
namespace {

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("kernel: t must be positive and finite");
}

double similarity_variable(double x_mag, double t) { return std::abs(x_mag) * std::pow(t, -0.25); }

}  // namespace

double b_eval(int n, double x_mag, double t) {
  check_time(t);
  return std::pow(t, -0.25 * n) * g_profile(n, similarity_variable(x_mag, t));
}

double b_time_derivative(int n, double x_mag, double t) {
  check_time(t);
  const double eta = similarity_variable(x_mag, t);
  const double bracket = 0.25 * n * g_profile(n, eta) + 0.25 * eta * g_derivative(n, eta, 1);
  return -std::pow(t, -0.25 * n - 1.0) * bracket;
}

double b_space_gradient(int n, double x_mag, double t) {
  check_time(t);
  const double eta = similarity_variable(x_mag, t);
  return std::pow(t, -0.25 * (n + 1)) * std::abs(g_derivative(n, eta, 1));
}

double b_mixed_derivative(int n, double x_mag, double t) {
  check_time(t);
  const double eta = similarity_variable(x_mag, t);
  const double bracket = 0.25 * (n + 1) * g_derivative(n, eta, 1) + 0.25 * eta * g_derivative(n, eta, 2);
  return std::pow(t, -0.25 * (n + 1) - 1.0) * std::abs(bracket);
}

KernelGrid KernelGrid::defaults() {
  KernelGrid grid;
  for (int i = 0; i < 24; ++i) grid.t_grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 23.0));
  for (int i = 0; i < 32; ++i) grid.eta_grid.push_back(12.0 * i / 31.0);
  return grid;
}

KernelGrid KernelGrid::defaults_up_to(double eta_end) {
  KernelGrid grid = defaults();
  std::vector<double> kept;
  for (double eta : grid.eta_grid)
    if (eta <= eta_end) kept.push_back(eta);
  grid.eta_grid = kept;
  return grid;
}

KernelGrid KernelGrid::mixed_defaults() {
  KernelGrid grid = defaults();
  grid.eta_grid.clear();
  for (int i = 0; i <= 93; ++i) grid.eta_grid.push_back(12.0 * i / 31.0);
  grid.eta_max = 36.0;
  return grid;
}

namespace {

struct ProfileValues {
  double g = 0.0, g1 = 0.0, g2 = 0.0;
  bool ok = true;
};

}  // namespace

LemmaKReport verify_lemma_k(int n, const KernelGrid& grid, const KernelGrid& mixed_grid) {
  ProfileQuery{n, 0.0, 0}.validate();
  for (double t : grid.t_grid) check_time(t);
  for (double t : mixed_grid.t_grid) check_time(t);

  std::map<double, ProfileValues> cache;
  auto profile = [&](double eta) -> const ProfileValues& {
    auto it = cache.find(eta);
    if (it != cache.end()) return it->second;
    ProfileValues v;
    try {
      v.g = g_profile(n, eta);
      v.g1 = g_derivative(n, eta, 1);
      v.g2 = g_derivative(n, eta, 2);
    } catch (const QuadratureError&) {
      v.ok = false;
    }
    return cache.emplace(eta, v).first->second;
  };

  // Calls visit(base point, profile values) for every (t, x) of the grid.
  auto for_each_point = [&](const KernelGrid& g, auto&& visit) {
    for (double t : g.t_grid) {
      const double t14 = std::pow(t, 0.25);
      std::vector<std::pair<double, double>> xs;  // (x, eta)
      if (g.x_grid.empty()) {
        for (double eta : g.eta_grid) xs.emplace_back(eta * t14, eta);
      } else {
        for (double x : g.x_grid) {
          if (!(x >= 0.0)) throw std::invalid_argument("verify_lemma_k: x grid must be nonnegative");
          xs.emplace_back(x, x / t14);
        }
      }
      for (auto [x, eta] : xs) {
        KernelPoint base;
        base.n = n;
        base.x_mag = x;
        base.t = t;
        base.eta = eta;
        if (eta > g.eta_max) base.flag = PointFlag::unresolved;
        ProfileValues v;
        if (base.flag == PointFlag::ok) {
          v = profile(eta);
          if (!v.ok) base.flag = PointFlag::quadrature_failure;
        }
        visit(base, v);
      }
    }
  };

  LemmaKReport out;
  out.k.bound_name = "k";
  out.kt.bound_name = "kt";
  out.kx.bound_name = "kx";
  out.bxt.bound_name = "bxt";

  for_each_point(grid, [&](const KernelPoint& base, const ProfileValues& v) {
    const double t = base.t, eta = base.eta;
    const double decay = std::exp(-kA1 * std::pow(eta, 4.0 / 3.0));
    const double time_bracket = 0.25 * n * v.g + 0.25 * eta * v.g1;

    KernelPoint p = base;
    p.value = std::pow(t, -0.25 * n) * v.g;
    p.bound = std::pow(t, -0.25 * n) * decay;
    out.k.points.push_back(p);

    p = base;
    p.value = -std::pow(t, -0.25 * n - 1.0) * time_bracket;
    p.bound = std::pow(t, -0.25 * n - 1.0) * std::pow(1.0 + eta, -n / 3.0 + 4.0 / 3.0) * decay;
    out.kt.points.push_back(p);

    p = base;
    p.value = std::pow(t, -0.25 * (n + 1)) * std::abs(v.g1);
    p.bound = std::pow(t, -0.25 * (n + 1)) * std::pow(1.0 + eta, -(n - 1) / 3.0) * decay;
    out.kx.points.push_back(p);
  });

  std::vector<KernelPoint> mixed;
  for_each_point(mixed_grid, [&](const KernelPoint& base, const ProfileValues& v) {
    const double t = base.t, eta = base.eta;
    const double scale = std::pow(t, 0.25) + base.x_mag;
    const double time_bracket = 0.25 * n * v.g + 0.25 * eta * v.g1;
    const double mixed_bracket = 0.25 * (n + 1) * v.g1 + 0.25 * eta * v.g2;

    KernelPoint p = base;
    p.value = -std::pow(t, -0.25 * n - 1.0) * time_bracket;
    p.bound = std::pow(scale, -(n + 4.0));
    out.bxt.points.push_back(p);

    p = base;
    p.value = std::pow(t, -0.25 * (n + 1) - 1.0) * std::abs(mixed_bracket);
    p.bound = std::pow(scale, -(n + 5.0));
    mixed.push_back(p);
  });
  out.bxt.points.insert(out.bxt.points.end(), mixed.begin(), mixed.end());

  for (BoundSweepReport* r : {&out.k, &out.kt, &out.kx, &out.bxt}) {
    finalize_ratios(*r);
    r->stabilized = tail_stabilized(*r);
  }
  return out;
}

}  // namespace bvc
