// Acceptance run: one PASS/FAIL line per criterion with its runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bvc/config.hpp"
#include "bvc/engine.hpp"
#include "bvc/experiments.hpp"
#include "bvc/potential.hpp"
#include "bvc/specfun.hpp"

using namespace bvc;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& text) { detail += (detail.empty() ? "" : "; ") + text; }
};

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4g", v);
  return buffer;
}

// Reports of default-config runs with one worker, reused by the determinism check.
std::map<std::string, ExperimentReport> g_runs;

const ExperimentReport& run_default(const std::string& name) {
  auto it = g_runs.find(name);
  if (it == g_runs.end()) it = g_runs.emplace(name, run_experiment(make_config(name, {{"workers", "1"}}))).first;
  return it->second;
}

void require_experiment(Outcome& o, const std::string& name, double budget_s = 0.0) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentReport& r = run_default(name);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  o.require(r.passed(), name + " gates (" + (r.failures.empty() ? "" : r.failures.front()) + ")");
  if (budget_s > 0.0) {
    o.require(s < budget_s, name + " over its time budget");
    o.note(name + " " + num(s) + " s");
  }
}

double relative_l2(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

SampledField smooth_input(const GridSpec& grid, int band, std::uint64_t trial) {
  return BandLimitedField::random(grid.d, grid.box, band, 7, trial).sample(grid);
}

Outcome profile_correctness() {
  Outcome o;
  const double exact = std::tgamma(0.25) / (2.0 * std::sqrt(2.0 * kPi));
  const double err = std::abs(g_profile(1, 0.0) - exact);
  o.require(err <= 1e-8, "g(0) for n = 1");
  o.note("|g(0) - closed form| = " + num(err));
  for (int n = 1; n <= 3; ++n) {
    const double mass = profile_integral(n) * std::pow(2.0 * kPi, -0.5 * n);
    o.require(std::abs(mass - 1.0) <= 1e-6, "unit mass for n = " + std::to_string(n));
    o.note("n=" + std::to_string(n) + " mass-1 = " + num(mass - 1.0));
  }
  return o;
}

Outcome envelope_sweeps() {
  Outcome o;
  require_experiment(o, "kernel-check");
  require_experiment(o, "g-envelope");
  return o;
}

Outcome variation_oracle() {
  Outcome o;
  require_experiment(o, "variation-selftest");
  o.note("mismatches = " + g_runs.at("variation-selftest").summary_value("mismatches"));
  return o;
}

Outcome semigroup_algebra() {
  Outcome o;
  const GridSpec grid{1, 128, 2 * kPi};
  const SampledField f = smooth_input(grid, 8, 0);
  const SampledField shifted(grid, (f.values.array() + 3.0).matrix());
  const SampledField V = sample_on_grid(Potential::periodic_bump(10.0, 1.0 / kPi, 1), grid);
  const DenseSchrodinger dense(grid, V);

  const double mass_before = shifted.values.sum();
  double mass_err = 0.0, law_err = 0.0;
  bool contraction = true;
  for (double t : {1e-3, 0.05, 0.4}) {
    const SampledField bt = biharmonic_step(shifted, t);
    mass_err = std::max(mass_err, std::abs(bt.values.sum() - mass_before) / std::abs(mass_before));
    contraction = contraction && bt.values.norm() <= shifted.values.norm() * (1 + 1e-14);
    contraction = contraction && dense.evolve(f, t).values.norm() <= f.values.norm() * (1 + 1e-12);
    contraction = contraction && schrodinger4_evolve(f, V, t, 32).values.norm() <= f.values.norm() * (1 + 1e-12);
    const SampledField composed = biharmonic_step(biharmonic_step(f, t), 0.5 * t);
    law_err = std::max(law_err, relative_l2(composed.values, biharmonic_step(f, 1.5 * t).values));
  }
  o.require(mass_err <= 1e-12, "mass conservation");
  o.require(contraction, "L2 contraction");
  o.require(law_err <= 1e-12, "semigroup law");
  o.note("mass " + num(mass_err) + ", law " + num(law_err));

  // splitting error against the eigendecomposition; fewer than 16 substeps is pre-asymptotic (stiff Delta^2)
  const double t = 0.1;
  const Eigen::VectorXd exact = dense.evolve(f, t).values;
  std::vector<int> steps = {16, 32, 64, 128};
  std::vector<double> errors;
  for (int s : steps) errors.push_back(relative_l2(schrodinger4_evolve(f, V, t, s).values, exact));
  std::string orders;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const double order = std::log2(errors[i] / errors[i + 1]);
    orders += (orders.empty() ? "" : ",") + num(order);
    o.require(order >= 1.7 && order <= 2.3, "Strang order from " + std::to_string(steps[i]));
  }
  o.note("Strang orders 16..128: " + orders + " (finest error " + num(errors.back()) + ")");
  return o;
}

Outcome duhamel() {
  Outcome o;
  require_experiment(o, "duhamel-check");
  const ExperimentReport& r = g_runs.at("duhamel-check");
  o.note("V=0 residual " + r.summary_value("zero_potential_residual") + ", reductions " +
         r.summary_value("reduction_16_to_32") + " / " + r.summary_value("reduction_32_to_64"));
  return o;
}

Outcome poisson() {
  Outcome o;
  const GridSpec grid{1, 64, 2 * kPi};
  const SampledField zero = SampledField::zeros(grid);
  const PoissonParams params{0.5, 64};
  double worst = 0.0;
  for (int k : {1, 2, 3, 5})
    for (double t : {0.01, 0.1, 0.5, 1.0}) {
      const SampledField mode =
          SampledField::from_function(grid, [k](std::span<const double> x) { return std::cos(k * x[0]); });
      const double mu = std::pow(k, 4.0);
      const Eigen::VectorXd expected = std::exp(-t * std::sqrt(mu)) * mode.values;
      worst = std::max(worst, (poisson_apply(mode, zero, t, params).values - expected).cwiseAbs().maxCoeff());
    }
  o.require(worst <= 1e-8, "eigenfunction identity at 64 nodes");
  const SampledField f = smooth_input(grid, 2, 1);
  const double change =
      (poisson_apply(f, zero, 1e-3, params).values - f.values).cwiseAbs().maxCoeff() / f.values.cwiseAbs().maxCoeff();
  o.require(change <= 0.01, "identity limit at t = 1e-3");
  o.note("eigen error " + num(worst) + ", relative change at t=1e-3 " + num(change));
  return o;
}

Outcome critical_radius_cases() {
  Outcome o;
  const std::vector<double> origin(5, 0.0);
  CriticalRadiusOptions generic;
  generic.integration = Integration::quadrature;
  const double omega5 = unit_ball_volume(5);
  struct Case {
    std::string name;
    Potential V;
    double closed;
  };
  const std::vector<Case> cases = {{"constant c=1", Potential::constant(1.0, 5), std::pow(omega5, -0.5)},
                                   {"power a=2", Potential::power(2, 5, 3), std::pow(5.0 / 7.0 * omega5, -0.25)}};
  for (const auto& c : cases) {
    const double fast = critical_radius(c.V, origin, 1e-12).gamma;
    const double scanned = critical_radius(c.V, origin, 1e-12, generic).gamma;
    o.require(std::abs(fast - c.closed) <= 1e-12 * c.closed, c.name + " closed form");
    o.require(std::abs(scanned - c.closed) <= 1e-6 * c.closed, c.name + " generic path");
    o.note(c.name + ": gamma " + num(c.closed) + ", scan rel err " + num(std::abs(scanned - c.closed) / c.closed));
  }
  require_experiment(o, "gamma-table");
  return o;
}

Outcome comparability_and_integral() {
  Outcome o;
  require_experiment(o, "lemma25-check");
  const ExperimentReport& r = g_runs.at("lemma25-check");
  o.note("C " + r.summary_value("comparability_C") + ", k0 " + r.summary_value("comparability_k0") +
         ", integral C " + r.summary_value("integral_bound_C"));
  return o;
}

Outcome operator_constants() {
  Outcome o;
  for (const char* name : {"opnorm-biharmonic", "opnorm-schrodinger", "opnorm-poisson", "morrey-biharmonic",
                           "morrey-schrodinger", "morrey-poisson"})
    require_experiment(o, name, 300.0);
  return o;
}

Outcome maximal_domination() {
  Outcome o;
  require_experiment(o, "maximal-domination");
  const ExperimentReport& r = g_runs.at("maximal-domination");
  o.note("C " + r.summary_value("empirical_C") + ", first half " + r.summary_value("first_half_C") +
         ", ladder delta " + r.summary_value("ladder_delta"));
  return o;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "bvc_acceptance_determinism";
  fs::remove_all(root);
  int compared = 0;
  for (const auto& name : registered_experiments()) {
    const auto one = write_report(run_default(name), root / "w1", false);
    const auto again = write_report(run_experiment(make_config(name, {{"workers", "1"}})), root / "w1b", false);
    const auto three = write_report(run_experiment(make_config(name, {{"workers", "3"}})), root / "w3", false);
    for (std::size_t i = 0; i < one.size(); ++i) {
      const std::string ref = slurp(one[i]);
      o.require(i < again.size() && slurp(again[i]) == ref, one[i].filename().string() + " repeat run");
      o.require(i < three.size() && slurp(three[i]) == ref, one[i].filename().string() + " with 3 workers");
      ++compared;
    }
  }
  o.note(std::to_string(compared) + " CSV files compared");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"profile correctness", 10, profile_correctness},
      {"envelope sweeps", 60, envelope_sweeps},
      {"variation oracle equivalence", 10, variation_oracle},
      {"semigroup algebra", 30, semigroup_algebra},
      {"Duhamel residual", 60, duhamel},
      {"Poisson subordination", 30, poisson},
      {"critical radius", 10, critical_radius_cases},
      {"comparability and integral bound", 120, comparability_and_integral},
      {"operator-constant stabilization", 6 * 300, operator_constants},
      {"maximal-domination diagnostic", 120, maximal_domination},
      {"determinism", 0, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].run();
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].budget_s > 0) out.require(seconds < criteria[i].budget_s, "runtime budget " + num(criteria[i].budget_s) + " s");
    if (!out.pass) ++failed;
    std::printf("%s %2zu %-34s %8.2f s  %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, seconds,
                out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
