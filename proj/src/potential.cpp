#include "bvc/potential.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "bvc/error.hpp"
#include "bvc/quadrature.hpp"
#include "bvc/specfun.hpp"

namespace bvc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_real(const std::string& key, const std::string& text) {
  if (text == "inf" || text == "infinity") return kInf;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw std::invalid_argument("potential: bad number for " + key + ": " + text);
  return value;
}

std::vector<double> padded(std::span<const double> x, int n) {
  if (static_cast<int>(x.size()) > n) throw std::invalid_argument("potential: point has more coordinates than n");
  std::vector<double> out(n, 0.0);
  std::copy(x.begin(), x.end(), out.begin());
  return out;
}

double euclidean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double wrap_index(double u, int m, int& cell) {
  const double fl = std::floor(u);
  const double frac = u - fl;
  const long long k = static_cast<long long>(fl);
  cell = static_cast<int>(((k % m) + m) % m);
  return frac;
}

// Periodic multilinear interpolant of grid samples.
double interpolate(const SampledField& field, std::span<const double> x) {
  const GridSpec& g = field.grid;
  const double h = g.cell();
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int axis = 0; axis < g.d; ++axis) frac[axis] = wrap_index((x[axis] + 0.5 * g.box) / h, g.m, base[axis]);
  double total = 0.0;
  for (int corner = 0; corner < (1 << g.d); ++corner) {
    double weight = 1.0;
    Eigen::Index flat = 0;
    for (int axis = 0; axis < g.d; ++axis) {
      const int bit = (corner >> axis) & 1;
      weight *= bit ? frac[axis] : 1.0 - frac[axis];
      flat = flat * g.m + (base[axis] + bit) % g.m;
    }
    if (weight != 0.0) total += weight * field.values(flat);
  }
  return total;
}

// Exact antiderivative of the piecewise-linear periodic interpolant (d = 1).
double line_antiderivative(const SampledField& field, double x) {
  const GridSpec& g = field.grid;
  const double h = g.cell();
  const double u = (x + 0.5 * g.box) / h;
  const double fl = std::floor(u);
  const long long k = static_cast<long long>(fl);
  const long long period = (k >= 0) ? k / g.m : -((-k + g.m - 1) / g.m);
  const int cell = static_cast<int>(k - period * g.m);
  double full = 0.0, prefix = 0.0;
  for (int i = 0; i < g.m; ++i) {
    const double piece = 0.5 * h * (field.values(i) + field.values((i + 1) % g.m));
    full += piece;
    if (i < cell) prefix += piece;
  }
  const double s = (u - fl) * h;
  const double v0 = field.values(cell), v1 = field.values((cell + 1) % g.m);
  return static_cast<double>(period) * full + prefix + v0 * s + (v1 - v0) * s * s / (2.0 * h);
}

// Smallest length scale on which a non-radial potential varies.
double feature_length(const Potential& V) {
  if (V.family == PotentialFamily::periodic_bump) return 0.5 / V.frequency;
  if (V.family == PotentialFamily::sampled) return V.samples->grid.cell();
  return kInf;
}

constexpr long long kMaxProductNodes = 40'000'000;

int panels_for(double length, double feature) {
  const double p = std::ceil(2.0 * length / feature);
  return static_cast<int>(std::clamp(p, 2.0, 1e7));
}

// Product Gauss-Legendre over a ball for n <= 3 (polar / spherical coordinates).
template <typename F>
double product_ball_integral(F&& vq, const std::vector<double>& c, double r, double feature) {
  const int n = static_cast<int>(c.size());
  const Rule& rule = gauss_legendre16();
  const int pr = std::max(4, panels_for(r, feature));
  if (n == 1) {
    return composite_integral([&](double s) { const double y = c[0] + s; return vq(std::span<const double>(&y, 1)); },
                              -r, r, 2 * pr, rule);
  }
  const double pi = std::numbers::pi;
  if (n == 2) {
    const int pphi = std::max(8, panels_for(2.0 * pi * r, feature));
    if (static_cast<long long>(pr) * pphi * 256 > kMaxProductNodes)
      throw QuadratureError("ball too large for product quadrature", kInf);
    return composite_integral(
        [&](double rho) {
          return rho * composite_integral(
                           [&](double phi) {
                             const double y[2] = {c[0] + rho * std::cos(phi), c[1] + rho * std::sin(phi)};
                             return vq(std::span<const double>(y, 2));
                           },
                           0.0, 2.0 * pi, pphi, rule);
        },
        0.0, r, pr, rule);
  }
  if (n == 3) {
    const int pth = std::max(4, panels_for(pi * r, feature));
    const int pphi = std::max(8, panels_for(2.0 * pi * r, feature));
    if (static_cast<long long>(pr) * pth * pphi * 4096 > kMaxProductNodes)
      throw QuadratureError("ball too large for product quadrature", kInf);
    return composite_integral(
        [&](double rho) {
          return rho * rho * composite_integral(
                                 [&](double th) {
                                   const double st = std::sin(th), ct = std::cos(th);
                                   return st * composite_integral(
                                                   [&](double phi) {
                                                     const double y[3] = {c[0] + rho * st * std::cos(phi),
                                                                          c[1] + rho * st * std::sin(phi),
                                                                          c[2] + rho * ct};
                                                     return vq(std::span<const double>(y, 3));
                                                   },
                                                   0.0, 2.0 * pi, pphi, rule);
                                 },
                                 0.0, pi, pth, rule);
        },
        0.0, r, pr, rule);
  }
  throw std::invalid_argument("ball_integral: non-radial potentials need n <= 3");
}

// Average of hq(|c + rho w|) over the unit sphere w, times its area, for |c| = cmag.
template <typename H>
double radial_shell(H&& hq, int n, double cmag, double rho) {
  if (n == 1) return hq(std::abs(cmag + rho)) + hq(std::abs(cmag - rho));
  if (cmag == 0.0 || rho == 0.0) return unit_sphere_area(n) * hq(std::hypot(cmag, rho));
  const double area = unit_sphere_area(n - 1);
  const Rule& rule = gauss_legendre16();
  const double c2r2 = cmag * cmag + rho * rho, two = 2.0 * cmag * rho;
  return area * composite_integral(
                    [&](double th) {
                      const double arg = std::sqrt(std::max(0.0, c2r2 + two * std::cos(th)));
                      return hq(arg) * std::pow(std::sin(th), n - 2);
                    },
                    0.0, std::numbers::pi, 6, rule);
}

template <typename H>
double radial_ball_integral(H&& hq, int n, double cmag, double r) {
  DoublingOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-11;
  opt.start_panels = 2;
  opt.max_panels = 1024;
  auto shell = [&](double rho) { return std::pow(rho, n - 1) * radial_shell(hq, n, cmag, rho); };
  if (n == 1) {
    auto line = [&](double y) { return hq(std::abs(y)); };
    const double lo = cmag - r, hi = cmag + r;
    if (lo < 0.0 && hi > 0.0)
      return integrate_doubling(line, lo, 0.0, opt).value + integrate_doubling(line, 0.0, hi, opt).value;
    return integrate_doubling(line, lo, hi, opt).value;
  }
  if (cmag > 0.0 && cmag < r)
    return integrate_doubling(shell, 0.0, cmag, opt).value + integrate_doubling(shell, cmag, r, opt).value;
  return integrate_doubling(shell, 0.0, r, opt).value;
}

// int_{B(c, r)} sin^2(pi f y_i) dy for each axis i, summed and scaled by amplitude / n.
double bump_ball_integral(const Potential& V, const std::vector<double>& c, double r) {
  const int n = V.n;
  const double k = 2.0 * std::numbers::pi * V.frequency;
  const double vol = unit_ball_volume(n) * std::pow(r, n);
  // int_{-r}^{r} cos(k s) omega_{n-1} (r^2 - s^2)^{(n-1)/2} ds
  const double slab = unit_ball_volume(n - 1) * std::pow(r, n) * std::sqrt(std::numbers::pi) *
                      std::tgamma(0.5 * (n + 1)) * std::pow(2.0, 0.5 * n) * bessel_j_scaled(0.5 * n, k * r);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += 0.5 * vol - 0.5 * std::cos(k * c[i]) * slab;
  return V.amplitude / n * total;
}

}  // namespace

Potential Potential::constant(double c, int n, double q0) {
  Potential V;
  V.family = PotentialFamily::constant;
  V.c = c;
  V.n = n;
  V.q0 = q0;
  V.validate();
  return V;
}

Potential Potential::power(double a, int n, double q0, double coefficient) {
  Potential V;
  V.family = PotentialFamily::power;
  V.a = a;
  V.n = n;
  V.q0 = q0;
  V.coefficient = coefficient;
  V.validate();
  return V;
}

Potential Potential::periodic_bump(double amplitude, double frequency, int n, double q0) {
  Potential V;
  V.family = PotentialFamily::periodic_bump;
  V.amplitude = amplitude;
  V.frequency = frequency;
  V.n = n;
  V.q0 = q0;
  V.validate();
  return V;
}

Potential Potential::sampled(SampledField field, double q0) {
  Potential V;
  V.family = PotentialFamily::sampled;
  V.n = field.grid.d;
  V.q0 = q0;
  V.samples = std::make_shared<const SampledField>(std::move(field));
  V.validate();
  return V;
}

Potential Potential::parse(const std::string& spec) {
  std::map<std::string, std::string> keys;
  std::istringstream in(spec);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("potential: expected key=value, got " + token);
    keys[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return from_keys(keys);
}

Potential Potential::from_keys(const std::map<std::string, std::string>& keys) {
  auto get = [&](const std::string& key, double fallback) {
    const auto it = keys.find(key);
    return it == keys.end() ? fallback : parse_real(key, it->second);
  };
  const auto fam = keys.find("family");
  const std::string family = fam == keys.end() ? "constant" : fam->second;
  const int n = static_cast<int>(get("n", 1));
  if (get("n", 1) != n) throw std::invalid_argument("potential: n must be an integer");
  const double q0 = get("q0", kInf);
  if (family == "constant") return constant(get("c", 0.0), n, q0);
  if (family == "power") return power(get("a", 2.0), n, q0, get("coeff", 1.0));
  if (family == "periodic_bump") return periodic_bump(get("amplitude", 1.0), get("frequency", 1.0), n, q0);
  if (family == "sampled") {
    const auto file = keys.find("file");
    if (file == keys.end()) throw std::invalid_argument("potential: sampled family needs file=PATH");
    std::ifstream in(file->second, std::ios::binary);
    if (!in) throw std::runtime_error("potential: cannot open " + file->second);
    return sampled(read_field(in), q0);
  }
  throw std::invalid_argument("potential: unknown family " + family);
}

bool Potential::is_zero() const {
  switch (family) {
    case PotentialFamily::constant: return c == 0.0;
    case PotentialFamily::power: return coefficient == 0.0;
    case PotentialFamily::periodic_bump: return amplitude == 0.0;
    case PotentialFamily::sampled: return (samples->values.array() == 0.0).all();
  }
  return false;
}

double Potential::radial_value(double r) const {
  if (family == PotentialFamily::constant) return c;
  if (family == PotentialFamily::power) return r == 0.0 ? (a == 0.0 ? coefficient : 0.0) : coefficient * std::pow(r, a);
  throw std::logic_error("radial_value: potential is not radial");
}

double Potential::value(std::span<const double> x) const {
  switch (family) {
    case PotentialFamily::constant: return c;
    case PotentialFamily::power: return radial_value(euclidean(x));
    case PotentialFamily::periodic_bump: {
      double s = 0.0;
      for (double xi : x) {
        const double v = std::sin(std::numbers::pi * frequency * xi);
        s += v * v;
      }
      return amplitude * s / n;
    }
    case PotentialFamily::sampled: {
      const auto p = padded(x, samples->grid.d);
      return interpolate(*samples, p);
    }
  }
  return 0.0;
}

void Potential::validate() const {
  if (n < 1) throw std::invalid_argument("potential: n must be >= 1");
  if (!(q0 > 0.0)) throw std::invalid_argument("potential: q0 must be positive");
  switch (family) {
    case PotentialFamily::constant:
      if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("potential: constant must be finite and >= 0");
      break;
    case PotentialFamily::power:
      if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("potential: exponent a must be >= 0");
      if (!(coefficient >= 0.0) || !std::isfinite(coefficient))
        throw std::invalid_argument("potential: coefficient must be finite and >= 0");
      break;
    case PotentialFamily::periodic_bump:
      if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
        throw std::invalid_argument("potential: amplitude must be finite and >= 0");
      if (!(frequency > 0.0) || !std::isfinite(frequency))
        throw std::invalid_argument("potential: frequency must be finite and > 0");
      break;
    case PotentialFamily::sampled:
      if (!samples) throw std::invalid_argument("potential: sampled family without samples");
      samples->validate();
      if ((samples->values.array() < 0.0).any()) throw std::invalid_argument("potential: negative sample");
      if (n != samples->grid.d) throw std::invalid_argument("potential: sampled n must equal grid d");
      break;
  }
}

std::string Potential::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (family) {
    case PotentialFamily::constant: out << "family=constant c=" << c; break;
    case PotentialFamily::power: out << "family=power a=" << a << " coeff=" << coefficient; break;
    case PotentialFamily::periodic_bump:
      out << "family=periodic_bump amplitude=" << amplitude << " frequency=" << frequency;
      break;
    case PotentialFamily::sampled: out << "family=sampled m=" << samples->grid.m << " d=" << samples->grid.d; break;
  }
  out << " n=" << n << " q0=" << q0;
  return out.str();
}

SampledField sample_on_grid(const Potential& V, const GridSpec& grid) {
  grid.validate();
  if (grid.d > V.n) throw std::invalid_argument("sample_on_grid: grid dimension exceeds potential dimension");
  if (V.family == PotentialFamily::sampled && !(V.samples->grid == grid))
    return SampledField::from_function(grid, [&](std::span<const double> x) { return V.value(x); });
  if (V.family == PotentialFamily::sampled) return *V.samples;
  return SampledField::from_function(grid, [&](std::span<const double> x) {
    const auto p = padded(x, V.n);
    return V.value(p);
  });
}

double ball_integral(const Potential& V, std::span<const double> center, double r, double q, Integration how) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("ball_integral: radius must be finite and > 0");
  if (!(q >= 1.0) || !std::isfinite(q)) throw std::invalid_argument("ball_integral: power q must be >= 1");
  const int n = V.n;
  const auto c = padded(center, n);
  const double cmag = euclidean(c);
  const bool closed = how == Integration::automatic;

  if (V.radial()) {
    if (closed && V.family == PotentialFamily::constant)
      return std::pow(V.c, q) * unit_ball_volume(n) * std::pow(r, n);
    if (closed && V.family == PotentialFamily::power) {
      if (cmag == 0.0)
        return std::pow(V.coefficient, q) * unit_ball_volume(n) * n / (n + V.a * q) * std::pow(r, n + V.a * q);
      if (V.a == 2.0 && q == 1.0)
        return V.coefficient * unit_ball_volume(n) * std::pow(r, n) * (cmag * cmag + n * r * r / (n + 2.0));
    }
    return radial_ball_integral([&](double rho) { return std::pow(V.radial_value(rho), q); }, n, cmag, r);
  }

  auto vq = [&](std::span<const double> y) { return std::pow(V.value(y), q); };
  if (V.family == PotentialFamily::periodic_bump) {
    if (closed && q == 1.0) return bump_ball_integral(V, c, r);
    if (n == 1 && q == 1.0) {
      // n = 1 has an elementary antiderivative
      const double k = 2.0 * std::numbers::pi * V.frequency;
      auto F = [&](double x) { return 0.5 * x - std::sin(k * x) / (2.0 * k); };
      return V.amplitude * (F(c[0] + r) - F(c[0] - r));
    }
    return product_ball_integral(vq, c, r, feature_length(V));
  }

  // sampled
  const SampledField& field = *V.samples;
  if (n == 1) {
    if (closed && q == 1.0) return line_antiderivative(field, c[0] + r) - line_antiderivative(field, c[0] - r);
    const double h = field.grid.cell();
    const double lo = c[0] - r, hi = c[0] + r;
    const double first = std::floor((lo + 0.5 * field.grid.box) / h);
    const double last = std::ceil((hi + 0.5 * field.grid.box) / h);
    if (last - first > 1e7) throw QuadratureError("ball too large for piecewise quadrature", kInf);
    const Rule& rule = gauss_legendre16();
    double total = 0.0;
    for (double k = first; k < last; k += 1.0) {
      const double a = std::max(lo, -0.5 * field.grid.box + k * h);
      const double b = std::min(hi, -0.5 * field.grid.box + (k + 1.0) * h);
      if (b > a) total += composite_integral([&](double y) { return vq(std::span<const double>(&y, 1)); }, a, b, 1, rule);
    }
    return total;
  }
  return product_ball_integral(vq, c, r, feature_length(V));
}

double ball_average(const Potential& V, std::span<const double> center, double r, double q, Integration how) {
  const double integral = ball_integral(V, center, r, q, how);
  const double mean = std::max(0.0, integral) / (unit_ball_volume(V.n) * std::pow(r, V.n));
  return std::pow(mean, 1.0 / q);
}

SamplePlan SamplePlan::defaults(int n, int center_count, int radius_count, std::uint64_t seed) {
  if (n < 1 || center_count < 1 || radius_count < 1) throw std::invalid_argument("SamplePlan: counts must be positive");
  SamplePlan plan;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  plan.centers.resize(center_count);
  for (auto& c : plan.centers) {
    c.resize(n);
    for (auto& v : c) v = unit(rng);
  }
  for (int i = 0; i < radius_count; ++i) {
    const double s = radius_count == 1 ? 0.0 : static_cast<double>(i) / (radius_count - 1);
    plan.radii.push_back(std::pow(10.0, -2.0 + 3.0 * s));
  }
  return plan;
}

RhEstimate rh_constant_estimate(const Potential& V, double q, const SamplePlan& plan) {
  if (!(q >= 1.0)) throw std::invalid_argument("rh_constant_estimate: q must be >= 1");
  if (plan.centers.empty() || plan.radii.empty()) throw std::invalid_argument("rh_constant_estimate: empty plan");
  RhEstimate est;
  est.constant = 1.0;
  bool any = false;
  for (const auto& c : plan.centers) {
    for (double r : plan.radii) {
      const double mean = ball_average(V, c, r, 1.0);
      if (!(mean > 0.0)) continue;
      const double ratio = ball_average(V, c, r, q) / mean;
      if (!any || ratio > est.constant) {
        est.constant = ratio;
        est.worst_center = c;
        est.worst_radius = r;
        any = true;
      }
    }
  }
  est.flagged = est.constant > 1e6;
  return est;
}

const char* to_string(RadiusFlag flag) {
  switch (flag) {
    case RadiusFlag::ok: return "ok";
    case RadiusFlag::infinite: return "infinite";
    case RadiusFlag::zero: return "zero";
  }
  return "unknown";
}

namespace {

std::optional<double> closed_form_gamma(const Potential& V, double xmag) {
  const int n = V.n;
  const double omega = unit_ball_volume(n);
  if (V.family == PotentialFamily::constant) {
    if (V.c == 0.0) return kInf;
    return 1.0 / std::sqrt(V.c * omega);
  }
  if (V.family == PotentialFamily::power) {
    if (V.coefficient == 0.0) return kInf;
    if (xmag == 0.0) return std::pow(V.coefficient * omega * n / (n + V.a), -1.0 / (V.a + 2.0));
    if (V.a == 2.0) {
      // coeff omega u (|x|^2 + n u / (n + 2)) = 1 with u = r^2
      const double k = n / (n + 2.0), x2 = xmag * xmag, rhs = 1.0 / (V.coefficient * omega);
      const double u = 2.0 * rhs / (x2 + std::sqrt(x2 * x2 + 4.0 * k * rhs));
      return std::sqrt(u);
    }
  }
  return std::nullopt;
}

// Radius beyond which the level function is known to increase.
double monotone_from(const Potential& V) {
  if (V.n <= 2) return 0.0;
  // nonnegative subharmonic V: sphere averages dominate ball averages, so
  // d/dr (r^{2-n} int_B V) >= 2 r^{1-n} int_B V and the level increases everywhere
  if (V.family == PotentialFamily::constant || (V.family == PotentialFamily::power && V.a >= 0.0)) return 0.0;
  if (V.family == PotentialFamily::periodic_bump) return 32.0 / V.frequency;
  if (V.family == PotentialFamily::sampled) return 32.0 * V.samples->grid.box;
  return kInf;
}

// Bisection of level(r) = 1 inside a bracket with level(lo) <= 1 < level(hi).
template <typename L>
CriticalRadius bisect_level(L&& level, double lo, double hi, double tol) {
  CriticalRadius out;
  while (hi - lo > tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (level(mid) <= 1.0)
      lo = mid;
    else
      hi = mid;
    ++out.iterations;
    if (out.iterations > 200) break;
  }
  out.gamma = 0.5 * (lo + hi);
  out.flag = RadiusFlag::ok;
  return out;
}

}  // namespace

CriticalRadius critical_radius(const Potential& V, std::span<const double> x, double tol,
                               const CriticalRadiusOptions& options) {
  if (!(tol > 0.0)) throw std::invalid_argument("critical_radius: tol must be > 0");
  if (!(options.r_min > 0.0) || !(options.r_max > options.r_min) || options.per_decade < 1)
    throw std::invalid_argument("critical_radius: invalid scan window");
  const int n = V.n;
  const auto c = padded(x, n);
  CriticalRadius out;
  if (options.integration == Integration::automatic) {
    if (const auto gamma = closed_form_gamma(V, euclidean(c))) {
      out.gamma = *gamma;
      out.flag = std::isinf(*gamma) ? RadiusFlag::infinite : RadiusFlag::ok;
      return out;
    }
  }
  if (V.is_zero()) {
    out.gamma = kInf;
    out.flag = RadiusFlag::infinite;
    return out;
  }

  auto level = [&](double r) { return std::pow(r, 2.0 - n) * ball_integral(V, c, r, 1.0, options.integration); };
  const double decades = std::log10(options.r_max / options.r_min);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * options.per_decade)));
  const double stop_after = monotone_from(V);

  auto scan_radius = [&](int i) { return options.r_min * std::pow(10.0, decades * i / steps); };
  double lo = 0.0, hi = 0.0;
  if (stop_after == 0.0) {
    // monotone level: binary search over the scan points finds the same cell as a full scan
    if (level(scan_radius(0)) > 1.0) {
      out.gamma = 0.0;
      out.flag = RadiusFlag::zero;
      return out;
    }
    if (level(scan_radius(steps)) <= 1.0) {
      out.gamma = kInf;
      out.flag = RadiusFlag::infinite;
      return out;
    }
    int below = 0, above = steps;
    while (above - below > 1) {
      const int mid = (below + above) / 2;
      (level(scan_radius(mid)) <= 1.0 ? below : above) = mid;
    }
    lo = scan_radius(below);
    hi = scan_radius(above);
    return bisect_level(level, lo, hi, tol);
  }

  double prev_r = options.r_min;
  double prev_level = level(prev_r);
  bool found = false;
  bool any_below = prev_level <= 1.0;
  for (int i = 1; i <= steps; ++i) {
    const double r = scan_radius(i);
    const double lv = level(r);
    if (prev_level <= 1.0 && lv > 1.0) {
      lo = prev_r;
      hi = r;
      found = true;
    }
    any_below = any_below || lv <= 1.0;
    prev_r = r;
    prev_level = lv;
    if (lv > 1.0 && r >= stop_after && (found || !any_below)) break;
  }
  if (prev_level <= 1.0) {
    out.gamma = kInf;
    out.flag = RadiusFlag::infinite;
    return out;
  }
  if (!found) {
    out.gamma = 0.0;
    out.flag = RadiusFlag::zero;
    return out;
  }
  return bisect_level(level, lo, hi, tol);
}

Eigen::VectorXd critical_radius_field(const Potential& V, const GridSpec& grid, double tol) {
  grid.validate();
  if (grid.d > V.n) throw std::invalid_argument("critical_radius_field: grid dimension exceeds potential dimension");
  Eigen::VectorXd gamma(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    std::vector<double> x(grid.d);
    for (int axis = 0; axis < grid.d; ++axis) x[axis] = grid.coordinate(idx[axis]);
    gamma(i) = critical_radius(V, x, tol).gamma;
  }
  return gamma;
}

ComparabilityReport check_gamma_comparability(
    const Potential& V, const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs,
    const std::vector<double>& k0_grid, double tol) {
  if (pairs.empty() || k0_grid.empty()) throw std::invalid_argument("check_gamma_comparability: empty input");
  ComparabilityReport report;
  std::vector<double> gx, gy, dist;
  for (const auto& [x, y] : pairs) {
    const double a = critical_radius(V, x, tol).gamma, b = critical_radius(V, y, tol).gamma;
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return report;  // infeasible
    const auto px = padded(x, V.n), py = padded(y, V.n);
    double d2 = 0.0;
    for (int i = 0; i < V.n; ++i) d2 += (px[i] - py[i]) * (px[i] - py[i]);
    gx.push_back(a);
    gy.push_back(b);
    dist.push_back(std::sqrt(d2));
  }
  bool have = false;
  for (double k0 : k0_grid) {
    if (!(k0 > 0.0)) throw std::invalid_argument("check_gamma_comparability: k0 must be > 0");
    double C = 1.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double base = 1.0 + dist[i] / gx[i];
      const double lower = gx[i] * std::pow(base, -k0) / gy[i];         // need C >= this
      const double upper = gy[i] / (gx[i] * std::pow(base, k0 / (k0 + 1.0)));  // and this
      const double need = std::max(lower, upper);
      if (need > C) {
        C = need;
        worst = i;
      }
    }
    if (!std::isfinite(C)) continue;
    if (!have || C < report.C * (1.0 - 1e-12)) {
      report.C = C;
      report.k0 = k0;
      report.worst_pair = worst;
      have = true;
    }
  }
  report.feasible = have;
  return report;
}

double lemma_v_integral(const Potential& V, std::span<const double> x, double t, double A4) {
  if (!(t > 0.0) || !(A4 > 0.0)) throw std::invalid_argument("lemma_v_integral: t and A4 must be positive");
  const int n = V.n;
  const auto c = padded(x, n);
  const double tau = std::pow(t, 0.25);
  const double s_end = std::pow(60.0 / A4, 0.75);

  std::function<double(double)> shell;
  if (V.radial()) {
    const double cmag = euclidean(c);
    shell = [&V, n, cmag](double rho) {
      return radial_shell([&V](double r) { const double v = V.radial_value(r); return v * v; }, n, cmag, rho);
    };
  } else {
    if (n > 3) throw std::invalid_argument("lemma_v_integral: non-radial potentials need n <= 3");
    const double feature = feature_length(V);
    shell = [&V, n, c, feature](double rho) {
      const Rule& rule = gauss_legendre16();
      auto v2 = [&](const double* y) { const double v = V.value(std::span<const double>(y, n)); return v * v; };
      if (n == 1) {
        const double a = c[0] + rho, b = c[0] - rho;
        return v2(&a) + v2(&b);
      }
      const double pi = std::numbers::pi;
      if (n == 2) {
        const int p = std::max(8, panels_for(2.0 * pi * rho, feature));
        return composite_integral(
            [&](double phi) {
              const double y[2] = {c[0] + rho * std::cos(phi), c[1] + rho * std::sin(phi)};
              return v2(y);
            },
            0.0, 2.0 * pi, p, rule);
      }
      const int pth = std::max(4, panels_for(pi * rho, feature));
      const int pphi = std::max(8, panels_for(2.0 * pi * rho, feature));
      return composite_integral(
          [&](double th) {
            const double st = std::sin(th), ct = std::cos(th);
            return st * composite_integral(
                            [&](double phi) {
                              const double y[3] = {c[0] + rho * st * std::cos(phi), c[1] + rho * st * std::sin(phi),
                                                   c[2] + rho * ct};
                              return v2(y);
                            },
                            0.0, 2.0 * pi, pphi, rule);
          },
          0.0, pi, pth, rule);
    };
  }
  DoublingOptions opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-10;
  opt.start_panels = 8;
  opt.max_panels = 4096;
  auto integrand = [&](double s) { return std::pow(s, n - 1) * std::exp(-A4 * std::pow(s, 4.0 / 3.0)) * shell(tau * s); };
  return integrate_doubling(integrand, 0.0, s_end, opt).value;
}

namespace {

double lemma_v_sup(const Potential& V, const std::vector<std::vector<double>>& x_list,
                   const std::vector<double>& gammas, const std::vector<double>& t_grid, double A4,
                   BoundSweepReport* report) {
  const double delta = V.delta();
  double best = 0.0;
  for (std::size_t i = 0; i < x_list.size(); ++i) {
    for (double t : t_grid) {
      KernelPoint p;
      p.n = V.n;
      p.x_mag = euclidean(padded(x_list[i], V.n));
      p.t = t;
      const double tau = std::pow(t, 0.25);
      p.eta = tau / gammas[i];
      p.value = lemma_v_integral(V, x_list[i], t, A4);
      p.bound = std::pow(t, -1.0) * std::pow(p.eta, 2.0 * delta);
      if (std::isinf(gammas[i])) {
        // V = 0 convention: both sides vanish
        p.ratio = 0.0;
      } else if (p.bound >= std::numeric_limits<double>::min()) {
        p.ratio = std::abs(p.value) / p.bound;
      } else {
        p.flag = PointFlag::underflow;
      }
      if (p.flag == PointFlag::ok) best = std::max(best, p.ratio);
      if (report) report->points.push_back(p);
    }
  }
  return best;
}

}  // namespace

BoundSweepReport check_lemma_v(const Potential& V, const std::vector<std::vector<double>>& x_list,
                               const std::vector<double>& t_grid, double A) {
  if (x_list.empty() || t_grid.empty()) throw std::invalid_argument("check_lemma_v: empty sweep");
  const double A4 = std::min(A > 0.0 ? A : kA1, kA1);
  std::vector<double> gammas;
  for (const auto& x : x_list) {
    const auto cr = critical_radius(V, x, 1e-10);
    if (cr.flag == RadiusFlag::zero) throw std::invalid_argument("check_lemma_v: gamma vanishes at a sweep point");
    gammas.push_back(cr.gamma);
  }
  std::vector<double> sorted = t_grid;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(sorted.front() > 0.0)) throw std::invalid_argument("check_lemma_v: times must be positive");
    if (sorted.back() > std::pow(gammas[i], 4.0)) throw std::invalid_argument("check_lemma_v: t exceeds gamma(x)^4");
  }
  BoundSweepReport report;
  report.bound_name = "V";
  report.empirical_C = lemma_v_sup(V, x_list, gammas, t_grid, A4, &report);
  std::vector<double> refined;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) refined.push_back(std::sqrt(sorted[i] * sorted[i + 1]));
  const double refined_sup =
      refined.empty() ? report.empirical_C : std::max(report.empirical_C, lemma_v_sup(V, x_list, gammas, refined, A4, nullptr));
  report.stabilized = std::isfinite(report.empirical_C) &&
                      (refined_sup == 0.0 || refined_sup <= 1.01 * report.empirical_C);
  return report;
}

}  // namespace bvc
