#include "bvc/variation.hpp"

#include <algorithm>
#include <sstream>

namespace bvc {

TimeLadder::TimeLadder(std::vector<double> t) : times(std::move(t)) { validate(); }

void TimeLadder::validate() const {
  if (times.size() < 2) throw std::invalid_argument("TimeLadder: at least two times required");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i])) throw std::invalid_argument("TimeLadder: times must be positive");
    if (i && !(times[i] < times[i - 1])) throw std::invalid_argument("TimeLadder: times must strictly decrease");
  }
}

TimeLadder TimeLadder::geometric(double t_max, double ratio, int count) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("TimeLadder: ratio must lie in (0, 1)");
  std::vector<double> t(static_cast<std::size_t>(std::max(count, 0)));
  for (int j = 0; j < count; ++j) t[j] = t_max * std::pow(ratio, j);
  return TimeLadder(std::move(t));
}

TimeLadder TimeLadder::parse(const std::string& spec) {
  auto numbers = [](const std::string& text) {
    std::vector<double> values;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument("TimeLadder: bad number '" + item + "'");
      values.push_back(v);
    }
    return values;
  };
  const std::string prefix = "geometric:";
  if (spec.rfind(prefix, 0) == 0) {
    const auto v = numbers(spec.substr(prefix.size()));
    if (v.size() != 3 || v[2] != std::round(v[2]))
      throw std::invalid_argument("TimeLadder: expected geometric:t_max,ratio,count");
    return geometric(v[0], v[1], static_cast<int>(v[2]));
  }
  return TimeLadder(numbers(spec));
}

TimeLadder TimeLadder::refined() const {
  std::vector<double> t;
  t.reserve(2 * times.size() - 1);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i) t.push_back(std::sqrt(times[i - 1] * times[i]));
    t.push_back(times[i]);
  }
  return TimeLadder(std::move(t));
}

double rho_variation_seminorm(std::span<const double> samples, const VariationParams& params) {
  return rho_variation_seminorm(Eigen::Map<const Eigen::VectorXd>(samples.data(), samples.size()), params);
}

double rho_variation_seminorm(std::span<const double> samples, const TimeLadder& ladder,
                              const VariationParams& params) {
  if (samples.size() != ladder.size()) throw std::invalid_argument("rho_variation_seminorm: length mismatch");
  return rho_variation_seminorm(samples, params);
}

VariationPath rho_variation_path(std::span<const double> samples, const VariationParams& params) {
  params.validate();
  const std::size_t m = samples.size();
  std::vector<double> best(m, 0.0);
  std::vector<int> previous(m, -1), length(m, 1);
  for (std::size_t j = 1; j < m; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double candidate = best[i] + abs_pow(samples[i] - samples[j], params.rho);
      if (candidate > best[j] || (candidate == best[j] && previous[j] >= 0 && length[i] + 1 < length[j])) {
        best[j] = candidate;
        previous[j] = static_cast<int>(i);
        length[j] = length[i] + 1;
      }
    }
  }
  VariationPath path;
  int end = -1;
  for (std::size_t j = 0; j < m; ++j)
    if (end < 0 || best[j] > best[end] || (best[j] == best[end] && length[j] < length[end])) end = static_cast<int>(j);
  if (end >= 0 && best[end] > 0.0) {
    for (int k = end; k >= 0; k = previous[k]) path.indices.push_back(k);
    std::reverse(path.indices.begin(), path.indices.end());
    path.value = std::pow(best[end], 1.0 / params.rho);
  }
  return path;
}

double brute_force_seminorm(std::span<const double> samples, const VariationParams& params) {
  params.validate();
  const std::size_t m = samples.size();
  if (m > 16) throw std::invalid_argument("brute_force_seminorm: at most 16 samples");
  double top = 0.0;
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    double sum = 0.0;
    int last = -1;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask & (1u << i))) continue;
      if (last >= 0) sum += abs_pow(samples[last] - samples[i], params.rho);
      last = static_cast<int>(i);
    }
    top = std::max(top, sum);
  }
  return std::pow(top, 1.0 / params.rho);
}

Eigen::VectorXd variation_of_paths(const Eigen::MatrixXd& paths, const VariationParams& params) {
  params.validate();
  Eigen::VectorXd out(paths.cols());
  for (Eigen::Index p = 0; p < paths.cols(); ++p) out(p) = rho_variation_seminorm(paths.col(p), params);
  return out;
}

Eigen::VectorXd square_function_of_paths(const Eigen::MatrixXd& paths) {
  if (paths.rows() < 2) return Eigen::VectorXd::Zero(paths.cols());
  const Eigen::MatrixXd increments = paths.topRows(paths.rows() - 1) - paths.bottomRows(paths.rows() - 1);
  return increments.colwise().norm().transpose();
}

namespace {

Eigen::MatrixXd sample_paths(const Evolution& evolve, const TimeLadder& ladder, GridSpec& grid) {
  ladder.validate();
  Eigen::MatrixXd paths;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const SampledField u = evolve(ladder.times[i]);
    if (i == 0) {
      grid = u.grid;
      paths.resize(static_cast<Eigen::Index>(ladder.size()), u.values.size());
    } else if (!(u.grid == grid)) {
      throw std::invalid_argument("variation_field: evolution changed grids");
    }
    paths.row(static_cast<Eigen::Index>(i)) = u.values.transpose();
  }
  return paths;
}

}  // namespace

SampledField variation_field(const Evolution& evolve, const TimeLadder& ladder, const VariationParams& params) {
  params.validate();
  GridSpec grid;
  const Eigen::MatrixXd paths = sample_paths(evolve, ladder, grid);
  return SampledField(grid, variation_of_paths(paths, params));
}

SampledField square_function_field(const Evolution& evolve, const TimeLadder& ladder) {
  GridSpec grid;
  const Eigen::MatrixXd paths = sample_paths(evolve, ladder, grid);
  return SampledField(grid, square_function_of_paths(paths));
}

}  // namespace bvc
