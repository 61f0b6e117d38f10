#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bvc/engine.hpp"
#include "bvc/field.hpp"
#include "bvc/norms.hpp"
#include "bvc/potential.hpp"
#include "bvc/variation.hpp"

namespace bvc {

using KeyValues = std::map<std::string, std::string>;

/// Flat key=value text: whitespace-separated tokens, several per line allowed,
/// '#' starts a comment. Later keys override earlier ones.
KeyValues parse_key_values(std::istream& in);
KeyValues load_key_values(const std::string& path);

/// Names accepted by run_experiment.
const std::vector<std::string>& registered_experiments();
bool is_registered(const std::string& experiment);

/// Default keys of an experiment; user keys are layered on top.
KeyValues experiment_defaults(const std::string& experiment);

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  GridSpec grid;
  Potential potential;
  TimeLadder ladder;
  double rho = 3.0;
  std::vector<double> p_list;
  MorreyParams morrey;
  PoissonParams poisson;
  int trials = 1;
  int workers = 1;
  std::string output_dir = "out";
  bool svg = false;
  /// Every key after defaults and overrides, for experiment-specific knobs.
  KeyValues keys;

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  const std::string& text(const std::string& key) const;
};

/// Merges defaults with `keys`, rejects unknown keys and validates every field.
ExperimentConfig make_config(const std::string& experiment, const KeyValues& keys);

}  // namespace bvc
