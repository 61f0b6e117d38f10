#include "bvc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

namespace bvc {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      // shared
      "seed", "d", "m", "box", "ladder", "rho", "p", "lambda", "alpha", "sigma", "nodes", "trials", "out",
      "workers", "svg",
      // potential
      "family", "a", "n", "q0", "c", "coeff", "amplitude", "frequency", "file",
      // experiment knobs
      "dims", "orders", "eta_count", "t", "q", "pairs", "A", "N", "radius_count", "points", "step", "panels",
      "substeps", "max_length", "band", "gamma_tol", "rho_list"};
  return keys;
}

double to_number(const std::string& key, const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size()) throw std::invalid_argument("config: " + key + " is not a number: " + text);
  return v;
}

std::string two_pi() {
  std::ostringstream out;
  out.precision(17);
  out << 2.0 * std::numbers::pi;
  return out.str();
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("config line " + std::to_string(number) + ": expected key=value, got " + token);
      out[token.substr(0, eq)] = token.substr(eq + 1);
    }
  }
  return out;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_key_values(in);
}

const std::vector<std::string>& registered_experiments() {
  static const std::vector<std::string> names = {
      "kernel-check",      "g-envelope",         "variation-selftest", "opnorm-biharmonic", "opnorm-schrodinger",
      "opnorm-poisson",    "morrey-biharmonic",  "morrey-schrodinger", "morrey-poisson",    "gamma-table",
      "rh-check",          "lemma25-check",      "lemma26-check",      "duhamel-check",     "maximal-domination"};
  return names;
}

bool is_registered(const std::string& experiment) {
  const auto& names = registered_experiments();
  return std::find(names.begin(), names.end(), experiment) != names.end();
}

KeyValues experiment_defaults(const std::string& experiment) {
  if (!is_registered(experiment)) throw std::invalid_argument("unknown experiment: " + experiment);
  KeyValues k = {{"seed", "1"},       {"d", "1"},         {"m", "256"},      {"box", two_pi()},
                 {"ladder", "geometric:1,0.85,64"},        {"rho", "3"},      {"p", "1.5,2,4"},
                 {"lambda", "0.5"},   {"alpha", "1"},     {"sigma", "0.5"},  {"nodes", "64"},
                 {"trials", "200"},   {"out", "out"},     {"workers", "1"},  {"svg", "0"},
                 {"family", "constant"}, {"c", "0"},      {"n", "1"},        {"radius_count", "24"},
                 {"substeps", "64"}};
  // sin^2(x) on the 2 pi torus
  const std::string bump_frequency = "0.31830988618379067";
  if (experiment == "kernel-check") {
    k["dims"] = "1,2,3,4,5,6";
  } else if (experiment == "g-envelope") {
    k["dims"] = "1,2,3,4,5,6";
    k["orders"] = "0,1,2";
    k["eta_count"] = "97";
  } else if (experiment == "variation-selftest") {
    k["trials"] = "1000";
    k["max_length"] = "12";
    k["rho_list"] = "2.5,3,4";
  } else if (experiment == "opnorm-schrodinger" || experiment == "morrey-schrodinger" ||
             experiment == "morrey-poisson") {
    k["family"] = "periodic_bump";
    k["amplitude"] = "10";
    k["frequency"] = bump_frequency;
  } else if (experiment == "gamma-table") {
    k["family"] = "power";
    k["a"] = "2";
    k["n"] = "5";
    k["q0"] = "3";
    k["points"] = "41";
    k["step"] = "0.1";
    k["gamma_tol"] = "1e-10";
  } else if (experiment == "rh-check") {
    k["family"] = "power";
    k["a"] = "2";
    k["n"] = "5";
    k["q0"] = "3";
    k["q"] = "3";
  } else if (experiment == "lemma25-check") {
    k["family"] = "power";
    k["a"] = "2";
    k["n"] = "5";
    k["q0"] = "3";
    k["pairs"] = "200";
    k["A"] = "0";
  } else if (experiment == "lemma26-check") {
    k["family"] = "periodic_bump";
    k["amplitude"] = "10";
    k["frequency"] = bump_frequency;
    k["m"] = "128";
    k["N"] = "2";
  } else if (experiment == "duhamel-check") {
    k["family"] = "periodic_bump";
    k["amplitude"] = "2";
    k["frequency"] = bump_frequency;
    k["m"] = "64";
    k["t"] = "5e-3";
    k["band"] = "4";
  } else if (experiment == "maximal-domination") {
    k["family"] = "periodic_bump";
    k["amplitude"] = "100";
    k["frequency"] = "1";
    k["box"] = "1";
    k["m"] = "256";
    k["trials"] = "50";
    k["ladder"] = "geometric:1e-2,0.85,64";
  }
  return k;
}

double ExperimentConfig::number(const std::string& key) const { return to_number(key, text(key)); }

int ExperimentConfig::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<int>(v);
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
  std::vector<double> out;
  std::stringstream in(text(key));
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_number(key, item));
  if (out.empty()) throw std::invalid_argument("config: " + key + " is empty");
  return out;
}

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = keys.find(key);
  if (it == keys.end()) throw std::invalid_argument("config: missing key " + key);
  return it->second;
}

ExperimentConfig make_config(const std::string& experiment, const KeyValues& user) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  cfg.keys = experiment_defaults(experiment);
  for (const auto& [key, value] : user) {
    if (!known_keys().count(key)) throw std::invalid_argument("config: unknown key " + key);
    cfg.keys[key] = value;
  }
  // grid experiments default the potential dimension to the grid dimension
  if (!user.count("n") && cfg.keys["n"] == "1") cfg.keys["n"] = cfg.keys["d"];

  const std::string& seed = cfg.text("seed");
  const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), cfg.seed);
  if (seed.empty() || ec != std::errc() || end != seed.data() + seed.size())
    throw std::invalid_argument("config: seed must be a 64-bit unsigned integer");
  cfg.grid = GridSpec{cfg.integer("d"), cfg.integer("m"), cfg.number("box")};
  cfg.grid.validate();
  cfg.ladder = TimeLadder::parse(cfg.text("ladder"));
  cfg.rho = cfg.number("rho");
  VariationParams{cfg.rho}.validate();
  cfg.p_list = cfg.numbers("p");
  cfg.morrey.lambda = cfg.number("lambda");
  cfg.morrey.alpha = cfg.number("alpha");
  cfg.morrey.n = cfg.grid.d;
  for (double p : cfg.p_list) {
    cfg.morrey.p = p;
    cfg.morrey.validate();
  }
  cfg.poisson.sigma = cfg.number("sigma");
  cfg.poisson.nodes = cfg.integer("nodes");
  cfg.poisson.validate();
  cfg.trials = cfg.integer("trials");
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  cfg.workers = cfg.integer("workers");
  if (cfg.workers < 1) throw std::invalid_argument("config: workers must be >= 1");
  cfg.output_dir = cfg.text("out");
  cfg.svg = cfg.integer("svg") != 0;

  KeyValues pot;
  for (const char* key : {"family", "a", "n", "q0", "c", "coeff", "amplitude", "frequency", "file"})
    if (cfg.keys.count(key)) pot[key] = cfg.keys.at(key);
  cfg.potential = Potential::from_keys(pot);
  return cfg;
}

}  // namespace bvc
