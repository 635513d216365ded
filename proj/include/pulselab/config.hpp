#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pulselab/errors.hpp"
#include "pulselab/lattice_model.hpp"
#include "pulselab/macro_solver.hpp"
#include "pulselab/pulse_algebra.hpp"
#include "pulselab/resonance.hpp"

namespace pulselab {

// A pulse given by grid indices k (theta = 2 pi k / grid per axis) and the
// sign of its frequency.
struct PulseSpec {
  std::array<int, kMaxDim> k{0, 0, 0};
  int sign = 1;
};

struct ExperimentConfig {
  // model
  LatticeSpec lattice;             // cells overridden per run
  PotentialSpec potential;
  std::optional<int> model_cells;  // used by single-run subcommands
  std::string builtin_name;        // empty for explicit coefficient tables
  ChainCoefficients builtin_coefficients;

  // pulses
  int pulse_grid = 100;
  std::vector<PulseSpec> pulses;
  std::vector<Profile> profiles;
  bool retuned = false;  // harmonic bond coefficient adjusted for exact grid resonance

  // experiment
  int order = 2;
  std::vector<double> epsilons{0.1, 0.07, 0.05, 0.035, 0.025};
  double macro_period = 70.0;
  int macro_points = 100;
  double tau0 = 1.0;
  double beta = 1.5;
  double macro_dt = 0.01;
  double micro_dt_factor = 0.01;  // micro dt = factor / mu_plus
  int checkpoints = 50;
  double energy_drift_bound = 1e-5;
  double residual_window = 0.3;   // accepted |slope - expected|
  double error_slope_slack = 0.1;  // accepted shortfall of the error slope below beta
  double prediction_factor = 3.0;
  bool dt_check = true;

  int cells_for(double eps) const {
    const double m = macro_period / eps;
    const int cells = static_cast<int>(std::lround(m));
    if (std::abs(m - cells) > 1e-9 * m) throw ConfigError("macro_period / epsilon must be an integer");
    return cells;
  }

  LatticeModel model(int cells) const {
    LatticeSpec s = lattice;
    s.cells = cells;
    return LatticeModel(s, potential);
  }

  MacroGrid grid() const { return MacroGrid{lattice.dimension, macro_points, macro_period}; }

  WaveVector theta(const PulseSpec& p) const {
    WaveVector t{0.0, 0.0, 0.0};
    for (int i = 0; i < lattice.dimension; ++i) t[i] = 2.0 * std::numbers::pi * p.k[i] / pulse_grid;
    return t;
  }

  std::vector<Pulse> make_pulses(const LatticeModel& m) const {
    std::vector<Pulse> out;
    for (const auto& p : pulses) {
      const WaveVector th = theta(p);
      out.push_back({th, p.sign * m.dispersion(th)});
    }
    return out;
  }

  std::vector<Field> initial_amplitudes() const {
    const MacroGrid g = grid();
    std::vector<Field> out;
    for (const auto& p : profiles) out.push_back(sample_profile(g, p));
    return out;
  }

  void validate() const {
    lattice.validate();
    if (order < 1 || order > 3) throw ConfigError("order must be 1, 2 or 3");
    if (epsilons.size() < 3) throw ConfigError("an epsilon sweep needs at least 3 values");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!(epsilons[i] > 0.0 && epsilons[i] < 1.0)) throw ConfigError("epsilon values must lie in (0, 1)");
      if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("epsilon list must be strictly descending");
    }
    const double d = lattice.dimension;
    if (order >= 2 && !(beta > 1.0 && beta <= order - d / 2.0 + 1e-12))
      throw ConfigError("beta must lie in (1, N - d/2]");
    if (!(macro_period > 0.0)) throw ConfigError("macro_period must be positive");
    if (macro_points < 4) throw ConfigError("macro_points must be at least 4");
    if (!(tau0 > 0.0)) throw ConfigError("tau0 must be positive");
    if (!(macro_dt > 0.0)) throw ConfigError("macro_dt must be positive");
    if (!(micro_dt_factor > 0.0)) throw ConfigError("micro dt factor must be positive");
    if (checkpoints < 50) throw ConfigError("at least 50 checkpoints are required");
    if (pulses.empty()) throw ConfigError("no pulses configured");
    if (profiles.size() != pulses.size()) throw ConfigError("one profile per pulse is required");
    for (double eps : epsilons) {
      const int m = cells_for(eps);
      if (m % macro_points != 0) throw ConfigError("macro_points must divide every lattice size");
      if (m % pulse_grid != 0) throw ConfigError("pulse grid must divide every lattice size");
    }
  }
};

namespace detail {

template <class T>
T get_or(const YAML::Node& n, const char* key, T fallback) {
  if (!n || !n[key]) return fallback;
  try {
    return n[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

inline RealVec read_vec(const YAML::Node& n, int dim, const char* what) {
  if (!n.IsSequence() || static_cast<int>(n.size()) != dim)
    throw ConfigError(std::string(what) + " must be a list of " + std::to_string(dim) + " numbers");
  RealVec v{0.0, 0.0, 0.0};
  for (int i = 0; i < dim; ++i) v[i] = n[i].as<double>();
  return v;
}

inline std::array<int, kMaxDim> read_index(const YAML::Node& n, int dim, const char* what) {
  std::array<int, kMaxDim> k{0, 0, 0};
  if (n.IsScalar() && dim == 1) {
    k[0] = n.as<int>();
    return k;
  }
  if (!n.IsSequence() || static_cast<int>(n.size()) != dim)
    throw ConfigError(std::string(what) + " must be a list of " + std::to_string(dim) + " integers");
  for (int i = 0; i < dim; ++i) k[i] = n[i].as<int>();
  return k;
}

inline void read_model(const YAML::Node& m, ExperimentConfig& c) {
  if (!m) throw ConfigError("missing 'model' section");
  c.lattice.dimension = get_or(m, "dimension", 1);
  const int d = c.lattice.dimension;
  if (d < 1 || d > kMaxDim) throw ConfigError("lattice dimension must be 1, 2 or 3");
  c.lattice = LatticeSpec::square(d, 2);
  if (m["basis"]) {
    if (!m["basis"].IsSequence() || static_cast<int>(m["basis"].size()) != d)
      throw ConfigError("basis must list d vectors");
    for (int i = 0; i < d; ++i) c.lattice.basis[i] = read_vec(m["basis"][i], d, "basis vector");
  }
  if (m["cells"]) c.model_cells = m["cells"].as<int>();

  if (m["builtin"]) {
    const YAML::Node b = m["builtin"];
    c.builtin_name = get_or<std::string>(b, "name", "nn-chain");
    ChainCoefficients& cc = c.builtin_coefficients;
    cc.a1 = get_or(b, "a1", cc.a1);
    cc.a2 = get_or(b, "a2", cc.a2);
    cc.a3 = get_or(b, "a3", cc.a3);
    cc.b1 = get_or(b, "b1", cc.b1);
    cc.b2 = get_or(b, "b2", cc.b2);
    cc.b3 = get_or(b, "b3", cc.b3);
    c.potential = builtin_potential(c.builtin_name, d, cc);
    if (m["coefficients"]) throw ConfigError("use either 'builtin' or 'coefficients', not both");
    return;
  }
  if (!m["coefficients"]) throw ConfigError("model needs 'builtin' or 'coefficients'");
  PotentialSpec p;
  p.range = get_or(m, "range", 1);
  if (p.range < 1) throw ConfigError("interaction range must be >= 1");
  for (const auto& e : m["coefficients"]) {
    const int n = get_or(e, "n", 0);
    const auto alpha = read_index(e["alpha"], d, "alpha");
    if (!e["value"]) throw ConfigError("coefficient entry needs a 'value'");
    p.set_bond(n, alpha, e["value"].as<double>());
  }
  if (m["onsite"]) {
    if (!m["onsite"].IsSequence()) throw ConfigError("onsite must be a list [b1, b2, ...]");
    for (std::size_t i = 0; i < m["onsite"].size(); ++i)
      p.set_onsite(static_cast<int>(i) + 1, m["onsite"][i].as<double>());
  }
  c.potential = std::move(p);
}

inline Profile read_profile(const YAML::Node& n, int dim) {
  Profile p;
  p.shape = get_or<std::string>(n, "shape", p.shape);
  p.amplitude = get_or(n, "amplitude", p.amplitude);
  p.phase = get_or(n, "phase", p.phase);
  p.width = get_or(n, "width", p.width);
  if (n["center"]) {
    if (n["center"].IsScalar() && dim == 1)
      p.center = {n["center"].as<double>(), 0.0, 0.0};
    else
      p.center = read_vec(n["center"], dim, "profile center");
  }
  return p;
}

inline void read_pulses(const YAML::Node& n, ExperimentConfig& c) {
  if (!n) throw ConfigError("missing 'pulses' section");
  const int d = c.lattice.dimension;
  c.pulse_grid = get_or(n, "grid", c.pulse_grid);
  if (c.pulse_grid < 2) throw ConfigError("pulse grid must be >= 2");
  const std::string source = get_or<std::string>(n, "source", "explicit");
  if (source == "resonance") {
    if (d != 1 || c.builtin_name != "nn-chain")
      throw ConfigError("resonance pulses need a one-dimensional nn-chain builtin");
    const int k1 = get_or(n, "k1", 0), k2 = get_or(n, "k2", 0);
    const double b1 = get_or(n, "b1", c.builtin_coefficients.b1);
    const double unit = 2.0 * std::numbers::pi / c.pulse_grid;
    const auto prob = resonance::retune(b1, unit * k1, unit * k2);
    if (!prob) throw EmptyBranch("no resonant chain exists for the requested grid indices");
    c.builtin_coefficients.a1 = prob->a1;
    c.builtin_coefficients.b1 = prob->b1;
    c.potential = builtin_potential(c.builtin_name, d, c.builtin_coefficients);
    c.retuned = true;
    c.pulses = {{{k1, 0, 0}, 1}, {{k2, 0, 0}, 1}, {{k1 + k2, 0, 0}, 1}};
  } else if (source == "explicit") {
    if (!n["list"] || !n["list"].IsSequence()) throw ConfigError("explicit pulses need a 'list'");
    for (const auto& e : n["list"]) {
      PulseSpec p;
      if (e.IsMap()) {
        p.k = read_index(e["k"], d, "pulse index");
        p.sign = get_or(e, "sign", 1);
      } else {
        p.k = read_index(e, d, "pulse index");
      }
      if (p.sign != 1 && p.sign != -1) throw ConfigError("pulse sign must be +1 or -1");
      c.pulses.push_back(p);
    }
  } else {
    throw ConfigError("pulse source must be 'explicit' or 'resonance'");
  }
  if (n["profiles"]) {
    for (const auto& e : n["profiles"]) c.profiles.push_back(read_profile(e, d));
  }
}

inline void read_experiment(const YAML::Node& e, ExperimentConfig& c) {
  if (!e) return;
  c.order = get_or(e, "order", c.order);
  if (e["epsilons"]) c.epsilons = e["epsilons"].as<std::vector<double>>();
  c.macro_period = get_or(e, "macro_period", c.macro_period);
  c.macro_points = get_or(e, "macro_points", c.macro_points);
  c.tau0 = get_or(e, "tau0", c.tau0);
  c.beta = get_or(e, "beta", c.beta);
  c.macro_dt = get_or(e, "macro_dt", c.macro_dt);
  c.micro_dt_factor = get_or(e, "micro_dt_factor", c.micro_dt_factor);
  c.checkpoints = get_or(e, "checkpoints", c.checkpoints);
  c.energy_drift_bound = get_or(e, "energy_drift_bound", c.energy_drift_bound);
  c.residual_window = get_or(e, "residual_window", c.residual_window);
  c.error_slope_slack = get_or(e, "error_slope_slack", c.error_slope_slack);
  c.prediction_factor = get_or(e, "prediction_factor", c.prediction_factor);
  c.dt_check = get_or(e, "dt_check", c.dt_check);
}

}  // namespace detail

inline ExperimentConfig parse_config(const YAML::Node& root) {
  if (!root || !root.IsMap()) throw ConfigError("configuration must be a mapping");
  ExperimentConfig c;
  try {
    detail::read_model(root["model"], c);
    detail::read_pulses(root["pulses"], c);
    detail::read_experiment(root["experiment"], c);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  if (c.profiles.empty()) c.profiles.assign(c.pulses.size(), Profile{});
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  try {
    return parse_config(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("cannot parse configuration: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return parse_config(YAML::LoadFile(path.string()));
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace pulselab
