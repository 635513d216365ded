#pragma once

// Library-side setups shared by the tests and the acceptance binary.

#include <algorithm>
#include <memory>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "pulselab/macro_solver.hpp"
#include "pulselab/pulse_algebra.hpp"
#include "pulselab/resonance.hpp"

namespace fixture {

using namespace pulselab;

inline LatticeModel chain_model(int cells, const ChainCoefficients& c) {
  return LatticeModel(LatticeSpec::chain(cells), nearest_neighbour_potential(1, c));
}

inline std::vector<Pulse> pulses_at(const LatticeModel& m, const std::vector<double>& thetas) {
  std::vector<Pulse> out;
  for (double t : thetas) {
    const WaveVector th{t, 0.0, 0.0};
    out.push_back({th, m.dispersion(th)});
  }
  return out;
}

// Model, pulse system, plan and solver kept alive together.
struct Stack {
  LatticeModel model;
  PulseSystem system;
  HierarchyPlan plan;
  MacroSolver solver;

  Stack(LatticeModel m, const std::vector<double>& thetas, int order, const MacroGrid& grid)
      : model(std::move(m)),
        system(model, pulses_at(model, thetas), std::max(order, 3)),
        plan(system, order),
        solver(plan, grid) {}
};

inline std::unique_ptr<Stack> three_wave_stack(const oracle::ThreeWaveChain& tw, int order, const MacroGrid& grid,
                                               int cells = 100) {
  return std::make_unique<Stack>(chain_model(cells, tw.chain.k),
                                 std::vector<double>{tw.theta[0], tw.theta[1], tw.theta[2]}, order, grid);
}

inline Field to_field(const std::vector<oracle::Complex>& v) { return Field(v.begin(), v.end()); }

inline Field gaussian(const MacroGrid& g, double center, double width, double amp = 1.0) {
  Profile p;
  p.center = {center, 0.0, 0.0};
  p.width = width;
  p.amplitude = amp;
  return sample_profile(g, p);
}

struct RandomBond {
  Offset alpha;
  double a2;
};

// Random range-one potential in d dimensions; returns the model and the
// independent list of (alpha, a_{2,alpha}) with alpha taken from one half-space.
inline std::pair<LatticeModel, std::vector<RandomBond>> random_model(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 1.0);
  PotentialSpec p;
  std::vector<RandomBond> list;
  std::vector<Offset> offsets;
  Offset o{0, 0, 0};
  for (o[0] = -1; o[0] <= 1; ++o[0])
    for (o[1] = (d > 1 ? -1 : 0); o[1] <= (d > 1 ? 1 : 0); ++o[1])
      for (o[2] = (d > 2 ? -1 : 0); o[2] <= (d > 2 ? 1 : 0); ++o[2]) {
        if (is_zero(o)) continue;
        const Offset n = negate(o);
        if (std::find(offsets.begin(), offsets.end(), n) != offsets.end()) continue;
        offsets.push_back(o);
      }
  for (const auto& a : offsets) {
    const double a2 = u(rng);
    p.set_bond(1, a, pos(rng)).set_bond(2, a, a2).set_bond(3, a, u(rng));
    list.push_back({a, a2});
  }
  p.set_onsite(1, 1.0 + pos(rng)).set_onsite(2, u(rng)).set_onsite(3, u(rng));
  return {LatticeModel(LatticeSpec::square(d, 4), p), list};
}

// Quadratic coupling written as a product of sines.
inline oracle::Complex sine_form(const std::vector<RandomBond>& bonds, double b2, const WaveVector& tp,
                                 const WaveVector& tq) {
  double s = 0.0;
  for (const auto& b : bonds) {
    const double x = dot(tp, b.alpha), y = dot(tq, b.alpha);
    // alpha and -alpha contribute equally
    s += 2.0 * b.a2 * std::sin(x / 2) * std::sin(y / 2) * std::sin((x + y) / 2);
  }
  return oracle::Complex(0.0, -4.0 * s) - b2;
}

inline WaveVector random_theta(int d, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-oracle::kPi, oracle::kPi);
  WaveVector t{0, 0, 0};
  for (int i = 0; i < d; ++i) t[i] = u(rng);
  return t;
}

// Removes +j/-j pairs; the result is what a product reduces to without
// using any resonance relation.
inline std::vector<int> cancel_pairs(std::vector<int> v) {
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && !changed; ++i)
      for (std::size_t j = i + 1; j < v.size() && !changed; ++j)
        if (v[i] == -v[j]) {
          v.erase(v.begin() + j);
          v.erase(v.begin() + i);
          changed = true;
        }
  }
  return v;
}

// Direct check in terms of the dispersion relation, independent of the
// level-set formulation.
inline double resonance_gap(const resonance::Problem& p, double t1, double t2) {
  const oracle::Chain ch{ChainCoefficients{p.a1, 0, 0, p.b1, 0, 0}};
  return ch.omega(t1 + t2) - ch.omega(t1) - ch.omega(t2);
}

}  // namespace fixture
