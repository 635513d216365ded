#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pulselab/micro.hpp"

using namespace pulselab;

namespace {

const ChainCoefficients kCoef{1.0, 0.7, 0.3, 1.0, 0.4, 0.2};

MicroState random_state(const LatticeModel& m, double amp, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, amp);
  MicroState s = MicroState::zero(m);
  for (auto& x : s.x) x = nd(rng);
  for (auto& v : s.v) v = nd(rng);
  return s;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) { return linf_norm(difference(a, b)); }

}  // namespace

TEST(Verlet, EnergyHasNoSecularDrift) {
  for (const char* name : {"fpu", "kg"}) {
    const LatticeModel m(LatticeSpec::chain(128), builtin_potential(name, 1, kCoef));
    MicroState s = random_state(m, 0.1, 41);
    VerletIntegrator integ(m);
    const double dt = 0.02 / m.mu_plus();
    const long steps = static_cast<long>(std::ceil(1000.0 / dt));
    std::vector<double> energy;
    for (long k = 0; k <= steps; ++k) {
      if (k % 10 == 0) energy.push_back(m.energy(s.x, s.v));
      if (k < steps) integ.step(s, dt);
    }
    const auto d = measure_energy_drift(energy);
    EXPECT_LE(d.drift, 1e-7) << name;
    EXPECT_LT(d.max_fluctuation, 1e-3) << name;
  }
}

TEST(Verlet, IsTimeReversible) {
  const LatticeModel m(LatticeSpec::chain(64), builtin_potential("nn-chain", 1, kCoef));
  const MicroState start = random_state(m, 0.1, 42);
  MicroState s = start;
  VerletIntegrator integ(m);
  const double dt = 0.05 / m.mu_plus();
  integ.advance(s, dt, 500);
  for (auto& v : s.v) v = -v;
  integ.advance(s, dt, 500);
  for (auto& v : s.v) v = -v;
  EXPECT_LT(max_diff(s.x, start.x), 1e-12);
  EXPECT_LT(max_diff(s.v, start.v), 1e-12);
}

TEST(Verlet, IsSecondOrder) {
  const auto m = fixture::chain_model(32, kCoef);
  const MicroState start = random_state(m, 0.2, 43);
  auto run = [&](int steps) {
    MicroState s = start;
    VerletIntegrator integ(m);
    integ.advance(s, 1.0 / steps, steps);
    return s.x;
  };
  const auto ref = run(6400);
  const double e1 = max_diff(run(100), ref), e2 = max_diff(run(200), ref);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
}

TEST(Verlet, MomentumIsConservedWithoutOnsitePotential) {
  const ChainCoefficients bonds_only{1.0, 0.7, 0.3, 0.0, 0.0, 0.0};
  const LatticeModel m(LatticeSpec::chain(64), nearest_neighbour_potential(1, bonds_only), StabilityCheck::kMarginal);
  MicroState s = random_state(m, 0.2, 44);
  auto momentum = [](const MicroState& st) {
    double p = 0.0;
    for (double v : st.v) p += v;
    return p;
  };
  const double p0 = momentum(s);
  VerletIntegrator integ(m);
  integ.advance(s, 0.05 / m.mu_plus(), 2000);
  EXPECT_NEAR(momentum(s), p0, 1e-11);
}

TEST(Verlet, SmallAmplitudesFollowLinearTheory) {
  const auto m = fixture::chain_model(64, kCoef);
  const double th = 2 * oracle::kPi * 5 / 64, w = oracle::Chain{kCoef}.omega(th);
  auto error = [&](double amp) {
    MicroState s = MicroState::zero(m);
    for (int g = 0; g < 64; ++g) {
      s.x[g] = amp * std::cos(th * g);
      s.v[g] = amp * w * std::sin(th * g);
    }
    VerletIntegrator integ(m);
    const int steps = 2000;
    const double dt = 0.005;
    integ.advance(s, dt, steps);
    // Reference: the linearised chain run with the same scheme and step.
    const auto lin = fixture::chain_model(64, ChainCoefficients{kCoef.a1, 0, 0, kCoef.b1, 0, 0});
    MicroState l = MicroState::zero(lin);
    for (int g = 0; g < 64; ++g) {
      l.x[g] = amp * std::cos(th * g);
      l.v[g] = amp * w * std::sin(th * g);
    }
    VerletIntegrator li(lin);
    li.advance(l, dt, steps);
    return max_diff(s.x, l.x);
  };
  EXPECT_NEAR(std::log2(error(1e-3) / error(5e-4)), 2.0, 0.1);
}

TEST(Verlet, OversizedStepIsRejected) {
  const auto m = fixture::chain_model(32, kCoef);
  MicroState s = MicroState::zero(m);
  VerletIntegrator integ(m);
  EXPECT_THROW(integ.step(s, 2.0 * integ.dt_max()), MicroInstability);
  EXPECT_NO_THROW(integ.step(s, integ.dt_max()));
}

TEST(Norms, EnergyNormIsBracketedByDispersionRange) {
  const LatticeModel m(LatticeSpec::square(2, 8), nearest_neighbour_potential(2, kCoef));
  std::mt19937 rng(45);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(m.sites());
    for (auto& xi : x) xi = nd(rng);
    const double e = energy_norm(m, x), l2 = l2_norm(x);
    EXPECT_LE(m.mu_minus() * l2, e * (1 + 1e-12));
    EXPECT_LE(e, m.mu_plus() * l2 * (1 + 1e-12));
    std::vector<double> v(m.sites());
    for (auto& vi : v) vi = nd(rng);
    EXPECT_NEAR(y_norm(m, x, v), std::hypot(e, l2_norm(v)), 1e-12);
  }
}

TEST(Norms, UnitSiteVector) {
  const auto m = fixture::chain_model(16, kCoef);
  std::vector<double> x(16, 0.0);
  x[7] = 1.0;
  EXPECT_NEAR(energy_norm(m, x), std::sqrt(2 * kCoef.a1 + kCoef.b1), 1e-14);
  EXPECT_EQ(linf_norm(x), 1.0);
}

TEST(Residual, ExactPlaneWaveOfLinearChain) {
  const ChainCoefficients lin{0.9, 0, 0, 1.2, 0, 0};
  const auto m = fixture::chain_model(64, lin);
  const double th = 2 * oracle::kPi * 7 / 64, w = oracle::Chain{lin}.omega(th), t = 3.7;
  std::vector<double> x(64), xdd(64);
  for (int g = 0; g < 64; ++g) {
    x[g] = std::cos(th * g + w * t);
    xdd[g] = -w * w * x[g];
  }
  EXPECT_LT(linf_norm(residual(m, x, xdd)), 1e-13);
}

TEST(EnergyDrift, SeparatesOscillationFromTrend) {
  std::vector<double> osc, ramp;
  for (int k = 0; k < 1000; ++k) {
    osc.push_back(1.0 + 1e-4 * std::sin(0.37 * k));
    ramp.push_back(1.0 + 1e-6 * k);
  }
  EXPECT_LT(measure_energy_drift(osc).drift, 1e-6);
  EXPECT_NEAR(measure_energy_drift(osc).max_fluctuation, 1e-4, 1e-6);
  EXPECT_NEAR(measure_energy_drift(ramp).drift, 9e-4, 1e-5);
}
