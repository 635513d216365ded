#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"

using namespace pulselab;

namespace {

const ChainCoefficients kCoef{1.0, 0.7, 0.3, 1.0, 0.4, 0.2};

double fd_slope(double e1, double e2, double ratio = 2.0) { return std::log(e1 / e2) / std::log(ratio); }

// Polynomial force with an extra quartic term, exact potential included.
PotentialSpec quartic_callbacks(const ChainCoefficients& c, double quartic) {
  PotentialSpec p = nearest_neighbour_potential(1, c);
  auto fplus = [c, quartic](double d) { return d * (c.a1 + d * (c.a2 + d * (c.a3 + d * quartic))); };
  auto vplus = [c, quartic](double d) {
    return d * d * (c.a1 / 2 + d * (c.a2 / 3 + d * (c.a3 / 4 + d * quartic / 5)));
  };
  p.bond_force = [fplus](const Offset& a, double d) { return a[0] > 0 ? fplus(d) : -fplus(-d); };
  p.bond_potential = [vplus](const Offset& a, double d) { return a[0] > 0 ? vplus(d) : vplus(-d); };
  p.onsite_force = [c](double x) { return x * (c.b1 + x * (c.b2 + x * c.b3)); };
  p.onsite_potential = [c](double x) { return x * x * (c.b1 / 2 + x * (c.b2 / 3 + x * c.b3 / 4)); };
  return p;
}

}  // namespace

TEST(Dispersion, ChainClosedForm) {
  const auto m = fixture::chain_model(64, kCoef);
  const oracle::Chain ch{kCoef};
  for (double t : {-3.0, -1.0, 0.0, 0.4, 2.5}) {
    EXPECT_NEAR(m.omega_squared({t, 0, 0}), ch.omega2(t), 1e-14);
    EXPECT_NEAR(m.group_velocity({t, 0, 0})[0], ch.velocity(t), 1e-14);
  }
}

TEST(Dispersion, SquareLatticeSumsAxes) {
  const LatticeModel m(LatticeSpec::square(2, 16), nearest_neighbour_potential(2, kCoef));
  const double t1 = 0.3, t2 = -1.1;
  EXPECT_NEAR(m.omega_squared({t1, t2, 0}), 2 * (2 - std::cos(t1) - std::cos(t2)) + 1.0, 1e-14);
}

TEST(Dispersion, GroupVelocityAtQuarterTurn) {
  const auto m = fixture::chain_model(64, ChainCoefficients{1, 0, 0, 1, 0, 0});
  EXPECT_NEAR(m.group_velocity({std::numbers::pi / 2, 0, 0})[0], 1.0 / std::sqrt(3.0), 1e-14);
}

TEST(Dispersion, GroupVelocityMatchesCentralDifferences) {
  const LatticeModel m(LatticeSpec::square(2, 16), nearest_neighbour_potential(2, ChainCoefficients{0.8, 0, 0, 1.3, 0, 0}));
  const WaveVector th{0.7, -0.4, 0};
  const RealVec v = m.group_velocity(th);
  auto err = [&](double h) {
    double e = 0.0;
    for (int i = 0; i < 2; ++i) {
      WaveVector p = th, q = th;
      p[i] += h;
      q[i] -= h;
      e = std::max(e, std::abs((m.dispersion(p) - m.dispersion(q)) / (2 * h) - v[i]));
    }
    return e;
  };
  EXPECT_GE(fd_slope(err(1e-2), err(5e-3)), 1.9);
}

TEST(Dispersion, GridRangeBoundsAreExtremal) {
  const auto m = fixture::chain_model(64, kCoef);
  EXPECT_NEAR(m.mu_minus(), 1.0, 1e-14);
  EXPECT_NEAR(m.mu_plus(), std::sqrt(5.0), 1e-14);
}

TEST(Stability, NegativeRadicandIsRejected) {
  EXPECT_THROW(fixture::chain_model(64, ChainCoefficients{-1.0, 0, 0, 1.0, 0, 0}), StabilityViolation);
  // Acoustic chain: zero at theta = 0 is allowed only in the marginal check.
  const ChainCoefficients acoustic{1.0, 0, 0, 0.0, 0, 0};
  EXPECT_THROW(LatticeModel(LatticeSpec::chain(8), nearest_neighbour_potential(1, acoustic)), StabilityViolation);
  EXPECT_NO_THROW(
      LatticeModel(LatticeSpec::chain(8), nearest_neighbour_potential(1, acoustic), StabilityCheck::kMarginal));
  const auto marginal =
      LatticeModel(LatticeSpec::chain(8), nearest_neighbour_potential(1, acoustic), StabilityCheck::kMarginal);
  EXPECT_THROW(marginal.dispersion({0, 0, 0}), StabilityViolation);
}

TEST(SymbolSum, ChainIdentities) {
  const auto m = fixture::chain_model(64, kCoef);
  const RealVec e{1, 0, 0};
  const double t = 0.83;
  // Odd orders are even in alpha, even orders odd in alpha.
  EXPECT_NEAR(std::abs(m.symbol_sum(1, {t, 0, 0}, 0, e) - 2.0 * kCoef.a1 * std::cos(t)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(m.symbol_sum(1, {t, 0, 0}, 1, e) - Complex(0, 2.0 * kCoef.a1 * std::sin(t))), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(m.symbol_sum(2, {t, 0, 0}, 1, e) - 2.0 * kCoef.a2 * std::cos(t)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(m.symbol_sum(2, {t, 0, 0}, 0, e) - Complex(0, 2.0 * kCoef.a2 * std::sin(t))), 0.0, 1e-14);
  // Gradient of Omega^2 is the s = 1 imaginary part.
  EXPECT_NEAR(m.omega_squared_gradient({t, 0, 0})[0], m.symbol_sum(1, {t, 0, 0}, 1, e).imag(), 1e-14);
}

TEST(SymbolSum, OrderOutOfRange) {
  const auto m = fixture::chain_model(64, kCoef);
  EXPECT_THROW(m.symbol_sum(4, {0.1, 0, 0}, 0, {1, 0, 0}), OrderOutOfRange);
  EXPECT_THROW(m.symbol_sum(0, {0.1, 0, 0}, 0, {1, 0, 0}), OrderOutOfRange);
}

TEST(Potential, AntisymmetryIsEnforced) {
  PotentialSpec p;
  p.set_bond(2, {1, 0, 0}, 0.5);
  EXPECT_DOUBLE_EQ(p.a(2, {-1, 0, 0}), -0.5);
  p.set_bond(3, {1, 0, 0}, 0.25);
  EXPECT_DOUBLE_EQ(p.a(3, {-1, 0, 0}), 0.25);
  EXPECT_THROW(p.set_bond(1, {2, 0, 0}, 1.0), ConfigError);
  p.bonds[1].a[1] = 0.5;  // break the partner relation by hand
  EXPECT_THROW(p.check_antisymmetry(), ConfigError);
}

TEST(Force, PlaneWaveIsEigenvectorOfLinearChain) {
  const ChainCoefficients lin{0.9, 0, 0, 1.2, 0, 0};
  const auto m = fixture::chain_model(64, lin);
  const double t = 2 * std::numbers::pi * 5 / 64;
  std::vector<double> x(64);
  for (int g = 0; g < 64; ++g) x[g] = std::cos(t * g + 0.3);
  const auto f = m.force(x);
  const double w2 = oracle::Chain{lin}.omega2(t);
  for (int g = 0; g < 64; ++g) EXPECT_NEAR(f[g], -w2 * x[g], 1e-13);
  EXPECT_TRUE(m.is_linear());
  EXPECT_FALSE(fixture::chain_model(64, kCoef).is_linear());
}

TEST(Force, IsNegativeEnergyGradient) {
  const LatticeModel m(LatticeSpec::square(2, 6), nearest_neighbour_potential(2, kCoef));
  std::mt19937 rng(11);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<double> x(m.sites()), v(m.sites(), 0.0);
  for (auto& xi : x) xi = nd(rng);
  const auto f = m.force(x);
  const double h = 1e-5;
  for (std::size_t s = 0; s < m.sites(); ++s) {
    auto p = x, q = x;
    p[s] += h;
    q[s] -= h;
    EXPECT_NEAR(-(m.energy(p, v) - m.energy(q, v)) / (2 * h), f[s], 1e-8);
  }
}

TEST(Force, EnergyNormOfUnitSiteVector) {
  const auto m = fixture::chain_model(16, kCoef);
  std::vector<double> x(16, 0.0);
  x[3] = 1.0;
  EXPECT_NEAR(m.energy_norm_squared(x), 2 * kCoef.a1 + kCoef.b1, 1e-14);
}

TEST(Callbacks, AgreeWithTaylorTableToFourthOrder) {
  const double quartic = 0.8;
  const LatticeModel poly = fixture::chain_model(32, kCoef);
  const LatticeModel exact(LatticeSpec::chain(32), quartic_callbacks(kCoef, quartic));
  EXPECT_FALSE(exact.is_linear());
  std::mt19937 rng(12);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> shape(32);
  for (auto& s : shape) s = nd(rng);
  auto diff = [&](double amp) {
    std::vector<double> x(32);
    for (int i = 0; i < 32; ++i) x[i] = amp * shape[i];
    const auto a = poly.force(x), b = exact.force(x);
    double e = 0.0;
    for (int i = 0; i < 32; ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
  };
  EXPECT_GE(fd_slope(diff(0.02), diff(0.01)), 3.8);
}

TEST(Callbacks, MismatchedTableIsRejected) {
  ChainCoefficients wrong = kCoef;
  PotentialSpec p = quartic_callbacks(kCoef, 0.0);
  wrong.a2 = 0.1;
  PotentialSpec table = nearest_neighbour_potential(1, wrong);
  table.bond_force = p.bond_force;
  table.bond_potential = p.bond_potential;
  table.onsite_force = p.onsite_force;
  table.onsite_potential = p.onsite_potential;
  EXPECT_THROW(LatticeModel(LatticeSpec::chain(16), table), ConfigError);
}

TEST(Grid, IndexRoundTripAndWaveVectors) {
  const LatticeModel m(LatticeSpec::square(3, 5), nearest_neighbour_potential(3, kCoef));
  for (std::size_t s = 0; s < m.sites(); ++s) EXPECT_EQ(m.index(m.coords(s)), s);
  EXPECT_EQ(m.index({-1, 0, 0}), m.index({4, 0, 0}));
  const auto t = m.grid_wave_vector({3, 1, 0});
  EXPECT_NEAR(t[0], 2 * std::numbers::pi * 3 / 5 - 2 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(t[1], 2 * std::numbers::pi / 5, 1e-14);
  EXPECT_EQ(m.with_cells(7).sites(), 343u);
}

TEST(Builtins, NamedModels) {
  const LatticeModel fpu(LatticeSpec::chain(8), builtin_potential("fpu", 1, kCoef));
  EXPECT_EQ(fpu.b(2), 0.0);
  EXPECT_EQ(fpu.a(2, {1, 0, 0}), kCoef.a2);
  const LatticeModel kg(LatticeSpec::chain(8), builtin_potential("kg", 1, kCoef));
  EXPECT_EQ(kg.a(2, {1, 0, 0}), 0.0);
  EXPECT_EQ(kg.b(3), kCoef.b3);
  EXPECT_THROW(builtin_potential("toda", 1, kCoef), ConfigError);
}
