// Runs every acceptance check and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "pulselab/coupling.hpp"
#include "pulselab/micro.hpp"
#include "pulselab/validation.hpp"

using namespace pulselab;
namespace rs = pulselab::resonance;

namespace {

const std::filesystem::path kConfigs = PULSELAB_CONFIG_DIR;
const ChainCoefficients kCoef{1.0, 0.7, 0.3, 1.0, 0.4, 0.2};
const ChainCoefficients kWaveBase{-0.2, 0.5, 0.3, 1.0, 0.4, 0.2};

// Collects failed sub-checks for one criterion.
struct Checks {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
  template <class T>
  void note(const std::string& key, const T& v) {
    detail << ' ' << key << '=' << v;
  }
};

using Criterion = std::function<void(Checks&)>;

double sup_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

std::string slope_range(const SweepReport& r) {
  std::ostringstream os;
  os << r.fit.slope << " in [" << r.lower << ", " << r.upper << "]";
  return os.str();
}

void residual_scaling(Checks& c) {
  const SweepReport n2 = run_residual_sweep(load_config(kConfigs / "three_wave_n2.yaml"));
  c.note("d1N2", n2.fit.slope);
  c.expect(n2.fit.slope >= 2.2 && n2.fit.slope <= 2.8, "d=1 N=2 slope " + slope_range(n2));
  const SweepReport n3 = run_residual_sweep(load_config(kConfigs / "three_wave_n3.yaml"));
  c.note("d1N3", n3.fit.slope);
  c.expect(n3.fit.slope >= 3.1 && n3.fit.slope <= 3.9, "d=1 N=3 slope " + slope_range(n3));
  const SweepReport d2 = run_residual_sweep(load_config(kConfigs / "single_pulse_2d.yaml"));
  c.note("d2N3", d2.fit.slope);
  c.expect(d2.pass(), "d=2 N=3 slope " + slope_range(d2));
}

void error_scaling(Checks& c) {
  const SweepReport r = run_validation(load_config(kConfigs / "three_wave_n2.yaml"));
  c.note("slope", r.fit.slope);
  c.note("worst_ratio", r.worst_prediction_ratio);
  c.expect(r.fit.slope >= 1.4, "error slope " + std::to_string(r.fit.slope) + " < 1.4");
  c.expect(r.prediction_ok, "a checkpoint exceeds 3x the fitted law");
}

void resonance_search(Checks& c) {
  for (double phi : {1.1, 1.2, 1.3}) {
    const auto p = rs::Problem::from_phi(phi);
    try {
      const auto res = rs::search(p, 50);
      c.expect(!res.kept.empty(), "phi=" + std::to_string(phi) + " empty");
      double worst = 0.0, margin = 1.0;
      for (const auto& t : res.kept) {
        worst = std::max(worst, std::abs(fixture::resonance_gap(p, t.theta1, t.theta2)));
        margin = std::min(margin, t.min_margin());
      }
      c.expect(worst < 1e-10, "phi=" + std::to_string(phi) + " identity " + std::to_string(worst));
      c.expect(margin >= 1e-4, "phi=" + std::to_string(phi) + " margin " + std::to_string(margin));
    } catch (const std::exception& e) {
      c.expect(false, "phi=" + std::to_string(phi) + ": " + e.what());
    }
  }
  auto empty = [](const rs::Problem& p) {
    try {
      rs::search(p, 50);
      return false;
    } catch (const EmptyBranch&) {
      return true;
    }
  };
  for (double phi : {1.35, 1.5}) c.expect(empty(rs::Problem::from_phi(phi)), "phi=" + std::to_string(phi) + " not empty");
  c.expect(empty(rs::Problem{0.3, 1.0}), "positive a1 not empty");
}

void coupling_forms(Checks& c) {
  std::mt19937 rng(31);
  double sine = 0.0, sym = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const auto [m, bonds] = fixture::random_model(d, rng);
    for (int trial = 0; trial < 100; ++trial) {
      const WaveVector p = fixture::random_theta(d, rng), q = fixture::random_theta(d, rng),
                       r = fixture::random_theta(d, rng);
      const WaveVector mp{-p[0], -p[1], -p[2]}, mq{-q[0], -q[1], -q[2]}, mr{-r[0], -r[1], -r[2]};
      const auto c2 = coupling_c(m, {p, q}), c3 = coupling_c(m, {p, q, r});
      sine = std::max(sine, std::abs(c2 - fixture::sine_form(bonds, m.b(2), p, q)));
      sym = std::max({sym, std::abs(c2 - coupling_c(m, {q, p})), std::abs(std::conj(c2) - coupling_c(m, {mp, mq})),
                      std::abs(c3 - coupling_c(m, {r, p, q})), std::abs(c3 - coupling_c(m, {q, r, p})),
                      std::abs(std::conj(c3) - coupling_c(m, {mp, mq, mr}))});
    }
  }
  c.note("sine", sine);
  c.note("symmetry", sym);
  c.expect(sine <= 1e-12, "sine form");
  c.expect(sym <= 1e-14, "symmetries");
}

void pulse_tables(Checks& c) {
  const auto m = fixture::chain_model(100, kCoef);
  const PulseSystem single(m, fixture::pulses_at(m, {2 * oracle::kPi * 13 / 100}), 3);
  auto index_set = [&](int k) {
    std::set<std::vector<int>> s;
    for (int id : single.table(k)) s.insert(single.rep(id).indices);
    return s;
  };
  const std::set<std::vector<int>> t2{{1}, {-1}, {1, 1}, {-1, -1}, {1, -1}};
  std::set<std::vector<int>> t3 = t2;
  t3.insert({1, 1, 1});
  t3.insert({-1, -1, -1});
  c.expect(index_set(2) == t2, "T2 set");
  c.expect(index_set(3) == t3, "T3 set");

  const auto tw = oracle::three_wave_chain(36, -35, 100, kWaveBase);
  const auto mw = fixture::chain_model(100, tw.chain.k);
  const PulseSystem sys(mw, fixture::pulses_at(mw, {tw.theta[0], tw.theta[1], tw.theta[2]}), 3);
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> len(1, 5), idx(1, 3), sign(0, 1);
  int bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<int> v(len(rng));
    for (auto& j : v) j = sign(rng) ? idx(rng) : -idx(rng);
    const Representant r = sys.canonicalize(v);
    const Aggregate g = sys.aggregate(v);
    bool ok = sys.same(g, Aggregate{r.theta, r.omega});
    ok = ok && (sys.same(g, Aggregate{}) || cancellation_free(r.indices));
    ok = ok && sys.canonicalize(r.indices).indices == r.indices;
    // Inserting a cancelling pair leaves the result unchanged.
    std::vector<int> padded = v;
    const int j = idx(rng);
    padded.insert(padded.begin() + static_cast<long>(padded.size() / 2), {j, -j});
    ok = ok && sys.canonicalize(padded).indices == r.indices;
    bad += ok ? 0 : 1;
  }
  c.note("random_failures", bad);
  c.expect(bad == 0, "random canonicalization");
}

MicroState random_state(const LatticeModel& m, double amp, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd(0.0, amp);
  MicroState s = MicroState::zero(m);
  for (auto& x : s.x) x = nd(rng);
  for (auto& v : s.v) v = nd(rng);
  return s;
}

void micro_integrator(Checks& c) {
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
    const double drift = measure_energy_drift(energy).drift;
    c.note(std::string(name) + "_drift", drift);
    c.expect(drift <= 1e-7, std::string(name) + " drift");
  }
  const auto m = fixture::chain_model(64, kCoef);
  const MicroState start = random_state(m, 0.1, 42);
  MicroState s = start;
  VerletIntegrator integ(m);
  const double dt = 0.05 / m.mu_plus();
  integ.advance(s, dt, 500);
  for (auto& v : s.v) v = -v;
  integ.advance(s, dt, 500);
  for (auto& v : s.v) v = -v;
  const double back = std::max(linf_norm(difference(s.x, start.x)), linf_norm(difference(s.v, start.v)));
  c.note("reversal", back);
  c.expect(back <= 1e-12, "reversibility");
}

void macro_evolution(Checks& c) {
  const auto tw = oracle::three_wave_chain(36, -35, 100, kWaveBase);
  {
    const MacroGrid grid{1, 256, 80.0};
    auto s = fixture::three_wave_stack(tw, 2, grid);
    const Field zero(256, 0.0);
    AmplitudeHierarchy h = make_hierarchy(s->plan, grid, {zero, zero, fixture::gaussian(grid, 40.0, 4.0)});
    s->solver.evolve(h, 1.0, 0.01);
    const double v = tw.chain.velocity(tw.theta[2]);
    const double err = sup_diff(h.first[2], fixture::gaussian(grid, 40.0 - v, 4.0));
    c.note("transport", err);
    c.expect(err < 1e-6, "rigid transport");
  }
  {
    const MacroGrid grid{1, 256, 80.0};
    auto s = fixture::three_wave_stack(tw, 2, grid);
    const Field zero(256, 0.0);
    const double v1 = tw.chain.velocity(tw.theta[0]), v3 = tw.chain.velocity(tw.theta[2]);
    const double speed = std::abs(v1 - v3), gap = 24.0, c1 = 40.0, c3 = c1 + (v1 > v3 ? -gap : gap);
    AmplitudeHierarchy h =
        make_hierarchy(s->plan, grid, {fixture::gaussian(grid, c1, 2.0), zero, fixture::gaussian(grid, c3, 2.0)});
    const double before = SpectralOps::sup(h.first[1]);
    s->solver.evolve(h, gap / speed, 0.05);
    const double after = SpectralOps::sup(h.first[1]);
    c.note("generated", after);
    c.expect(before == 0.0 && after > 1e-4, "second amplitude generation");
  }
  {
    const MacroGrid grid{1, 64, 40.0};
    auto s = fixture::three_wave_stack(tw, 2, grid);
    const std::vector<Field> init = {fixture::gaussian(grid, 18.0, 4.0, 2.0), fixture::gaussian(grid, 20.0, 4.0, 2.0),
                                     fixture::gaussian(grid, 22.0, 4.0, 2.0)};
    auto run = [&](double dt) {
      AmplitudeHierarchy h = make_hierarchy(s->plan, grid, init);
      s->solver.evolve(h, 1.0, dt);
      return h.first;
    };
    const auto ref = run(0.1 / 8);
    auto err = [&](const std::vector<Field>& a) {
      double e = 0.0;
      for (int j = 0; j < 3; ++j) e = std::max(e, sup_diff(a[j], ref[j]));
      return e;
    };
    const double ratio = err(run(0.1)) / err(run(0.05));
    c.note("rk4_ratio", ratio);
    c.expect(ratio >= 12.0, "time step halving ratio");
  }
}

void second_order_rhs(Checks& c) {
  const auto tw = oracle::three_wave_chain(36, -35, 100, kWaveBase);
  const double period = 10.0;
  const int points = 32;
  const MacroGrid grid{1, points, period};
  auto s = fixture::three_wave_stack(tw, 3, grid);
  auto sample = [&](const oracle::TrigField* f, int deriv = 0) {
    std::vector<Field> out;
    for (int j = 0; j < 3; ++j) out.push_back(fixture::to_field(f[j].sample(points, deriv)));
    return out;
  };
  std::mt19937 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    oracle::TrigField a1[3], a2[3];
    for (auto& f : a1) f = oracle::TrigField::random(rng, period, 3);
    for (auto& f : a2) f = oracle::TrigField::random(rng, period, 3);
    std::vector<Field> d1, d2;
    s->solver.evaluator().evolution_rhs(sample(a1), sample(a2), d1, d2);
    const auto expect = oracle::three_wave_second_order(tw.chain, tw.theta, a1, a2, points);
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, oracle::max_abs_diff(std::vector<oracle::Complex>(d2[j].begin(), d2[j].end()),
                                                   expect[j]) /
                                  std::max(1.0, oracle::max_abs(expect[j])));
  }
  c.note("rhs", worst);
  c.expect(worst < 1e-10, "second-order right-hand side");

  oracle::TrigField a2[3];
  for (auto& f : a2) f = oracle::TrigField::random(rng, period, 4);
  std::vector<Field> d1, d2;
  s->solver.evaluator().evolution_rhs(std::vector<Field>(3, Field(points, 0.0)), sample(a2), d1, d2);
  const auto slope = sample(a2, 1);
  double homogeneous = 0.0;
  for (int j = 0; j < 3; ++j) {
    Field expect = slope[j];
    for (auto& x : expect) x *= tw.chain.velocity(tw.theta[j]);
    homogeneous = std::max({homogeneous, sup_diff(d2[j], expect), SpectralOps::sup(d1[j])});
  }
  c.note("homogeneous", homogeneous);
  c.expect(homogeneous < 1e-12, "vanishing first order gives pure transport");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {residual_scaling, error_scaling,    resonance_search, coupling_forms,
                                           pulse_tables,     micro_integrator, macro_evolution,  second_order_rhs};
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Checks c;
    try {
      criteria[k](c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    all = all && c.ok;
    std::cout << "criterion " << k + 1 << ": " << (c.ok ? "PASS" : "FAIL") << c.detail.str() << std::endl;
  }
  return all ? 0 : 1;
}
