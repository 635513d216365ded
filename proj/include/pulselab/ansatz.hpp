#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pulselab/macro_solver.hpp"
#include "pulselab/micro.hpp"

namespace pulselab {

struct AnsatzSample {
  std::vector<double> x, xd, xdd;
  double t = 0.0;
  double max_imag = 0.0;  // largest imaginary residue of the assembled sums
};

inline void check_commensurate(const PulseSystem& sys, const LatticeModel& model) {
  const int m = model.cells();
  for (const auto& p : sys.pulses()) {
    for (int i = 0; i < model.dimension(); ++i) {
      const double k = p.theta[i] * m / (2.0 * std::numbers::pi);
      if (std::abs(k - std::round(k)) > 1e-9)
        throw IncommensurateWaveVector("pulse wave vector is not on the 2pi/M grid");
    }
  }
}

// Multiscale approximation X = sum_k eps^k sum_{J in T_k} A_{k,J}(eps t, eps gamma) E_J
// and its first two time derivatives. Levels above max_level are dropped.
inline AnsatzSample assemble(const MacroSolver& solver, const AmplitudeHierarchy& h,
                             const LatticeModel& model, double eps, double t, int max_level = 3) {
  const auto& plan = solver.evaluator().plan();
  const auto& sys = plan.system();
  const MacroGrid& grid = h.grid;
  if (grid.dimension != model.dimension()) throw ConfigError("macro grid and lattice dimensions differ");
  if (std::abs(eps * model.cells() - grid.period) > 1e-9 * grid.period)
    throw ConfigError("macro period must equal eps * M");
  if (std::abs(eps * t - h.tau) > 1e-9 * std::max(1.0, h.tau))
    throw ConfigError("hierarchy time does not match eps * t");
  check_commensurate(sys, model);

  const std::size_t n = model.sites();
  std::vector<Complex> zx(n, 0.0), zv(n, 0.0), za(n, 0.0);
  const auto levels = solver.jets(h, 2);
  const auto& ops = solver.evaluator().ops();
  const int top = std::min(max_level, plan.order());
  std::vector<std::array<int, kMaxDim>> coords(n);
  for (std::size_t s = 0; s < n; ++s) coords[s] = model.coords(s);

  for (int k = 1; k <= top; ++k) {
    const double ek = std::pow(eps, k);
    for (std::size_t id = 0; id < levels[k].size(); ++id) {
      const Series& a = levels[k][id];
      if (a.zero()) continue;
      const auto& r = sys.rep(static_cast<int>(id));
      const Field a0 = ops.upsample(a.derivative(0, grid.size()), model.cells());
      const Field a1 = ops.upsample(a.derivative(1, grid.size()), model.cells());
      const Field a2 = ops.upsample(a.derivative(2, grid.size()), model.cells());
      const double w = r.omega;
      for (std::size_t s = 0; s < n; ++s) {
        double phase = w * t;
        for (int i = 0; i < model.dimension(); ++i) phase += r.theta[i] * coords[s][i];
        const Complex e = std::polar(ek, phase);
        zx[s] += a0[s] * e;
        zv[s] += (eps * a1[s] + Complex(0.0, w) * a0[s]) * e;
        za[s] += (eps * eps * a2[s] + Complex(0.0, 2.0 * w * eps) * a1[s] - w * w * a0[s]) * e;
      }
    }
  }
  AnsatzSample out;
  out.t = t;
  out.x.resize(n);
  out.xd.resize(n);
  out.xdd.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    out.x[s] = zx[s].real();
    out.xd[s] = zv[s].real();
    out.xdd[s] = za[s].real();
    out.max_imag = std::max({out.max_imag, std::abs(zx[s].imag()), std::abs(zv[s].imag()),
                             std::abs(za[s].imag())});
  }
  return out;
}

// Micro initial data from the order-(N-1) truncation of the ansatz at t = 0.
inline MicroState initial_state(const MacroSolver& solver, const AmplitudeHierarchy& h,
                                const LatticeModel& model, double eps) {
  const AnsatzSample s = assemble(solver, h, model, eps, h.tau / eps, h.order - 1);
  return {s.x, s.xd, s.t};
}

}  // namespace pulselab
