#pragma once

#include <chrono>
#include <limits>
#include <optional>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pulselab/ansatz.hpp"
#include "pulselab/config.hpp"
#include "pulselab/fit.hpp"
#include "pulselab/micro.hpp"

namespace pulselab {

struct Checkpoint {
  double t = 0.0;
  double tau = 0.0;
  double value = 0.0;     // Y-distance (error sweep) or l2 residual (residual sweep)
  double value_l2 = 0.0;  // l2 x l2 distance (error sweep only)
  double energy = 0.0;
};

struct SweepPoint {
  double eps = 0.0;
  int cells = 0;
  double dt = 0.0;
  double metric = 0.0;     // sup over checkpoints
  double metric_l2 = 0.0;
  double max_imag = 0.0;
  EnergyDrift drift;
  std::vector<Checkpoint> series;
  double seconds = 0.0;  // wall clock, logged only
};

struct SweepReport {
  std::string kind;  // "residual" or "error"
  int order = 2;
  int dimension = 1;
  double tau_reached = 0.0;
  bool blow_up = false;
  bool integrator_limited = false;
  std::vector<SweepPoint> points;
  SlopeFit fit;
  double expected = 0.0;       // residual: N+1-d/2; error: beta
  double lower = 0.0, upper = 0.0;
  bool prediction_ok = true;  // every checkpoint within the factor of the fitted law
  double worst_prediction_ratio = 0.0;
  std::optional<double> dt_check_difference;  // relative change of the smallest-eps metric at dt/2
  std::vector<std::string> notes;

  bool pass() const {
    if (points.size() < 3) return false;
    const bool slope_ok = fit.slope >= lower && fit.slope <= upper;
    return slope_ok && prediction_ok;
  }
};

namespace detail {

struct MacroSetup {
  LatticeModel base;
  PulseSystem system;
  HierarchyPlan plan;
  MacroSolver solver;
  AmplitudeHierarchy initial;

  MacroSetup(const ExperimentConfig& cfg, bool force)
      : base(cfg.model(cfg.cells_for(cfg.epsilons.front()))),
        system(base, cfg.make_pulses(base), std::max(cfg.order, 3)),
        plan(system, cfg.order, force),
        solver(plan, cfg.grid()),
        initial(make_hierarchy(plan, cfg.grid(), cfg.initial_amplitudes())) {}
};

// Macro snapshots at `count` + 1 evenly spaced times in [0, tau0]. On blow-up
// tau0 shrinks to the last time reached and the grid is rebuilt, so every run
// compares against the same evenly spaced record.
inline std::vector<AmplitudeHierarchy> macro_snapshots(const MacroSetup& s, double tau0, int count, double dt,
                                                        SweepReport& report) {
  auto times = [count](double end) {
    std::vector<double> t;
    for (int c = 0; c <= count; ++c) t.push_back(end * c / count);
    return t;
  };
  AmplitudeHierarchy h = s.initial;
  std::vector<AmplitudeHierarchy> out;
  double reached = tau0;
  try {
    for (double tau : times(tau0)) {
      s.solver.evolve(h, tau, dt);
      out.push_back(h);
    }
  } catch (const BlowUp& e) {
    report.blow_up = true;
    report.notes.push_back(std::string("macro blow-up: ") + e.what());
    reached = h.tau;
  }
  if (report.blow_up) {
    if (!(reached > 0.0)) throw BlowUp("macro solution blew up immediately");
    report.notes.push_back("tau0 reduced to " + std::to_string(reached));
    out.clear();
    h = s.initial;
    for (double tau : times(reached)) {
      s.solver.evolve(h, tau, dt);
      out.push_back(h);
    }
  }
  report.tau_reached = out.back().tau;
  return out;
}

inline void finish_fit(SweepReport& r) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : r.points) pts.push_back({p.eps, p.metric});
  r.fit = fit_slope(pts);
}

}  // namespace detail

// Residual of the full order-N ansatz at tau in {0, tau0/2, tau0}; the macro
// problem is independent of eps and is solved once.
inline SweepReport run_residual_sweep(const ExperimentConfig& cfg, bool force = false) {
  cfg.validate();
  SweepReport r;
  r.kind = "residual";
  r.order = cfg.order;
  r.dimension = cfg.lattice.dimension;
  r.expected = cfg.order + 1.0 - cfg.lattice.dimension / 2.0;
  r.lower = r.expected - cfg.residual_window;
  r.upper = r.expected + cfg.residual_window;
  const detail::MacroSetup setup(cfg, force);
  const auto snaps = detail::macro_snapshots(setup, cfg.tau0, 2, cfg.macro_dt, r);
  for (double eps : cfg.epsilons) {
    const auto start = std::chrono::steady_clock::now();
    SweepPoint p;
    p.eps = eps;
    p.cells = cfg.cells_for(eps);
    const LatticeModel model = cfg.model(p.cells);
    for (const auto& h : snaps) {
      const AnsatzSample s = assemble(setup.solver, h, model, eps, h.tau / eps);
      const double res = l2_norm(residual(model, s.x, s.xdd));
      p.series.push_back({s.t, h.tau, res, 0.0, model.energy(s.x, s.xd)});
      p.metric = std::max(p.metric, res);
      p.max_imag = std::max(p.max_imag, s.max_imag);
    }
    p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.points.push_back(std::move(p));
  }
  detail::finish_fit(r);
  return r;
}

namespace detail {

inline SweepPoint micro_run(const ExperimentConfig& cfg, const MacroSetup& setup,
                            const std::vector<AmplitudeHierarchy>& snaps, double eps, double dt_scale) {
  const auto start = std::chrono::steady_clock::now();
  SweepPoint p;
  p.eps = eps;
  p.cells = cfg.cells_for(eps);
  const LatticeModel model = cfg.model(p.cells);
  const int low = cfg.order - 1;
  const double interval = (snaps.back().tau / (snaps.size() - 1)) / eps;
  const double dt_target = dt_scale * cfg.micro_dt_factor / model.mu_plus();
  const long sub = std::max<long>(1, static_cast<long>(std::ceil(interval / dt_target - 1e-9)));
  p.dt = interval / sub;
  VerletIntegrator integ(model, std::max(0.1, cfg.micro_dt_factor));
  MicroState state = initial_state(setup.solver, snaps.front(), model, eps);
  std::vector<double> energies;
  for (std::size_t c = 0; c < snaps.size(); ++c) {
    if (c > 0) integ.advance(state, p.dt, sub);
    const auto& h = snaps[c];
    state.t = h.tau / eps;  // removes accumulated round-off in t
    const AnsatzSample a = assemble(setup.solver, h, model, eps, state.t, low);
    const auto dx = difference(state.x, a.x), dv = difference(state.v, a.xd);
    Checkpoint cp;
    cp.t = state.t;
    cp.tau = h.tau;
    cp.value = y_norm(model, dx, dv);
    cp.value_l2 = std::hypot(l2_norm(dx), l2_norm(dv));
    cp.energy = model.energy(state.x, state.v);
    energies.push_back(cp.energy);
    p.metric = std::max(p.metric, cp.value);
    p.metric_l2 = std::max(p.metric_l2, cp.value_l2);
    p.max_imag = std::max(p.max_imag, a.max_imag);
    p.series.push_back(cp);
  }
  p.drift = measure_energy_drift(energies);
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

}  // namespace detail

// Micro solutions seeded by the order-(N-1) ansatz, compared with it in the
// Y-norm at evenly spaced checkpoints up to tau0/eps.
inline SweepReport run_validation(const ExperimentConfig& cfg, bool force = false) {
  cfg.validate();
  if (cfg.order < 2) throw ConfigError("error sweeps need order >= 2");
  SweepReport r;
  r.kind = "error";
  r.order = cfg.order;
  r.dimension = cfg.lattice.dimension;
  r.expected = cfg.beta;
  r.lower = cfg.beta - cfg.error_slope_slack;
  r.upper = std::numeric_limits<double>::infinity();
  const detail::MacroSetup setup(cfg, force);
  r.integrator_limited = setup.base.is_linear();
  if (r.integrator_limited) r.notes.push_back("linear model: error is integrator-limited");

  const auto snaps = detail::macro_snapshots(setup, cfg.tau0, cfg.checkpoints, cfg.macro_dt, r);

  for (double eps : cfg.epsilons) {
    SweepPoint p = detail::micro_run(cfg, setup, snaps, eps, 1.0);
    if (p.drift.drift > cfg.energy_drift_bound)
      throw MicroInstability("energy drift " + std::to_string(p.drift.drift) + " exceeds the bound at eps " +
                             std::to_string(eps) + "; reduce the micro time step");
    r.points.push_back(std::move(p));
  }
  detail::finish_fit(r);

  for (const auto& p : r.points) {
    const double bound = cfg.prediction_factor * r.fit.predict(p.eps);
    for (const auto& cp : p.series) {
      const double ratio = cp.value / r.fit.predict(p.eps);
      r.worst_prediction_ratio = std::max(r.worst_prediction_ratio, ratio);
      if (cp.value > bound) r.prediction_ok = false;
    }
  }

  if (cfg.dt_check) {
    const SweepPoint half = detail::micro_run(cfg, setup, snaps, cfg.epsilons.back(), 0.5);
    const double ref = r.points.back().metric;
    r.dt_check_difference = std::abs(half.metric - ref) / ref;
    if (*r.dt_check_difference >= 0.1) r.notes.push_back("integrator error is not subdominant at the smallest eps");
  }
  return r;
}

// ---- output -------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace detail

inline void write_report_csv(std::ostream& os, const std::vector<SweepReport>& reports) {
  os << "sweep,eps,cells,metric,metric_l2,fit,slope,slope_half_width\n";
  for (const auto& r : reports) {
    for (const auto& p : r.points) {
      os << r.kind << ',' << detail::fmt(p.eps) << ',' << p.cells << ',' << detail::fmt(p.metric) << ','
         << (r.kind == "error" ? detail::fmt(p.metric_l2) : "") << ',' << detail::fmt(r.fit.predict(p.eps))
         << ',' << detail::fmt(r.fit.slope) << ',' << detail::fmt(r.fit.half_width) << '\n';
    }
  }
}

inline void write_series_csv(std::ostream& os, const std::vector<SweepReport>& reports) {
  os << "sweep,eps,t,tau,value,value_l2,energy\n";
  for (const auto& r : reports)
    for (const auto& p : r.points)
      for (const auto& c : p.series)
        os << r.kind << ',' << detail::fmt(p.eps) << ',' << detail::fmt(c.t) << ',' << detail::fmt(c.tau) << ','
           << detail::fmt(c.value) << ',' << detail::fmt(c.value_l2) << ',' << detail::fmt(c.energy) << '\n';
}

// Key-value summary; deterministic (no timings).
inline void write_summary(std::ostream& os, const std::vector<SweepReport>& reports) {
  for (const auto& r : reports) {
    const std::string k = r.kind;
    os << k << ".order = " << r.order << '\n';
    os << k << ".dimension = " << r.dimension << '\n';
    os << k << ".tau_reached = " << detail::fmt(r.tau_reached) << '\n';
    os << k << ".slope = " << detail::fmt(r.fit.slope) << '\n';
    os << k << ".slope_half_width = " << detail::fmt(r.fit.half_width) << '\n';
    os << k << ".max_deviation = " << detail::fmt(r.fit.max_deviation) << '\n';
    os << k << ".expected = " << detail::fmt(r.expected) << '\n';
    os << k << ".window = [" << detail::fmt(r.lower) << ", " << detail::fmt(r.upper) << "]\n";
    if (r.kind == "error") {
      os << k << ".worst_prediction_ratio = " << detail::fmt(r.worst_prediction_ratio) << '\n';
      if (r.dt_check_difference) os << k << ".dt_half_difference = " << detail::fmt(*r.dt_check_difference) << '\n';
      os << k << ".integrator_limited = " << (r.integrator_limited ? "true" : "false") << '\n';
    }
    os << k << ".blow_up = " << (r.blow_up ? "true" : "false") << '\n';
    os << k << ".status = " << (r.pass() ? "PASS" : "FAIL") << '\n';
  }
}

inline void write_log(std::ostream& os, const std::vector<SweepReport>& reports) {
  for (const auto& r : reports) {
    os << "[" << r.kind << "] order " << r.order << ", tau reached " << r.tau_reached << '\n';
    for (const auto& p : r.points) {
      os << "  eps " << p.eps << " M " << p.cells << " metric " << p.metric << " max_imag " << p.max_imag;
      if (r.kind == "error") os << " dt " << p.dt << " energy_drift " << p.drift.drift;
      std::ostringstream secs;
      secs << std::fixed << std::setprecision(2) << p.seconds;
      os << " time " << secs.str() << "s\n";
    }
    os << "  slope " << r.fit.slope << " +- " << r.fit.half_width << '\n';
    for (const auto& n : r.notes) os << "  note: " << n << '\n';
  }
}

inline void write_outputs(const std::filesystem::path& dir, const std::vector<SweepReport>& reports) {
  std::filesystem::create_directories(dir);
  std::ofstream report(dir / "report.csv"), series(dir / "series.csv"), summary(dir / "summary.txt"),
      log(dir / "run.log");
  write_report_csv(report, reports);
  write_series_csv(series, reports);
  write_summary(summary, reports);
  write_log(log, reports);
}

}  // namespace pulselab
