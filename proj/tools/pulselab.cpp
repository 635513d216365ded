#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "pulselab/ansatz.hpp"
#include "pulselab/config.hpp"
#include "pulselab/coupling.hpp"
#include "pulselab/resonance.hpp"
#include "pulselab/validation.hpp"

namespace fs = std::filesystem;
using namespace pulselab;

namespace {

std::ostream& precise(std::ostream& os) { return os << std::setprecision(12); }

int resolve_cells(const ExperimentConfig& cfg, std::optional<int> cells, std::optional<double> eps) {
  if (cells) return *cells;
  if (eps) return cfg.cells_for(*eps);
  if (cfg.model_cells) return *cfg.model_cells;
  return cfg.pulse_grid;
}

void print_vec(std::ostream& os, const WaveVector& v, int d) {
  for (int i = 0; i < d; ++i) os << (i ? " " : "") << v[i];
}

// ---- classify -------------------------------------------------------------

int cmd_classify(const std::string& config, std::optional<int> cells, bool couplings, int order) {
  const ExperimentConfig cfg = load_config(config);
  const LatticeModel model = cfg.model(resolve_cells(cfg, cells, std::nullopt));
  const PulseSystem sys(model, cfg.make_pulses(model), order);
  const ClassificationReport rep = classify(sys, order);
  const int d = model.dimension();
  precise(std::cout);
  std::cout << "case = " << rep.case_number << " (" << rep.case_name << ")\n";
  std::cout << "closedness_order = " << rep.closedness_order << '\n';
  std::cout << "delta_margin = " << rep.margin << '\n';
  for (int id : rep.violations)
    std::cout << "violation = " << format_indices(sys.rep(id).indices) << '\n';
  for (int id : rep.merges) std::cout << "merge = " << format_indices(sys.rep(id).indices) << '\n';
  std::cout << "\nrepresentant,order,theta,omega,defect,resonant\n";
  for (const auto& r : sys.representants()) {
    if (!r.stored) continue;
    std::cout << '"' << format_indices(r.indices) << "\"," << r.order << ',';
    print_vec(std::cout, r.theta, d);
    std::cout << ',' << r.omega << ',' << r.defect << ',' << (sys.resonant(r.id) ? "yes" : "no") << '\n';
  }
  if (couplings) {
    const CouplingTable table(sys);
    std::cout << "\npulses,re_c,im_c\n";
    for (const auto& row : table.pulse_rows())
      std::cout << '"' << format_indices(row.reps) << "\"," << row.value.real() << ',' << row.value.imag() << '\n';
  }
  return 0;
}

// ---- macro ------------------------------------------------------------------

void write_snapshot(const fs::path& file, const AmplitudeHierarchy& h) {
  std::ofstream os(file);
  precise(os);
  const int d = h.grid.dimension;
  for (int i = 0; i < d; ++i) os << "y" << i << ',';
  for (std::size_t j = 0; j < h.first.size(); ++j)
    os << "re_A" << j + 1 << ",im_A" << j + 1 << (j + 1 < h.first.size() ? "," : "");
  os << '\n';
  for (std::size_t n = 0; n < h.grid.size(); ++n) {
    const RealVec y = h.grid.node(n);
    for (int i = 0; i < d; ++i) os << y[i] << ',';
    for (std::size_t j = 0; j < h.first.size(); ++j)
      os << h.first[j][n].real() << ',' << h.first[j][n].imag() << (j + 1 < h.first.size() ? "," : "");
    os << '\n';
  }
}

int cmd_macro(const std::string& config, double tau_end, std::optional<double> dt, int snapshots,
              const fs::path& out, bool force) {
  const ExperimentConfig cfg = load_config(config);
  const LatticeModel model = cfg.model(cfg.cells_for(cfg.epsilons.front()));
  const PulseSystem sys(model, cfg.make_pulses(model), std::max(cfg.order, 3));
  const HierarchyPlan plan(sys, cfg.order, force);
  const MacroSolver solver(plan, cfg.grid());
  AmplitudeHierarchy h = make_hierarchy(plan, cfg.grid(), cfg.initial_amplitudes());
  fs::create_directories(out);
  write_snapshot(out / "snapshot_0000.csv", h);
  for (int s = 1; s <= snapshots; ++s) {
    try {
      solver.evolve(h, tau_end * s / snapshots, dt.value_or(cfg.macro_dt));
    } catch (const BlowUp& e) {
      std::cerr << "blow-up: " << e.what() << "; reached tau = " << h.tau << '\n';
      return 4;
    }
    std::ostringstream name;
    name << "snapshot_" << std::setw(4) << std::setfill('0') << s << ".csv";
    write_snapshot(out / name.str(), h);
  }
  std::cout << "tau_reached = " << h.tau << '\n';
  return 0;
}

// ---- simulate -----------------------------------------------------------------

void write_state(const fs::path& file, const LatticeModel& m, const MicroState& s) {
  std::ofstream os(file);
  precise(os);
  os << "M,d,t\n" << m.cells() << ',' << m.dimension() << ',' << s.t << "\nx,v\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) os << s.x[i] << ',' << s.v[i] << '\n';
}

MicroState read_state(const fs::path& file, const LatticeModel& m) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open state file " + file.string());
  std::string line;
  std::getline(is, line);
  std::getline(is, line);
  int cells = 0, d = 0;
  double t = 0.0;
  char comma;
  std::istringstream head(line);
  head >> cells >> comma >> d >> comma >> t;
  if (cells != m.cells() || d != m.dimension()) throw ConfigError("state file does not match the lattice");
  std::getline(is, line);
  MicroState s = MicroState::zero(m);
  s.t = t;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!std::getline(is, line)) throw ConfigError("state file is truncated");
    std::istringstream row(line);
    row >> s.x[i] >> comma >> s.v[i];
  }
  return s;
}

int cmd_simulate(const std::string& config, double eps, const std::string& init, const std::string& state_file,
                 double t_end, std::optional<double> dt, long stride, const fs::path& out, bool force) {
  const ExperimentConfig cfg = load_config(config);
  const int cells = cfg.cells_for(eps);
  const LatticeModel model = cfg.model(cells);
  MicroState s;
  if (init == "ansatz") {
    const PulseSystem sys(model, cfg.make_pulses(model), std::max(cfg.order, 3));
    const HierarchyPlan plan(sys, cfg.order, force);
    const MacroSolver solver(plan, cfg.grid());
    s = initial_state(solver, make_hierarchy(plan, cfg.grid(), cfg.initial_amplitudes()), model, eps);
  } else if (init == "file") {
    s = read_state(state_file, model);
  } else {
    throw ConfigError("--init must be 'ansatz' or 'file'");
  }
  const double step = dt.value_or(cfg.micro_dt_factor / model.mu_plus());
  VerletIntegrator integ(model);
  const long steps = static_cast<long>(std::ceil(t_end / step - 1e-9));
  fs::create_directories(out);
  int snap = 0;
  auto dump = [&] {
    std::ostringstream name;
    name << "state_" << std::setw(5) << std::setfill('0') << snap++ << ".csv";
    write_state(out / name.str(), model, s);
  };
  dump();
  const double e0 = model.energy(s.x, s.v);
  for (long k = 1; k <= steps; ++k) {
    integ.step(s, step);
    if (k % stride == 0 || k == steps) dump();
  }
  precise(std::cout) << "t = " << s.t << "\nenergy_start = " << e0 << "\nenergy_end = " << model.energy(s.x, s.v)
                     << '\n';
  return 0;
}

// ---- resonance ----------------------------------------------------------------

int cmd_resonance(std::optional<double> a1, double b1, std::optional<double> phi, int samples,
                  std::optional<int> cells, double margin, bool all) {
  resonance::Problem prob;
  if (phi)
    prob = resonance::Problem::from_phi(*phi, b1);
  else if (a1)
    prob = {*a1, b1};
  else
    throw ConfigError("give --a1 or --phi");
  const auto res = resonance::search(prob, samples, margin);
  precise(std::cout);
  std::cout << "chi,psi,zeta,theta1,theta2,theta3,omega1,omega2,omega3,min_chi_margin,min_frequency_margin,kept\n";
  auto row = [](const resonance::Triple& t, bool kept) {
    std::cout << t.chi << ',' << t.psi << ',' << t.zeta << ',' << t.theta1 << ',' << t.theta2 << ',' << t.theta3
              << ',' << t.omega1 << ',' << t.omega2 << ',' << t.omega3 << ',' << t.min_margin() << ','
              << *std::min_element(t.frequency_margins.begin(), t.frequency_margins.end()) << ','
              << (kept ? "yes" : "no") << '\n';
  };
  for (const auto& t : res.kept) row(t, true);
  if (all)
    for (const auto& t : res.rejected) row(t, false);
  if (cells) {
    const auto s = resonance::best_snap(prob, res.kept, *cells);
    std::cout << "\nM,k1,k2,k3,detuning\n"
              << s.cells << ',' << s.k1 << ',' << s.k2 << ',' << s.k3 << ',' << s.detuning << '\n';
    const double unit = 2.0 * std::numbers::pi / s.cells;
    if (const auto tuned = resonance::retune(prob.b1, unit * s.k1, unit * s.k2))
      std::cout << "\nretuned_a1 = " << tuned->a1 << "\nretuned_phi = " << tuned->phi() << '\n';
  }
  return 0;
}

// ---- validate -----------------------------------------------------------------

int cmd_validate(const std::string& config, const std::string& sweep, const fs::path& out, bool force) {
  const ExperimentConfig cfg = load_config(config);
  std::vector<SweepReport> reports;
  if (sweep == "residual" || sweep == "both") reports.push_back(run_residual_sweep(cfg, force));
  if (sweep == "error" || sweep == "both") reports.push_back(run_validation(cfg, force));
  write_outputs(out, reports);
  write_summary(std::cout, reports);
  bool ok = true;
  for (const auto& r : reports) ok = ok && r.pass();
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale pulse dynamics on nonlinear lattices"};
  app.require_subcommand(1);

  std::string config;
  std::optional<int> cells;
  bool couplings = false, force = false, all = false;
  int order = 3;
  auto* classify_cmd = app.add_subcommand("classify", "Classify the interaction structure of a pulse set");
  classify_cmd->add_option("--config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  classify_cmd->add_option("--cells", cells, "Lattice cells per axis");
  classify_cmd->add_option("--order", order, "Largest product order")->check(CLI::Range(1, 5));
  classify_cmd->add_flag("--with-couplings", couplings, "Also print coupling coefficients");

  double tau_end = 1.0;
  std::optional<double> dt;
  int snapshots = 10;
  std::string out = "out";
  auto* macro_cmd = app.add_subcommand("macro", "Solve the amplitude equations and dump snapshots");
  macro_cmd->add_option("--config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  macro_cmd->add_option("--tau-end", tau_end, "Final macroscopic time");
  macro_cmd->add_option("--dt", dt, "Macroscopic time step");
  macro_cmd->add_option("--snapshots", snapshots, "Number of snapshots")->check(CLI::PositiveNumber);
  macro_cmd->add_option("--out", out, "Output directory");
  macro_cmd->add_flag("--force", force, "Proceed when the pulse set is not closed");

  double eps = 0.1, t_end = 10.0;
  std::string init = "ansatz", state_file;
  long stride = 100;
  auto* sim_cmd = app.add_subcommand("simulate", "Integrate the lattice equations");
  sim_cmd->add_option("--config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--eps", eps, "Scaling parameter (sets M = macro_period / eps)");
  sim_cmd->add_option("--init", init, "Initial state: ansatz or file");
  sim_cmd->add_option("--state", state_file, "State file for --init file");
  sim_cmd->add_option("--t-end", t_end, "Final time");
  sim_cmd->add_option("--dt", dt, "Time step");
  sim_cmd->add_option("--stride", stride, "Steps between dumps")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", out, "Output directory");
  sim_cmd->add_flag("--force", force, "Proceed when the pulse set is not closed");

  std::optional<double> a1, phi;
  double b1 = 1.0, margin = 1e-4;
  int samples = 100;
  auto* res_cmd = app.add_subcommand("resonance", "Search three-wave resonances of the nearest-neighbour chain");
  res_cmd->add_option("--a1", a1, "Harmonic bond coefficient (negative)");
  res_cmd->add_option("--b1", b1, "Harmonic on-site coefficient");
  res_cmd->add_option("--phi", phi, "b1 / (4 |a1|), alternative to --a1");
  res_cmd->add_option("--samples", samples, "Number of chi samples")->check(CLI::PositiveNumber);
  res_cmd->add_option("--M", cells, "Snap the best triple to the 2 pi / M grid");
  res_cmd->add_option("--margin", margin, "Nonresonance margin threshold");
  res_cmd->add_flag("--all", all, "Also list rejected triples");

  std::string sweep = "both";
  auto* val_cmd = app.add_subcommand("validate", "Run residual and error sweeps over epsilon");
  val_cmd->add_option("--config", config, "Configuration file")->required()->check(CLI::ExistingFile);
  val_cmd->add_option("--sweep", sweep, "residual, error or both")
      ->check(CLI::IsMember({"residual", "error", "both"}));
  val_cmd->add_option("--out", out, "Output directory");
  val_cmd->add_flag("--force", force, "Proceed when the pulse set is not closed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classify_cmd) return cmd_classify(config, cells, couplings, order);
    if (*macro_cmd) return cmd_macro(config, tau_end, dt, snapshots, out, force);
    if (*sim_cmd) return cmd_simulate(config, eps, init, state_file, t_end, dt, stride, out, force);
    if (*res_cmd) return cmd_resonance(a1, b1, phi, samples, cells, margin, all);
    if (*val_cmd) return cmd_validate(config, sweep, out, force);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
