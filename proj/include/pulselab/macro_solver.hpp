#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pulselab/coupling.hpp"
#include "pulselab/series.hpp"

namespace pulselab {

// Quadratic term c A_{1,p} A_{1,q}; p, q are representant ids of pulses.
struct PairTerm {
  int p = -1, q = -1;
  Complex c = 0.0;
};

// c_{(p,mu)} A_{1,p} A_{2,mu} with mu in T_2 (pulse or generated).
struct MixedTerm {
  int p = -1, mu = -1;
  Complex c = 0.0;
};

struct TripleTerm {
  int p = -1, q = -1, r = -1;
  Complex c = 0.0;
};

// A_{1,p} (g . grad) A_{1,q}, g = 2 sum_alpha a_{2,alpha}(e^{i theta_p.alpha}-1) e^{i theta_q.alpha} alpha
struct GradientTerm {
  int p = -1, q = -1;
  Vec3c g{0.0, 0.0, 0.0};
};

// Everything the amplitude equations need about one representant J.
struct RepEquations {
  int id = -1;
  double omega = 0.0;
  double delta = 0.0;
  RealVec w{0.0, 0.0, 0.0};  // sum_alpha a_{1,alpha} sin(theta_J.alpha) alpha = 2 Omega grad Omega
  Mat3c hessian{};           // (1/2) sum_alpha a_{1,alpha} e^{i theta_J.alpha} alpha alpha^T
  std::vector<PairTerm> pairs;
  std::vector<MixedTerm> mixed;
  std::vector<TripleTerm> triples;
  std::vector<GradientTerm> gradients;
};

class HierarchyPlan {
 public:
  // allow_unclosed keeps going when generated representants are resonant;
  // their algebraic fields are then dropped and listed in skipped().
  HierarchyPlan(const PulseSystem& sys, int order, bool allow_unclosed = false)
      : sys_(&sys), order_(order) {
    if (order < 1 || order > 3) throw OrderOutOfRange("hierarchy order must be 1, 2 or 3");
    if (sys.max_order() < order) throw OrderOutOfRange("pulse table shallower than hierarchy order");
    if (order >= 2) {
      const auto bad = sys.violations(order);
      if (!bad.empty() && !allow_unclosed) {
        std::string msg = "pulse system is not closed up to order " + std::to_string(order) + ":";
        for (int id : bad) msg += " " + format_indices(sys.rep(id).indices);
        throw NotClosed(msg);
      }
      skipped_ = bad;
    }
    const LatticeModel& m = sys.model();
    for (int j = 1; j <= sys.size(); ++j) pulses_.push_back(sys.pulse_id(j));
    for (const auto& r : sys.representants()) {
      if (r.order > order) continue;
      eqs_.push_back(build(r, m));
    }
    for (const auto& r : sys.representants()) {
      if (r.is_pulse() || !r.stored || r.order > order || is_skipped(r.id)) continue;
      if (r.order <= 2 && order >= 2) generated2_.push_back(r.id);
      if (order >= 3) generated3_.push_back(r.id);
    }
  }

  const PulseSystem& system() const { return *sys_; }
  int order() const { return order_; }
  const std::vector<int>& pulses() const { return pulses_; }           // ids of pulses 1..nu
  const std::vector<int>& generated2() const { return generated2_; }   // stored T_2 \ N
  const std::vector<int>& generated3() const { return generated3_; }   // stored T_3 \ N
  const std::vector<int>& skipped() const { return skipped_; }
  const RepEquations& eq(int id) const { return eqs_.at(id); }
  std::size_t rep_count() const { return eqs_.size(); }

 private:
  bool is_skipped(int id) const {
    return std::find(skipped_.begin(), skipped_.end(), id) != skipped_.end();
  }

  RepEquations build(const Representant& r, const LatticeModel& m) const {
    const PulseSystem& sys = *sys_;
    RepEquations e;
    e.id = r.id;
    e.omega = r.omega;
    e.delta = r.defect;
    e.w = m.omega_squared_gradient(r.theta);
    for (const auto& bd : m.bonds()) {
      if (bd.a.empty()) continue;
      const Complex k = 0.5 * bd.a[0] * std::polar(1.0, dot(r.theta, bd.alpha));
      for (int i = 0; i < kMaxDim; ++i)
        for (int j = 0; j < kMaxDim; ++j) e.hessian[i][j] += k * double(bd.alpha[i] * bd.alpha[j]);
    }
    const int nu = sys.size();
    const Aggregate target{r.theta, r.omega};
    auto minus = [](Aggregate g, const Aggregate& h) {
      for (int i = 0; i < kMaxDim; ++i) g.theta[i] -= h.theta[i];
      g.omega -= h.omega;
      g.theta = wrap(g.theta);
      return g;
    };
    const bool cubic = m.max_order() >= 3;
    for (int p = -nu; p <= nu; ++p) {
      if (p == 0) continue;
      const int pid = sys.pulse_id(p);
      const Aggregate gp = sys.aggregate({p});
      const Aggregate rest = minus(target, gp);
      const int mu = sys.find(rest);
      if (mu >= 0 && sys.rep(mu).order <= 2) {
        const Complex c = coupling_c(m, {gp.theta, sys.rep(mu).theta});
        if (sys.rep(mu).is_pulse()) {
          e.pairs.push_back({pid, mu, c});
          GradientTerm g;
          g.p = pid;
          g.q = mu;
          for (const auto& bd : m.bonds()) {
            if (bd.a.size() < 2 || bd.a[1] == 0.0) continue;
            const Complex k = 2.0 * bd.a[1] * (std::polar(1.0, dot(gp.theta, bd.alpha)) - 1.0) *
                              std::polar(1.0, dot(sys.rep(mu).theta, bd.alpha));
            for (int i = 0; i < kMaxDim; ++i) g.g[i] += k * double(bd.alpha[i]);
          }
          e.gradients.push_back(g);
        }
        e.mixed.push_back({pid, mu, c});
      }
      if (!cubic) continue;
      for (int q = -nu; q <= nu; ++q) {
        if (q == 0) continue;
        const Aggregate gq = sys.aggregate({q});
        const int rid = sys.find(minus(rest, gq));
        if (rid < 0 || !sys.rep(rid).is_pulse()) continue;
        const Complex c = coupling_c(m, {gp.theta, gq.theta, sys.rep(rid).theta});
        e.triples.push_back({pid, sys.pulse_id(q), rid, c});
      }
    }
    return e;
  }

  const PulseSystem* sys_;
  int order_;
  std::vector<int> pulses_, generated2_, generated3_, skipped_;
  std::vector<RepEquations> eqs_;
};

// Fields indexed by representant id; unset entries are zero.
using Lookup = std::vector<Series>;

// Evaluates the amplitude equations. All routines accept truncated Taylor
// series, so feeding a jet of A_1 returns exact tau-derivatives.
class HierarchyEvaluator {
 public:
  HierarchyEvaluator(const HierarchyPlan& plan, const MacroGrid& grid)
      : plan_(&plan), ops_(grid), n_(grid.size()) {}

  const HierarchyPlan& plan() const { return *plan_; }
  const SpectralOps& ops() const { return ops_; }
  std::size_t points() const { return n_; }

  // Lookup with the given values on pulses 1..nu and conjugates on -1..-nu.
  Lookup pulse_lookup(const std::vector<Series>& values) const {
    Lookup l(plan_->rep_count());
    const auto& sys = plan_->system();
    for (int j = 1; j <= sys.size(); ++j) {
      l[sys.pulse_id(j)] = values[j - 1];
      l[sys.pulse_id(-j)] = series_ops::conj(values[j - 1]);
    }
    return l;
  }

  Lookup pulse_lookup(const std::vector<Field>& values) const {
    std::vector<Series> s;
    for (const auto& f : values) s.emplace_back(f);
    return pulse_lookup(s);
  }

  // Right-hand side of the first-order transport system for pulse id.
  Series first_order_rhs(int id, const Lookup& a1) const {
    const RepEquations& e = plan_->eq(id);
    RealVec v = e.w;
    for (double& x : v) x /= 2.0 * e.omega;
    Series out = directional(a1[id], v);
    const Complex k = 1.0 / (Complex(0.0, 2.0) * e.omega);
    for (const auto& t : e.pairs) series_ops::axpy(out, k * t.c, series_ops::mul(a1[t.p], a1[t.q]));
    return out;
  }

  // Taylor jet of the first-order amplitudes up to the given degree.
  Lookup first_order_jet(const std::vector<Field>& a1, int degree) const {
    Lookup l = pulse_lookup(a1);
    const auto& pulses = plan_->pulses();
    for (int m = 0; m < degree; ++m) {
      std::vector<Field> next;
      for (int id : pulses) {
        Series r = first_order_rhs(id, l);
        Field f = r.zero() ? Field(n_, 0.0) : r.c[m];
        for (auto& x : f) x /= static_cast<double>(m + 1);
        next.push_back(std::move(f));
      }
      extend(l, next);
    }
    return l;
  }

  // A_{2,J} for J in T_2 \ N, written into a copy of `level2`.
  Lookup second_order_fields(const Lookup& a1, Lookup level2 = {}) const {
    if (level2.empty()) level2.resize(plan_->rep_count());
    const auto& sys = plan_->system();
    for (int id : plan_->generated2()) {
      const RepEquations& e = plan_->eq(id);
      Series s;
      for (const auto& t : e.pairs) series_ops::axpy(s, t.c / e.delta, series_ops::mul(a1[t.p], a1[t.q]));
      if (sys.rep(id).self_conjugate) s = realify(s);
      level2[id] = s;
      level2[sys.rep(id).negation] = series_ops::conj(s);
    }
    return level2;
  }

  // S_{1,J}: second-derivative, gradient and cubic sources built from A_1.
  Series source(int id, const Lookup& a1) const {
    const RepEquations& e = plan_->eq(id);
    Series out;
    if (plan_->system().rep(id).is_pulse())
      out = series_ops::map(a1[id], [&](const Field& f) { return ops_.hessian_contract(f, e.hessian); });
    for (const auto& g : e.gradients)
      series_ops::axpy(out, 1.0, series_ops::mul(a1[g.p], directional(a1[g.q], g.g)));
    for (const auto& t : e.triples)
      series_ops::axpy(out, t.c, series_ops::mul(a1[t.p], a1[t.q], a1[t.r]));
    return out;
  }

  // Right-hand side of the second-order transport system for pulse id. The
  // level-2 lookup must hold both transported and algebraic fields, and a1
  // must be a jet two degrees deeper than the requested output.
  Series second_order_rhs(int id, const Lookup& a1, const Lookup& a2) const {
    const RepEquations& e = plan_->eq(id);
    RealVec v = e.w;
    for (double& x : v) x /= 2.0 * e.omega;
    Series out = directional(a2[id], v);
    Series inner = source(id, a1);
    for (const auto& t : e.mixed) series_ops::axpy(inner, 2.0 * t.c, series_ops::mul(a1[t.p], a2[t.mu]));
    series_ops::axpy(inner, -1.0, a1[id].dtau().dtau());
    series_ops::axpy(out, 1.0 / (Complex(0.0, 2.0) * e.omega), inner);
    return out;
  }

  // Level-2 lookup (transported + algebraic) as a jet of the given degree.
  // a1 must be a jet of degree >= degree + 1.
  Lookup second_order_jet(const Lookup& a1, const std::vector<Field>& a2, int degree) const {
    Lookup l = second_order_fields(a1, pulse_lookup(a2));
    const auto& pulses = plan_->pulses();
    for (int m = 0; m < degree; ++m) {
      std::vector<Field> next;
      for (int id : pulses) {
        Series r = second_order_rhs(id, a1, l);
        Field f = r.zero() || r.degree() < m ? Field(n_, 0.0) : r.c[m];
        for (auto& x : f) x /= static_cast<double>(m + 1);
        next.push_back(std::move(f));
      }
      extend(l, next);
    }
    return l;
  }

  // A_{3,J} for J in T_3 \ N.
  Lookup third_order_fields(const Lookup& a1, const Lookup& a2) const {
    Lookup out(plan_->rep_count());
    const auto& sys = plan_->system();
    for (int id : plan_->generated3()) {
      const RepEquations& e = plan_->eq(id);
      Series s = source(id, a1);
      for (const auto& t : e.mixed) series_ops::axpy(s, 2.0 * t.c, series_ops::mul(a1[t.p], a2[t.mu]));
      if (!a2[id].zero()) {
        series_ops::axpy(s, Complex(0.0, -2.0 * e.omega), a2[id].dtau());
        series_ops::axpy(s, Complex(0.0, 1.0), directional(a2[id], e.w));
      }
      s = series_ops::scale(s, 1.0 / e.delta);
      if (sys.rep(id).self_conjugate) s = realify(s);
      out[id] = s;
      out[sys.rep(id).negation] = series_ops::conj(s);
    }
    return out;
  }

  // Combined time derivative of the evolved amplitudes (A_1 and, for order 3, A_2).
  void evolution_rhs(const std::vector<Field>& a1, const std::vector<Field>& a2,
                     std::vector<Field>& d1, std::vector<Field>& d2) const {
    const auto& pulses = plan_->pulses();
    const bool second = plan_->order() >= 3;
    Lookup jet = first_order_jet(a1, second ? 2 : 1);
    d1.clear();
    for (std::size_t j = 0; j < pulses.size(); ++j) d1.push_back(jet[pulses[j]].derivative(1, n_));
    d2.clear();
    if (!second) return;
    Lookup l2 = second_order_fields(jet, pulse_lookup(a2));
    for (int id : pulses) {
      Series r = second_order_rhs(id, jet, l2);
      d2.push_back(r.zero() ? Field(n_, 0.0) : r.c[0]);
    }
  }

 private:
  Series directional(const Series& s, const RealVec& v) const {
    return series_ops::map(s, [&](const Field& f) { return ops_.directional(f, v); });
  }
  Series directional(const Series& s, const Vec3c& v) const {
    return series_ops::map(s, [&](const Field& f) { return ops_.directional(f, v); });
  }

  static Series realify(Series s) {
    for (auto& f : s.c)
      for (auto& v : f) v = v.real();
    return s;
  }

  void extend(Lookup& l, const std::vector<Field>& next) const {
    const auto& sys = plan_->system();
    for (int j = 1; j <= sys.size(); ++j) {
      auto& pos = l[sys.pulse_id(j)];
      if (pos.zero()) pos.c.push_back(Field(n_, 0.0));
      pos.c.push_back(next[j - 1]);
      Field cj = next[j - 1];
      for (auto& v : cj) v = std::conj(v);
      auto& neg = l[sys.pulse_id(-j)];
      if (neg.zero()) neg.c.push_back(Field(n_, 0.0));
      neg.c.push_back(std::move(cj));
    }
  }

  const HierarchyPlan* plan_;
  SpectralOps ops_;
  std::size_t n_;
};

// Evolved amplitudes at macroscopic time tau. Algebraic fields are derived on
// demand; conjugate representants are never stored.
struct AmplitudeHierarchy {
  MacroGrid grid;
  int order = 2;
  double tau = 0.0;
  std::vector<Field> first;   // A_{1,j}, j = 1..nu
  std::vector<Field> second;  // A_{2,j}; evolved only for order 3, zero otherwise
  double reference_sup = 0.0;
};

struct Profile {
  std::string shape = "gaussian";  // gaussian | sech | bump | constant | zero
  double amplitude = 1.0;
  double phase = 0.0;
  RealVec center{0.0, 0.0, 0.0};
  double width = 1.0;
};

inline Field sample_profile(const MacroGrid& grid, const Profile& p) {
  Field f(grid.size(), 0.0);
  if (p.shape == "zero") return f;
  if (p.shape == "constant") return Field(grid.size(), std::polar(p.amplitude, p.phase));
  if (!(p.width > 0.0)) throw ConfigError("profile width must be positive");
  const Complex amp = std::polar(p.amplitude, p.phase);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const RealVec y = grid.node(i);
    double r2 = 0.0;
    for (int k = 0; k < grid.dimension; ++k) {
      double d = y[k] - p.center[k];
      d -= grid.period * std::round(d / grid.period);  // periodic distance
      r2 += d * d;
    }
    const double r = std::sqrt(r2) / p.width;
    double v = 0.0;
    if (p.shape == "gaussian") {
      v = std::exp(-r * r);
    } else if (p.shape == "sech") {
      v = 1.0 / std::cosh(r);
    } else if (p.shape == "bump") {
      v = r < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
    } else {
      throw ConfigError("unknown profile shape '" + p.shape + "'");
    }
    f[i] = amp * v;
  }
  return f;
}

inline AmplitudeHierarchy make_hierarchy(const HierarchyPlan& plan, const MacroGrid& grid,
                                         const std::vector<Field>& first) {
  if (static_cast<int>(first.size()) != plan.system().size())
    throw ConfigError("one initial amplitude per pulse is required");
  AmplitudeHierarchy h;
  h.grid = grid;
  h.order = plan.order();
  h.first = first;
  h.second.assign(first.size(), Field(grid.size(), 0.0));
  for (const auto& f : first) {
    if (f.size() != grid.size()) throw ConfigError("initial amplitude does not match the macro grid");
    h.reference_sup = std::max(h.reference_sup, SpectralOps::sup(f));
  }
  return h;
}

class MacroSolver {
 public:
  static constexpr double kDefaultBlowUpFactor = 1e6;

  MacroSolver(const HierarchyPlan& plan, const MacroGrid& grid)
      : eval_(plan, grid) {}

  const HierarchyEvaluator& evaluator() const { return eval_; }
  double blow_up_factor = kDefaultBlowUpFactor;

  // One classical RK4 step of the evolved amplitudes.
  void step(AmplitudeHierarchy& h, double dt) const {
    const bool second = h.order >= 3;
    std::vector<Field> k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    eval_.evolution_rhs(h.first, h.second, k1a, k1b);
    eval_.evolution_rhs(shift(h.first, k1a, dt / 2), shift_opt(h.second, k1b, dt / 2, second), k2a, k2b);
    eval_.evolution_rhs(shift(h.first, k2a, dt / 2), shift_opt(h.second, k2b, dt / 2, second), k3a, k3b);
    eval_.evolution_rhs(shift(h.first, k3a, dt), shift_opt(h.second, k3b, dt, second), k4a, k4b);
    combine(h.first, k1a, k2a, k3a, k4a, dt);
    if (second) combine(h.second, k1b, k2b, k3b, k4b, dt);
    h.tau += dt;
  }

  // Advances to tau_end with uniform steps no larger than dt. Throws BlowUp
  // when a field exceeds blow_up_factor times the reference sup-norm.
  void evolve(AmplitudeHierarchy& h, double tau_end, double dt) const {
    if (!(dt > 0.0)) throw ConfigError("macro time step must be positive");
    const double span = tau_end - h.tau;
    if (span <= 0.0) return;
    const int steps = static_cast<int>(std::ceil(span / dt - 1e-9));
    const double h_dt = span / steps;
    const double start = h.tau;
    for (int s = 0; s < steps; ++s) {
      step(h, h_dt);
      h.tau = start + (s + 1) * h_dt;
      guard(h);
    }
    h.tau = tau_end;
  }

  // All fields of the hierarchy at its current time as jets of the given
  // degree: levels[k][id] holds A_{k,J} for representant id.
  std::array<Lookup, 4> jets(const AmplitudeHierarchy& h, int degree) const {
    std::array<Lookup, 4> levels;
    const auto& plan = eval_.plan();
    const int order = plan.order();
    levels[1] = eval_.first_order_jet(h.first, degree + (order >= 3 ? 1 : 0));
    if (order >= 2) {
      if (order >= 3) {
        levels[2] = eval_.second_order_jet(levels[1], h.second, degree);
        levels[3] = eval_.third_order_fields(levels[1], levels[2]);
      } else {
        levels[2] = eval_.second_order_fields(levels[1]);
      }
    }
    return levels;
  }

 private:
  void guard(const AmplitudeHierarchy& h) const {
    double sup = 0.0;
    bool finite = true;
    for (const auto* level : {&h.first, &h.second})
      for (const auto& f : *level) {
        const double m = SpectralOps::sup(f);
        finite = finite && std::isfinite(m);
        sup = std::max(sup, m);
      }
    if (!finite || (h.reference_sup > 0.0 && sup > blow_up_factor * h.reference_sup))
      throw BlowUp("macro amplitudes blew up at tau = " + std::to_string(h.tau));
  }

  static std::vector<Field> shift(const std::vector<Field>& a, const std::vector<Field>& k, double s) {
    std::vector<Field> out = a;
    for (std::size_t j = 0; j < out.size(); ++j)
      for (std::size_t i = 0; i < out[j].size(); ++i) out[j][i] += s * k[j][i];
    return out;
  }

  static std::vector<Field> shift_opt(const std::vector<Field>& a, const std::vector<Field>& k, double s,
                                      bool use) {
    return use ? shift(a, k, s) : a;
  }

  static void combine(std::vector<Field>& a, const std::vector<Field>& k1, const std::vector<Field>& k2,
                      const std::vector<Field>& k3, const std::vector<Field>& k4, double dt) {
    for (std::size_t j = 0; j < a.size(); ++j)
      for (std::size_t i = 0; i < a[j].size(); ++i)
        a[j][i] += dt / 6.0 * (k1[j][i] + 2.0 * k2[j][i] + 2.0 * k3[j][i] + k4[j][i]);
  }

  HierarchyEvaluator eval_;
};

}  // namespace pulselab
