#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pulselab/lattice_model.hpp"

namespace pulselab {

struct Pulse {
  WaveVector theta{0.0, 0.0, 0.0};
  double omega = 0.0;
};

// Aggregate (theta, omega) of a product of pulses.
struct Aggregate {
  WaveVector theta{0.0, 0.0, 0.0};
  double omega = 0.0;
};

struct Representant {
  std::vector<int> indices;  // canonical index vector
  WaveVector theta{0.0, 0.0, 0.0};
  double omega = 0.0;
  int order = 0;
  int id = -1;        // position in the system's table, -1 if outside it
  int negation = -1;  // id of the conjugate representant
  int pulse = 0;      // signed pulse index when the representant is a pulse, else 0
  bool stored = false;
  bool self_conjugate = false;
  double defect = 0.0;
  unsigned product_lengths = 0;  // bit k set if a product of exactly k pulses lands here
  std::vector<std::vector<int>> alternatives;  // other cancellation-free index vectors

  bool is_pulse() const { return pulse != 0; }
};

inline std::string format_indices(const std::vector<int>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ')';
  return os.str();
}

// Sort key for signed pulse indices: 1, -1, 2, -2, ...
inline int index_key(int j) { return 2 * std::abs(j) - (j > 0 ? 1 : 0); }
inline int key_index(int k) { return (k % 2 == 1) ? (k + 1) / 2 : -(k / 2); }

inline void canonical_sort(std::vector<int>& v) {
  std::sort(v.begin(), v.end(), [](int a, int b) { return index_key(a) < index_key(b); });
}

inline bool cancellation_free(const std::vector<int>& v) {
  for (int a : v)
    for (int b : v)
      if (a == -b) return false;
  return true;
}

class PulseSystem {
 public:
  static constexpr double kAggregateTolerance = 1e-12;

  PulseSystem(const LatticeModel& model, std::vector<Pulse> pulses, int max_order = 3,
              std::optional<double> delta_tol = std::nullopt)
      : model_(&model), pulses_(std::move(pulses)), max_order_(max_order) {
    if (pulses_.empty()) throw InvalidPulse("pulse system needs at least one pulse");
    if (max_order_ < 1) throw OrderOutOfRange("table order must be >= 1");
    double wmax = 0.0;
    for (const auto& p : pulses_) wmax = std::max(wmax, std::abs(p.omega));
    delta_tol_ = delta_tol.value_or(1e-8 * std::max(1.0, wmax * wmax));
    for (auto& p : pulses_) {
      p.theta = wrap(p.theta);
      for (int i = model.dimension(); i < kMaxDim; ++i) p.theta[i] = 0.0;
      if (p.omega == 0.0) throw InvalidPulse("pulse frequency must be nonzero");
      const double d = model.omega_squared(p.theta) - p.omega * p.omega;
      if (std::abs(d) > delta_tol_) throw InvalidPulse("pulse violates the dispersion relation");
    }
    for (std::size_t i = 0; i < pulses_.size(); ++i) {
      for (std::size_t j = 0; j < pulses_.size(); ++j) {
        if (i == j) continue;
        const int a = static_cast<int>(i) + 1, b = static_cast<int>(j) + 1;
        if (same(aggregate({a}), aggregate({b})) || same(aggregate({a}), aggregate({-b})))
          throw InvalidPulse("pulses must be pairwise distinct and distinct from negations");
      }
    }
    build_table();
  }

  const LatticeModel& model() const { return *model_; }
  int size() const { return static_cast<int>(pulses_.size()); }
  int max_order() const { return max_order_; }
  double delta_tol() const { return delta_tol_; }
  const std::vector<Pulse>& pulses() const { return pulses_; }
  const std::vector<Representant>& representants() const { return reps_; }
  const Representant& rep(int id) const { return reps_.at(id); }

  Aggregate aggregate(const std::vector<int>& indices) const {
    Aggregate g;
    for (int j : indices) {
      check_index(j);
      const auto& p = pulses_[std::abs(j) - 1];
      const double s = j > 0 ? 1.0 : -1.0;
      for (int i = 0; i < kMaxDim; ++i) g.theta[i] += s * p.theta[i];
      g.omega += s * p.omega;
    }
    g.theta = wrap(g.theta);
    return g;
  }

  bool same(const Aggregate& a, const Aggregate& b) const {
    for (int i = 0; i < kMaxDim; ++i)
      if (std::abs(wrap_angle(a.theta[i] - b.theta[i])) > kAggregateTolerance) return false;
    return std::abs(a.omega - b.omega) <= kAggregateTolerance * std::max(1.0, std::abs(a.omega));
  }

  // Table id for an aggregate, or -1.
  int find(const Aggregate& g) const {
    for (const auto& r : reps_)
      if (same(g, Aggregate{r.theta, r.omega})) return r.id;
    return -1;
  }

  int find_product(const std::vector<int>& indices) const { return find(aggregate(indices)); }

  // Id of the representant of the signed pulse j.
  int pulse_id(int j) const {
    check_index(j);
    return pulse_ids_[index_key(j) - 1];
  }

  Representant canonicalize(const std::vector<int>& indices) const {
    const Aggregate g = aggregate(indices);
    const int id = find(g);
    if (id >= 0) return reps_[id];
    // Beyond the table: search longer products for the minimal equivalent.
    const int longest = std::max<int>(static_cast<int>(indices.size()), 1);
    for (int len = max_order_ + 1; len <= longest; ++len) {
      std::optional<std::vector<int>> hit;
      for_each_multiset(len, [&](const std::vector<int>& v) {
        if (!hit && same(aggregate(v), g)) hit = v;
      });
      if (hit) {
        Representant r;
        r.indices = *hit;
        r.theta = g.theta;
        r.omega = g.omega;
        r.order = len;
        r.defect = model_->omega_squared(g.theta) - g.omega * g.omega;
        r.stored = (*hit)[0] > 0;
        return r;
      }
    }
    throw InvalidPulse("no index vector reproduces the aggregate");
  }

  // T_k: ids of all representants of products of at most k pulses.
  std::vector<int> table(int k) const {
    check_order(k);
    std::vector<int> out;
    for (const auto& r : reps_)
      if (r.order <= k) out.push_back(r.id);
    return out;
  }

  // Representants reached by products of exactly k pulses.
  std::vector<int> products(int k) const {
    check_order(k);
    std::vector<int> out;
    for (const auto& r : reps_)
      if (r.product_lengths & (1u << k)) out.push_back(r.id);
    return out;
  }

  // T_k without the pulses, one entry per conjugate pair.
  std::vector<int> stored_generated(int k) const {
    std::vector<int> out;
    for (int id : table(k))
      if (!reps_[id].is_pulse() && reps_[id].stored) out.push_back(id);
    return out;
  }

  double defect(int id) const { return reps_.at(id).defect; }

  bool resonant(int id) const { return std::abs(reps_.at(id).defect) <= delta_tol_; }

  // Generated representants (outside N) in T_k with vanishing defect.
  std::vector<int> violations(int k) const {
    std::vector<int> out;
    for (int id : table(k))
      if (!reps_[id].is_pulse() && resonant(id)) out.push_back(id);
    return out;
  }

  // Largest k <= table order such that the system is closed up to order k.
  int closedness_order() const {
    int k = 1;
    while (k + 1 <= max_order_ && violations(k + 1).empty()) ++k;
    return k;
  }

  // min |delta| over generated representants of T_k.
  double margin(int k) const {
    double m = std::numeric_limits<double>::infinity();
    for (int id : table(k))
      if (!reps_[id].is_pulse()) m = std::min(m, std::abs(reps_[id].defect));
    return m;
  }

  double max_abs_omega() const {
    double w = 0.0;
    for (const auto& p : pulses_) w = std::max(w, std::abs(p.omega));
    return w;
  }

  template <class F>
  void for_each_multiset(int len, F&& f) const {
    const int keys = 2 * size();
    std::vector<int> k(len, 1), v(len);
    while (true) {
      for (int i = 0; i < len; ++i) v[i] = key_index(k[i]);
      f(v);
      int pos = len - 1;
      while (pos >= 0 && k[pos] == keys) --pos;
      if (pos < 0) break;
      ++k[pos];
      for (int i = pos + 1; i < len; ++i) k[i] = k[pos];
    }
  }

 private:
  void check_index(int j) const {
    if (j == 0 || std::abs(j) > size()) throw InvalidPulse("pulse index out of range");
  }

  void check_order(int k) const {
    if (k < 1 || k > max_order_) throw OrderOutOfRange("representant order outside the table");
  }

  void build_table() {
    for (int len = 1; len <= max_order_; ++len) {
      for_each_multiset(len, [&](const std::vector<int>& v) {
        const Aggregate g = aggregate(v);
        int id = find(g);
        if (id < 0) {
          Representant r;
          r.indices = v;
          r.theta = g.theta;
          r.omega = g.omega;
          r.order = len;
          r.id = static_cast<int>(reps_.size());
          r.defect = model_->omega_squared(g.theta) - g.omega * g.omega;
          reps_.push_back(r);
          id = r.id;
        } else if (cancellation_free(v) && v != reps_[id].indices) {
          reps_[id].alternatives.push_back(v);
        }
        reps_[id].product_lengths |= 1u << len;
      });
    }
    pulse_ids_.assign(2 * size(), -1);
    for (auto& r : reps_) {
      const Aggregate neg{wrap(WaveVector{-r.theta[0], -r.theta[1], -r.theta[2]}), -r.omega};
      r.negation = find(neg);
      r.self_conjugate = r.negation == r.id;
      r.stored = r.self_conjugate || r.indices.front() > 0;
      if (r.order == 1) {
        r.pulse = r.indices.front();
        pulse_ids_[index_key(r.pulse) - 1] = r.id;
      }
    }
  }

  const LatticeModel* model_;
  std::vector<Pulse> pulses_;
  int max_order_;
  double delta_tol_ = 0.0;
  std::vector<Representant> reps_;
  std::vector<int> pulse_ids_;
};

// A resonance among pulses: signed indices whose aggregate vanishes, e.g.
// {1,2,-3} for a three-wave triple or {1,1,-2} for a self-interaction.
struct Relation {
  std::vector<int> terms;
  bool self_interaction = false;
};

struct ClassificationReport {
  int case_number = 0;
  std::string case_name;
  int closedness_order = 1;
  std::vector<int> violations;  // generated pulses outside the set
  double margin = 0.0;
  std::vector<Relation> relations;
  std::vector<int> merges;  // generated representants reached by several index vectors
};

inline std::vector<Relation> order_two_relations(const PulseSystem& sys) {
  std::vector<Relation> out;
  const int nu = sys.size();
  auto normalize = [](std::vector<int> v) {
    canonical_sort(v);
    std::vector<int> w;
    for (int j : v) w.push_back(-j);
    canonical_sort(w);
    auto key = [](const std::vector<int>& a) {
      std::vector<int> k;
      for (int j : a) k.push_back(index_key(j));
      return k;
    };
    return key(w) < key(v) ? w : v;
  };
  for (int p = -nu; p <= nu; ++p) {
    for (int q = -nu; q <= nu; ++q) {
      if (p == 0 || q == 0 || p == -q) continue;
      const int id = sys.find_product({p, q});
      if (id < 0 || !sys.rep(id).is_pulse()) continue;
      std::vector<int> terms = normalize({p, q, -sys.rep(id).pulse});
      if (std::any_of(out.begin(), out.end(), [&](const Relation& r) { return r.terms == terms; }))
        continue;
      Relation rel;
      rel.terms = terms;
      rel.self_interaction = terms[0] == terms[1] || terms[1] == terms[2] || terms[0] == terms[2];
      out.push_back(rel);
    }
  }
  return out;
}

inline ClassificationReport classify(const PulseSystem& sys, int k_max) {
  ClassificationReport rep;
  k_max = std::min(k_max, sys.max_order());
  rep.closedness_order = 1;
  while (rep.closedness_order + 1 <= k_max && sys.violations(rep.closedness_order + 1).empty())
    ++rep.closedness_order;
  rep.violations = sys.violations(k_max);
  rep.margin = std::numeric_limits<double>::infinity();
  for (int id : sys.table(k_max))
    if (!sys.rep(id).is_pulse() && !sys.resonant(id))
      rep.margin = std::min(rep.margin, std::abs(sys.defect(id)));
  rep.relations = order_two_relations(sys);
  for (int id : sys.table(k_max)) {
    const auto& r = sys.rep(id);
    if (r.is_pulse() || !r.stored || (r.self_conjugate && r.omega == 0.0)) continue;
    // Alternatives of other lengths follow from resonance relations; only
    // equal-length coincidences merge distinct products.
    const bool merged = std::any_of(r.alternatives.begin(), r.alternatives.end(),
                                    [&](const auto& v) { return v.size() == r.indices.size(); });
    if (merged) rep.merges.push_back(id);
  }
  int self = 0, waves = 0;
  for (const auto& r : rep.relations) (r.self_interaction ? self : waves)++;
  if (sys.size() > 3) {
    rep.case_number = 0;
    rep.case_name = "general";
  } else if (self == 0 && waves == 0) {
    rep.case_number = 1;
    rep.case_name = "no interactions";
  } else if (self == 0 && waves == 1) {
    rep.case_number = 2;
    rep.case_name = "three-wave-interaction";
  } else if (self == 1 && waves == 0) {
    rep.case_number = 3;
    rep.case_name = "one self-interaction";
  } else if (self == 2 && waves == 0) {
    rep.case_number = 4;
    rep.case_name = "two self-interactions";
  } else if (self == 1 && waves == 1) {
    rep.case_number = 5;
    rep.case_name = "self-interaction and three-wave-interaction";
  } else {
    rep.case_number = 0;
    rep.case_name = "general";
  }
  return rep;
}

}  // namespace pulselab
