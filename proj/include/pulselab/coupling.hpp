#pragma once

#include <complex>
#include <map>
#include <vector>

#include "pulselab/pulse_algebra.hpp"

namespace pulselab {

// c = sum_alpha a_{n,alpha} prod_i (e^{i theta_i.alpha} - 1) - b_n, n = number of factors.
inline Complex coupling_c(const LatticeModel& model, const std::vector<WaveVector>& thetas) {
  const int n = static_cast<int>(thetas.size());
  if (n < 1 || n > model.max_order()) throw OrderOutOfRange("coupling order exceeds stored Taylor order");
  Complex acc = 0.0;
  for (const auto& bd : model.bonds()) {
    if (static_cast<int>(bd.a.size()) < n || bd.a[n - 1] == 0.0) continue;
    Complex prod = 1.0;
    for (const auto& t : thetas) prod *= std::polar(1.0, dot(t, bd.alpha)) - 1.0;
    acc += bd.a[n - 1] * prod;
  }
  return acc - model.b(n);
}

inline Complex coupling_c(const PulseSystem& sys, const std::vector<int>& rep_ids) {
  std::vector<WaveVector> thetas;
  for (int id : rep_ids) thetas.push_back(sys.rep(id).theta);
  return coupling_c(sys.model(), thetas);
}

// 2 sum_alpha a_{2,alpha} (cos((theta_p+theta_q).alpha) - cos(theta_q.alpha)) alpha
inline RealVec coupling_gamma(const LatticeModel& model, const WaveVector& theta_p,
                              const WaveVector& theta_q) {
  RealVec g{0.0, 0.0, 0.0};
  for (const auto& bd : model.bonds()) {
    if (bd.a.size() < 2) continue;
    const double s = 2.0 * bd.a[1] *
                     (std::cos(dot(theta_p, bd.alpha) + dot(theta_q, bd.alpha)) -
                      std::cos(dot(theta_q, bd.alpha)));
    for (int i = 0; i < kMaxDim; ++i) g[i] += s * bd.alpha[i];
  }
  return g;
}

// eta_{(j,p)} = 2 b_2^2/b_1 + 2|c_{(j,p)}|^2/delta_{(j,p)} + 3 c_{(j,p,-p)} for signed pulses j, p.
inline Complex coupling_eta(const PulseSystem& sys, int j, int p) {
  const LatticeModel& m = sys.model();
  const int jp = sys.find_product({j, p});
  const Aggregate g = sys.aggregate({j, p});
  const double delta = jp >= 0 ? sys.defect(jp) : m.omega_squared(g.theta) - g.omega * g.omega;
  if (std::abs(delta) <= sys.delta_tol())
    throw ResonantDenominator("eta needs a nonresonant pair " + format_indices({j, p}));
  const WaveVector tj = sys.aggregate({j}).theta, tp = sys.aggregate({p}).theta;
  const WaveVector tm = sys.aggregate({-p}).theta;
  const Complex c2 = coupling_c(m, {tj, tp});
  const Complex c3 = m.max_order() >= 3 ? coupling_c(m, {tj, tp, tm}) : -m.b(3);
  const double b1 = m.b(1), b2 = m.b(2);
  return 2.0 * b2 * b2 / b1 + 2.0 * std::norm(c2) / delta + 3.0 * c3;
}

// Cache of coupling coefficients over representant tuples of one pulse system.
class CouplingTable {
 public:
  explicit CouplingTable(const PulseSystem& sys) : sys_(&sys) {}

  Complex c(std::vector<int> rep_ids) const {
    std::sort(rep_ids.begin(), rep_ids.end());
    auto it = cache_.find(rep_ids);
    if (it != cache_.end()) return it->second;
    const Complex v = coupling_c(*sys_, rep_ids);
    cache_.emplace(rep_ids, v);
    return v;
  }

  RealVec gamma(int p, int q) const {
    return coupling_gamma(sys_->model(), sys_->aggregate({p}).theta, sys_->aggregate({q}).theta);
  }

  Complex eta(int j, int p) const { return coupling_eta(*sys_, j, p); }

  const PulseSystem& system() const { return *sys_; }

  struct Row {
    std::vector<int> reps;
    Complex value;
  };

  // Coefficients for every unordered pair and triple of pulses (both signs).
  std::vector<Row> pulse_rows() const {
    std::vector<Row> rows;
    const int order = std::min(3, sys_->model().max_order());
    for (int len = 2; len <= order; ++len) {
      sys_->for_each_multiset(len, [&](const std::vector<int>& v) {
        std::vector<int> ids;
        for (int j : v) ids.push_back(sys_->pulse_id(j));
        rows.push_back({v, c(ids)});
      });
    }
    return rows;
  }

 private:
  const PulseSystem* sys_;
  mutable std::map<std::vector<int>, Complex> cache_;
};

}  // namespace pulselab
