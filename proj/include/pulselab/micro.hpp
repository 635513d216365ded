#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pulselab/lattice_model.hpp"

namespace pulselab {

struct MicroState {
  std::vector<double> x;
  std::vector<double> v;
  double t = 0.0;

  static MicroState zero(const LatticeModel& m) {
    return {std::vector<double>(m.sites(), 0.0), std::vector<double>(m.sites(), 0.0), 0.0};
  }
};

struct NormSuite {
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  static NormSuite of(const LatticeModel& m) { return {m.mu_minus(), m.mu_plus()}; }
};

inline double l2_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double linf_norm(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

inline double energy_norm(const LatticeModel& m, const std::vector<double>& x) {
  return std::sqrt(std::max(m.energy_norm_squared(x), 0.0));
}

inline double y_norm(const LatticeModel& m, const std::vector<double>& x, const std::vector<double>& v) {
  const double l2 = l2_norm(v);
  return std::sqrt(std::max(m.energy_norm_squared(x), 0.0) + l2 * l2);
}

inline std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

// Velocity Verlet with the force of the last step cached between calls.
class VerletIntegrator {
 public:
  explicit VerletIntegrator(const LatticeModel& model, double dt_max_factor = 0.1)
      : model_(&model), dt_max_(dt_max_factor / model.mu_plus()) {}

  double dt_max() const { return dt_max_; }

  void step(MicroState& s, double dt) {
    if (std::abs(dt) > dt_max_ * (1.0 + 1e-12))
      throw MicroInstability("time step exceeds the stability bound of the integrator");
    if (!cached_ || cached_x_ != s.x) {
      model_->force(s.x, f_);
      cached_ = true;
    }
    const std::size_t n = s.x.size();
    for (std::size_t i = 0; i < n; ++i) {
      s.v[i] += 0.5 * dt * f_[i];
      s.x[i] += dt * s.v[i];
    }
    model_->force(s.x, f_);
    for (std::size_t i = 0; i < n; ++i) s.v[i] += 0.5 * dt * f_[i];
    s.t += dt;
    cached_x_ = s.x;
  }

  void advance(MicroState& s, double dt, long steps) {
    for (long k = 0; k < steps; ++k) step(s, dt);
  }

 private:
  const LatticeModel* model_;
  double dt_max_;
  bool cached_ = false;
  std::vector<double> f_, cached_x_;
};

inline MicroState step(const LatticeModel& model, MicroState s, double dt) {
  VerletIntegrator integ(model, std::abs(dt) * model.mu_plus() + 1.0);
  integ.step(s, dt);
  return s;
}

// Pointwise defect of the lattice equation for a candidate with known second
// time derivative: xdd - force(x).
inline std::vector<double> residual(const LatticeModel& model, const std::vector<double>& x,
                                    const std::vector<double>& xdd) {
  std::vector<double> f = model.force(x);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = xdd[i] - f[i];
  return f;
}

struct EnergyDrift {
  double max_fluctuation = 0.0;  // max |H(t) - H(0)| / |H(0)|
  double drift = 0.0;            // secular change between Hann-weighted end windows
};

// Separates the bounded O(dt^2) oscillation of a symplectic integrator's
// energy from secular drift: compares Hann-weighted means over the first and
// last `window` fraction of an evenly sampled energy record.
inline EnergyDrift measure_energy_drift(const std::vector<double>& energy, double window = 0.1) {
  EnergyDrift d;
  if (energy.size() < 4) return d;
  const double e0 = energy.front();
  const double ref = std::abs(e0) > 0.0 ? std::abs(e0) : 1.0;
  for (double e : energy) d.max_fluctuation = std::max(d.max_fluctuation, std::abs(e - e0) / ref);
  const std::size_t w = std::max<std::size_t>(3, static_cast<std::size_t>(window * energy.size()));
  auto mean = [&](std::size_t start) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      const double h = std::pow(std::sin(std::numbers::pi * (k + 0.5) / w), 2);
      num += h * energy[start + k];
      den += h;
    }
    return num / den;
  };
  d.drift = std::abs(mean(energy.size() - w) - mean(0)) / ref;
  return d;
}

}  // namespace pulselab
