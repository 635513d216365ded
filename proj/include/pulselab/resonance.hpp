#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "pulselab/errors.hpp"
#include "pulselab/lattice_model.hpp"

namespace pulselab::resonance {

// Nearest-neighbour chain with repulsive harmonic bonds (a1 < 0) stabilised
// by the on-site term: Omega^2 = 4|a1| (phi - chi) with chi = (1 - cos theta)/2.
struct Problem {
  double a1 = -0.25;
  double b1 = 1.2;

  double phi() const { return b1 / (4.0 * std::abs(a1)); }

  static Problem from_phi(double phi, double b1 = 1.0) { return {-b1 / (4.0 * phi), b1}; }

  void validate() const {
    if (!(b1 > 0.0)) throw ConfigError("resonance search needs b1 > 0");
    if (a1 >= 0.0) throw EmptyBranch("no three-wave resonances exist for a1 >= 0");
    if (!(b1 + 4.0 * a1 > 0.0)) throw StabilityViolation("b1 + 4 a1 must be positive");
  }

  double omega(double theta) const { return std::sqrt(2.0 * a1 * (1.0 - std::cos(theta)) + b1); }
};

inline double g(double chi, double psi, double phi) {
  return 5.0 * phi * phi / 4.0 + chi * psi * (chi + psi) - phi * (chi * psi + chi + psi) +
         (phi - 2.0 * chi * psi) * std::sqrt((phi - chi) * (phi - psi));
}

inline double g_diagonal(double chi, double phi) {
  return 4.0 * chi * chi * chi - 3.0 * phi * chi * chi - 3.0 * phi * chi + 9.0 * phi * phi / 4.0;
}

inline double g_diagonal_derivative(double chi, double phi) {
  return 3.0 * (4.0 * chi * chi - 2.0 * phi * chi - phi);
}

inline double diagonal_minimum(double phi) { return phi / 4.0 * (1.0 + std::sqrt(1.0 + 4.0 / phi)); }

// Bisection to the floating-point limit on a bracketing interval.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

// Diagonal root chi* in (0, chi_m) with g(chi*, chi*) = 0.
inline double diagonal_root(double phi) {
  if (!(phi > 1.0) || phi >= 4.0 / 3.0) throw EmptyBranch("diagonal root needs 1 < phi < 4/3");
  return bisect([phi](double c) { return g_diagonal(c, phi); }, 0.0, diagonal_minimum(phi));
}

struct Root {
  double chi = 0.0, psi = 0.0;
};

// Roots of g on [0,1]^2: for each sampled chi, every sign change of
// psi -> g(chi, psi) on a fine scan is refined by bisection.
inline std::vector<Root> solve_level_set(double phi, int samples, int scan = 400) {
  if (!(phi > 1.0)) throw ConfigError("phi must exceed 1");
  if (phi >= 4.0 / 3.0) throw EmptyBranch("no resonances for phi >= 4/3");
  if (samples < 1) throw ConfigError("sample count must be positive");
  std::vector<Root> roots;
  for (int s = 0; s < samples; ++s) {
    const double chi = (s + 0.5) / samples;
    auto f = [chi, phi](double psi) { return g(chi, psi, phi); };
    double prev = f(0.0);
    for (int k = 1; k <= scan; ++k) {
      const double lo = static_cast<double>(k - 1) / scan, hi = static_cast<double>(k) / scan;
      const double cur = f(hi);
      if ((prev < 0.0) != (cur < 0.0)) roots.push_back({chi, bisect(f, lo, hi)});
      prev = cur;
    }
  }
  if (roots.empty()) throw EmptyBranch("no sign change of g found");
  return roots;
}

// zeta = (1 - cos theta_3)/2 of the resonant third wave.
inline double zeta(double chi, double psi, double phi) {
  return chi + psi - phi - 2.0 * std::sqrt((phi - chi) * (phi - psi));
}

struct Triple {
  double chi = 0.0, psi = 0.0, zeta = 0.0;
  double theta1 = 0.0, theta2 = 0.0, theta3 = 0.0;
  double omega1 = 0.0, omega2 = 0.0, omega3 = 0.0;
  double resonance_defect = 0.0;            // Omega(theta1+theta2) - Omega(theta1) - Omega(theta2)
  std::array<double, 6> chi_margins{};      // chi^2, psi^2, zeta^2 vs 3phi/4; chi psi, chi zeta, zeta psi vs phi/2
  std::array<double, 6> frequency_margins{};  // |Omega^2(k.theta) - (k.omega)^2| for the six combinations
  double min_margin() const { return *std::min_element(chi_margins.begin(), chi_margins.end()); }
};

inline constexpr std::array<std::array<int, 2>, 6> kFilterCombinations{
    {{2, 0}, {0, 2}, {2, 2}, {2, 1}, {1, 2}, {1, -1}}};

struct LiftResult {
  std::vector<Triple> kept;
  std::vector<Triple> rejected;
};

// Recovers wave numbers from (chi, psi) roots, checks the unsquared resonance
// equation and the resonance itself, and filters nonresonance violations.
inline LiftResult lift_and_filter(const Problem& prob, const std::vector<Root>& roots,
                                  double margin_threshold = 1e-4, double identity_tol = 1e-10) {
  prob.validate();
  const double phi = prob.phi();
  LiftResult out;
  for (const auto& r : roots) {
    const double rhs = phi / 2.0 - r.chi * r.psi + std::sqrt((phi - r.chi) * (phi - r.psi));
    const double lhs_mag = std::sqrt(std::max(0.0, r.chi * (1.0 - r.chi) * r.psi * (1.0 - r.psi)));
    if (std::abs(lhs_mag - std::abs(rhs)) > 1e-8) continue;  // spurious root of the squared equation
    const double s = rhs > 0.0 ? -1.0 : 1.0;                   // -s sqrt(...) = rhs
    Triple t;
    t.chi = r.chi;
    t.psi = r.psi;
    t.zeta = zeta(r.chi, r.psi, phi);
    t.theta1 = std::acos(1.0 - 2.0 * r.chi);
    t.theta2 = s * std::acos(1.0 - 2.0 * r.psi);
    t.theta3 = wrap_angle(t.theta1 + t.theta2);
    t.omega1 = prob.omega(t.theta1);
    t.omega2 = prob.omega(t.theta2);
    t.omega3 = prob.omega(t.theta3);
    t.resonance_defect = t.omega3 - t.omega1 - t.omega2;
    if (std::abs(t.resonance_defect) > identity_tol) continue;
    const double c = t.chi, p = t.psi, z = t.zeta;
    t.chi_margins = {std::abs(c * c - 0.75 * phi), std::abs(p * p - 0.75 * phi),
                     std::abs(z * z - 0.75 * phi), std::abs(c * p - 0.5 * phi),
                     std::abs(c * z - 0.5 * phi),  std::abs(z * p - 0.5 * phi)};
    for (std::size_t k = 0; k < kFilterCombinations.size(); ++k) {
      const auto [k1, k2] = kFilterCombinations[k];
      const double th = k1 * t.theta1 + k2 * t.theta2;
      const double om = k1 * t.omega1 + k2 * t.omega2;
      t.frequency_margins[k] = std::abs(prob.omega(th) * prob.omega(th) - om * om);
    }
    const double fmin = *std::min_element(t.frequency_margins.begin(), t.frequency_margins.end());
    if (t.min_margin() < margin_threshold || fmin < margin_threshold)
      out.rejected.push_back(t);
    else
      out.kept.push_back(t);
  }
  if (out.kept.empty()) throw AllFiltered("every root violates a nonresonance condition");
  return out;
}

// Full construction for one chain: validate, solve, lift and filter.
inline LiftResult search(const Problem& prob, int samples, double margin_threshold = 1e-4) {
  prob.validate();
  return lift_and_filter(prob, solve_level_set(prob.phi(), samples), margin_threshold);
}

// Nearest grid indices k_i = round(M theta_i / 2pi) and the leftover detuning.
struct Snapped {
  int cells = 0;
  int k1 = 0, k2 = 0, k3 = 0;
  double detuning = 0.0;  // Omega(theta_3) - Omega(theta_1) - Omega(theta_2) on the grid
};

inline Snapped snap_to_grid(const Problem& prob, const Triple& t, int cells) {
  const double unit = 2.0 * std::numbers::pi / cells;
  Snapped s;
  s.cells = cells;
  s.k1 = static_cast<int>(std::lround(t.theta1 / unit));
  s.k2 = static_cast<int>(std::lround(t.theta2 / unit));
  s.k3 = s.k1 + s.k2;
  s.detuning = prob.omega(s.k3 * unit) - prob.omega(s.k1 * unit) - prob.omega(s.k2 * unit);
  return s;
}

// Picks, among several candidate triples, the grid snap with least detuning.
inline Snapped best_snap(const Problem& prob, const std::vector<Triple>& triples, int cells) {
  if (triples.empty()) throw EmptyBranch("no triples to snap");
  Snapped best = snap_to_grid(prob, triples.front(), cells);
  for (const auto& t : triples) {
    const Snapped s = snap_to_grid(prob, t, cells);
    if (std::abs(s.detuning) < std::abs(best.detuning)) best = s;
  }
  return best;
}

// Adjusts a1 (b1 fixed) so that grid wave numbers theta1, theta2 and
// theta1+theta2 resonate exactly. Returns nullopt if phi would leave (1, 4/3).
inline std::optional<Problem> retune(double b1, double theta1, double theta2) {
  const double c1 = (1.0 - std::cos(theta1)) / 2.0, c2 = (1.0 - std::cos(theta2)) / 2.0;
  const double c3 = (1.0 - std::cos(theta1 + theta2)) / 2.0;
  auto f = [&](double phi) {
    return std::sqrt(phi - c1) + std::sqrt(phi - c2) - std::sqrt(phi - c3);
  };
  const double lo = 1.0 + 1e-12, hi = 4.0 / 3.0 - 1e-12;
  if ((f(lo) < 0.0) == (f(hi) < 0.0)) return std::nullopt;
  const double phi = bisect(f, lo, hi);
  return Problem::from_phi(phi, b1);
}

}  // namespace pulselab::resonance
