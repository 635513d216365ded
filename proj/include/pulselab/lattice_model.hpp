#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pulselab/errors.hpp"

namespace pulselab {

using Complex = std::complex<double>;
inline constexpr int kMaxDim = 3;

// Lattice vectors and wave vectors are expressed in basis coordinates, so
// theta . alpha is the plain component sum and plane waves on the torus are
// periodic exactly when every theta component is a multiple of 2pi/M.
using Offset = std::array<int, kMaxDim>;
using WaveVector = std::array<double, kMaxDim>;
using RealVec = std::array<double, kMaxDim>;

inline double dot(const WaveVector& theta, const Offset& alpha) {
  return theta[0] * alpha[0] + theta[1] * alpha[1] + theta[2] * alpha[2];
}

inline Offset negate(const Offset& a) { return {-a[0], -a[1], -a[2]}; }

inline bool is_zero(const Offset& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

// Reduce an angle to [-pi, pi).
inline double wrap_angle(double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = t - two_pi * std::floor((t + std::numbers::pi) / two_pi);
  if (r >= std::numbers::pi) r -= two_pi;
  return r;
}

inline WaveVector wrap(const WaveVector& t) {
  return {wrap_angle(t[0]), wrap_angle(t[1]), wrap_angle(t[2])};
}

struct LatticeSpec {
  int dimension = 1;
  std::vector<RealVec> basis{{1.0, 0.0, 0.0}};
  int cells = 64;  // M, cells per axis

  void validate() const {
    if (dimension < 1 || dimension > kMaxDim)
      throw ConfigError("lattice dimension must be 1, 2 or 3");
    if (static_cast<int>(basis.size()) != dimension)
      throw ConfigError("lattice basis must contain exactly d vectors");
    if (cells < 2) throw ConfigError("lattice needs at least 2 cells per axis");
    Eigen::MatrixXd g(dimension, dimension);
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j) g(i, j) = basis[i][j];
    if (std::abs(g.determinant()) < 1e-12)
      throw ConfigError("lattice basis vectors are linearly dependent");
  }

  std::size_t sites() const {
    std::size_t n = 1;
    for (int i = 0; i < dimension; ++i) n *= static_cast<std::size_t>(cells);
    return n;
  }

  static LatticeSpec chain(int cells) { return LatticeSpec{1, {{1.0, 0.0, 0.0}}, cells}; }

  static LatticeSpec square(int dimension, int cells) {
    LatticeSpec s;
    s.dimension = dimension;
    s.cells = cells;
    s.basis.assign(dimension, RealVec{0.0, 0.0, 0.0});
    for (int i = 0; i < dimension; ++i) s.basis[i][i] = 1.0;
    return s;
  }
};

// Interaction between a site and its neighbour at offset alpha. Coefficient
// a[n-1] multiplies (x_{gamma+alpha} - x_gamma)^n in the force.
struct Bond {
  Offset alpha{};
  std::vector<double> a;
};

struct PotentialSpec {
  int range = 1;
  std::vector<Bond> bonds;
  std::vector<double> onsite;  // b[n-1]

  // Optional exact potentials. The derivative callbacks are used by the force,
  // the potentials themselves by the energy.
  std::function<double(const Offset&, double)> bond_potential;
  std::function<double(const Offset&, double)> bond_force;
  std::function<double(double)> onsite_potential;
  std::function<double(double)> onsite_force;
  double callback_tolerance = 1e-6;

  bool has_callbacks() const {
    return bond_potential && bond_force && onsite_potential && onsite_force;
  }

  int max_order() const {
    std::size_t n = onsite.size();
    for (const auto& b : bonds) n = std::max(n, b.a.size());
    return static_cast<int>(n);
  }

  // Sets a_{n,alpha} and its partner a_{n,-alpha} = (-1)^{n+1} a_{n,alpha}.
  // Setting both sides explicitly with inconsistent values is rejected.
  PotentialSpec& set_bond(int n, const Offset& alpha, double value) {
    if (n < 1) throw ConfigError("Taylor order must be >= 1");
    if (is_zero(alpha)) return *this;  // a_{n,0} never contributes
    int maxc = 0;
    for (int c : alpha) maxc = std::max(maxc, std::abs(c));
    if (maxc > range) throw ConfigError("bond offset exceeds interaction range");
    const double partner = (n % 2 == 1) ? value : -value;
    set_one(n, alpha, value);
    set_one(n, negate(alpha), partner);
    return *this;
  }

  PotentialSpec& set_onsite(int n, double value) {
    if (n < 1) throw ConfigError("Taylor order must be >= 1");
    if (static_cast<int>(onsite.size()) < n) onsite.resize(n, 0.0);
    onsite[n - 1] = value;
    return *this;
  }

  double a(int n, const Offset& alpha) const {
    for (const auto& b : bonds)
      if (b.alpha == alpha) return n <= static_cast<int>(b.a.size()) ? b.a[n - 1] : 0.0;
    return 0.0;
  }

  double b(int n) const { return n <= static_cast<int>(onsite.size()) ? onsite[n - 1] : 0.0; }

  void check_antisymmetry() const {
    for (const auto& bd : bonds) {
      for (std::size_t k = 0; k < bd.a.size(); ++k) {
        const int n = static_cast<int>(k) + 1;
        const double sign = (n % 2 == 1) ? 1.0 : -1.0;
        const double other = a(n, negate(bd.alpha));
        if (std::abs(bd.a[k] - sign * other) > 1e-14 * std::max(1.0, std::abs(bd.a[k])))
          throw ConfigError("bond coefficients violate a_{n,alpha} = (-1)^{n+1} a_{n,-alpha}");
      }
    }
  }

 private:
  void set_one(int n, const Offset& alpha, double value) {
    for (auto& b : bonds) {
      if (b.alpha == alpha) {
        if (static_cast<int>(b.a.size()) < n) b.a.resize(n, 0.0);
        b.a[n - 1] = value;
        return;
      }
    }
    Bond b;
    b.alpha = alpha;
    b.a.assign(n, 0.0);
    b.a[n - 1] = value;
    bonds.push_back(std::move(b));
  }
};

namespace detail {

// Taylor coefficients of f around 0 from a least-squares polynomial fit on
// Chebyshev nodes; accurate enough to validate callbacks against tables.
inline std::vector<double> taylor_from_samples(const std::function<double(double)>& f,
                                               int orders, double h = 0.05) {
  constexpr int nodes = 25;
  constexpr int degree = 14;
  Eigen::MatrixXd v(nodes, degree + 1);
  Eigen::VectorXd y(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double t = std::cos(std::numbers::pi * (i + 0.5) / nodes);
    y(i) = f(h * t);
    double p = 1.0;
    for (int k = 0; k <= degree; ++k) {
      v(i, k) = p;
      p *= t;
    }
  }
  Eigen::VectorXd c = v.colPivHouseholderQr().solve(y);
  std::vector<double> out(orders + 1);
  double scale = 1.0;
  for (int k = 0; k <= orders; ++k) {
    out[k] = c(k) / scale;
    scale *= h;
  }
  return out;
}

}  // namespace detail

enum class StabilityCheck { kStrict, kMarginal };

class LatticeModel {
 public:
  LatticeModel(LatticeSpec spec, PotentialSpec potentials,
               StabilityCheck check = StabilityCheck::kStrict)
      : spec_(std::move(spec)), pot_(std::move(potentials)) {
    spec_.validate();
    pot_.check_antisymmetry();
    for (const auto& b : pot_.bonds)
      for (int i = spec_.dimension; i < kMaxDim; ++i)
        if (b.alpha[i] != 0) throw ConfigError("bond offset has components beyond the dimension");
    for (const auto& b : pot_.bonds) {
      if (std::all_of(b.a.begin(), b.a.end(), [](double v) { return v == 0.0; })) continue;
      bonds_.push_back(b);
    }
    if (pot_.has_callbacks()) check_callbacks();
    build_neighbours();
    scan_stability(check);
  }

  const LatticeSpec& spec() const { return spec_; }
  const PotentialSpec& potentials() const { return pot_; }
  int dimension() const { return spec_.dimension; }
  int cells() const { return spec_.cells; }
  std::size_t sites() const { return spec_.sites(); }
  int max_order() const { return pot_.max_order(); }
  double a(int n, const Offset& alpha) const { return pot_.a(n, alpha); }
  double b(int n) const { return pot_.b(n); }
  const std::vector<Bond>& bonds() const { return bonds_; }
  double mu_minus() const { return mu_minus_; }
  double mu_plus() const { return mu_plus_; }

  // True when no coefficient of order >= 2 is nonzero and no callbacks exist.
  bool is_linear() const {
    if (pot_.has_callbacks()) return false;
    for (const auto& b : bonds_)
      for (std::size_t k = 1; k < b.a.size(); ++k)
        if (b.a[k] != 0.0) return false;
    for (std::size_t k = 1; k < pot_.onsite.size(); ++k)
      if (pot_.onsite[k] != 0.0) return false;
    return true;
  }

  double omega_squared(const WaveVector& theta) const {
    double s = pot_.b(1);
    for (const auto& bd : bonds_)
      if (!bd.a.empty()) s += bd.a[0] * (1.0 - std::cos(dot(theta, bd.alpha)));
    return s;
  }

  double dispersion(const WaveVector& theta) const {
    const double w2 = omega_squared(theta);
    if (!(w2 > 0.0)) throw StabilityViolation("dispersion radicand is not positive");
    return std::sqrt(w2);
  }

  // sum_alpha a_{1,alpha} sin(theta.alpha) alpha, i.e. the gradient of Omega^2.
  RealVec omega_squared_gradient(const WaveVector& theta) const {
    RealVec g{0.0, 0.0, 0.0};
    for (const auto& bd : bonds_) {
      if (bd.a.empty()) continue;
      const double s = bd.a[0] * std::sin(dot(theta, bd.alpha));
      for (int i = 0; i < kMaxDim; ++i) g[i] += s * bd.alpha[i];
    }
    return g;
  }

  RealVec group_velocity(const WaveVector& theta) const {
    const double w = dispersion(theta);
    RealVec g = omega_squared_gradient(theta);
    for (double& v : g) v /= 2.0 * w;
    return g;
  }

  // sum_alpha a_{n,alpha} e^{i theta.alpha} (alpha.e)^s
  Complex symbol_sum(int n, const WaveVector& theta, int s, const RealVec& e) const {
    if (n < 1 || n > max_order()) throw OrderOutOfRange("symbol_sum order exceeds stored Taylor order");
    if (s < 0) throw OrderOutOfRange("derivative order must be nonnegative");
    Complex acc = 0.0;
    for (const auto& bd : bonds_) {
      if (static_cast<int>(bd.a.size()) < n) continue;
      const double proj = bd.alpha[0] * e[0] + bd.alpha[1] * e[1] + bd.alpha[2] * e[2];
      acc += bd.a[n - 1] * std::polar(1.0, dot(theta, bd.alpha)) * std::pow(proj, s);
    }
    return acc;
  }

  // Accelerations for the displacement field x.
  void force(const std::vector<double>& x, std::vector<double>& out) const {
    const std::size_t n = sites();
    out.assign(n, 0.0);
    if (pot_.has_callbacks()) {
      for (std::size_t s = 0; s < n; ++s) {
        double acc = 0.0;
        for (std::size_t k = 0; k < bonds_.size(); ++k)
          acc += pot_.bond_force(bonds_[k].alpha, x[neighbours_[k][s]] - x[s]);
        out[s] = acc - pot_.onsite_force(x[s]);
      }
      return;
    }
    const auto& b = pot_.onsite;
    for (std::size_t s = 0; s < n; ++s) {
      double acc = 0.0;
      for (std::size_t k = 0; k < bonds_.size(); ++k) {
        const double d = x[neighbours_[k][s]] - x[s];
        acc += d * horner(bonds_[k].a, d);
      }
      out[s] = acc - x[s] * horner(b, x[s]);
    }
  }

  std::vector<double> force(const std::vector<double>& x) const {
    std::vector<double> out;
    force(x, out);
    return out;
  }

  double energy(const std::vector<double>& x, const std::vector<double>& v) const {
    double kinetic = 0.0;
    for (double vi : v) kinetic += vi * vi;
    double potential = 0.0;
    const std::size_t n = sites();
    for (std::size_t s = 0; s < n; ++s) {
      double bond_part = 0.0;
      for (std::size_t k = 0; k < bonds_.size(); ++k) {
        const double d = x[neighbours_[k][s]] - x[s];
        bond_part += pot_.has_callbacks() ? pot_.bond_potential(bonds_[k].alpha, d)
                                          : antiderivative(bonds_[k].a, d);
      }
      const double w = pot_.has_callbacks() ? pot_.onsite_potential(x[s])
                                            : antiderivative(pot_.onsite, x[s]);
      potential += 0.5 * bond_part + w;
    }
    return 0.5 * kinetic + potential;
  }

  // ||x||_E^2 = sum_alpha (a_{1,alpha}/2) sum_gamma |x_{gamma+alpha}-x_gamma|^2 + b_1 sum |x|^2
  double energy_norm_squared(const std::vector<double>& x) const {
    double acc = 0.0;
    const std::size_t n = sites();
    for (std::size_t k = 0; k < bonds_.size(); ++k) {
      if (bonds_[k].a.empty()) continue;
      double s2 = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const double d = x[neighbours_[k][s]] - x[s];
        s2 += d * d;
      }
      acc += 0.5 * bonds_[k].a[0] * s2;
    }
    double o = 0.0;
    for (double xi : x) o += xi * xi;
    return acc + pot_.b(1) * o;
  }

  // Cell coordinates of a site index and back.
  std::array<int, kMaxDim> coords(std::size_t site) const {
    std::array<int, kMaxDim> c{0, 0, 0};
    const auto m = static_cast<std::size_t>(spec_.cells);
    for (int i = 0; i < spec_.dimension; ++i) {
      c[i] = static_cast<int>(site % m);
      site /= m;
    }
    return c;
  }

  std::size_t index(const std::array<int, kMaxDim>& c) const {
    const int m = spec_.cells;
    std::size_t idx = 0;
    for (int i = spec_.dimension - 1; i >= 0; --i) {
      const int ci = ((c[i] % m) + m) % m;
      idx = idx * static_cast<std::size_t>(m) + static_cast<std::size_t>(ci);
    }
    return idx;
  }

  // Physical position of a cell (basis combination), for output only.
  RealVec position(std::size_t site) const {
    const auto c = coords(site);
    RealVec p{0.0, 0.0, 0.0};
    for (int i = 0; i < spec_.dimension; ++i)
      for (int j = 0; j < kMaxDim; ++j) p[j] += c[i] * spec_.basis[i][j];
    return p;
  }

  // Wave vector of grid index k (theta_i = 2 pi k_i / M).
  WaveVector grid_wave_vector(const std::array<int, kMaxDim>& k) const {
    WaveVector t{0.0, 0.0, 0.0};
    for (int i = 0; i < spec_.dimension; ++i)
      t[i] = wrap_angle(2.0 * std::numbers::pi * k[i] / spec_.cells);
    return t;
  }

  // Returns a copy with a different number of cells per axis.
  LatticeModel with_cells(int cells) const {
    LatticeSpec s = spec_;
    s.cells = cells;
    return LatticeModel(s, pot_, check_);
  }

 private:
  static double horner(const std::vector<double>& c, double d) {
    double r = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * d + *it;
    return r;
  }

  // sum_n c[n-1] d^{n+1}/(n+1)
  static double antiderivative(const std::vector<double>& c, double d) {
    double r = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) r = r * d + c[k] / static_cast<double>(k + 2);
    return r * d * d;
  }

  void build_neighbours() {
    const std::size_t n = sites();
    neighbours_.assign(bonds_.size(), std::vector<std::size_t>(n));
    for (std::size_t s = 0; s < n; ++s) {
      const auto c = coords(s);
      for (std::size_t k = 0; k < bonds_.size(); ++k) {
        auto t = c;
        for (int i = 0; i < spec_.dimension; ++i) t[i] += bonds_[k].alpha[i];
        neighbours_[k][s] = index(t);
      }
    }
  }

  void scan_stability(StabilityCheck check) {
    check_ = check;
    mu_minus_ = std::numeric_limits<double>::infinity();
    mu_plus_ = 0.0;
    const std::size_t n = sites();
    double min_w2 = std::numeric_limits<double>::infinity();
    double max_w2 = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const auto k = coords(s);
      const double w2 = omega_squared(grid_wave_vector(k));
      min_w2 = std::min(min_w2, w2);
      max_w2 = std::max(max_w2, w2);
    }
    const bool ok = check == StabilityCheck::kStrict ? min_w2 > 0.0 : min_w2 > -1e-14;
    if (!ok) throw StabilityViolation("Omega^2 is not positive on the wave-vector grid");
    mu_minus_ = std::sqrt(std::max(min_w2, 0.0));
    mu_plus_ = std::sqrt(max_w2);
  }

  void check_callbacks() const {
    const int orders = std::min(max_order(), 4);
    const double tol = pot_.callback_tolerance;
    auto compare = [&](const std::vector<double>& fit, auto coefficient, const char* what) {
      if (std::abs(fit[0]) > tol) throw ConfigError(std::string(what) + " derivative is nonzero at 0");
      for (int nn = 1; nn <= orders; ++nn) {
        const double expected = coefficient(nn);
        if (std::abs(fit[nn] - expected) > tol * std::max(1.0, std::abs(expected)))
          throw ConfigError(std::string(what) + " callback does not match its Taylor coefficients");
      }
    };
    for (const auto& bd : bonds_) {
      const auto fit = detail::taylor_from_samples(
          [&](double d) { return pot_.bond_force(bd.alpha, d); }, orders);
      compare(fit, [&](int nn) { return pot_.a(nn, bd.alpha); }, "bond");
    }
    const auto fit = detail::taylor_from_samples(pot_.onsite_force, orders);
    compare(fit, [&](int nn) { return pot_.b(nn); }, "on-site");
  }

  LatticeSpec spec_;
  PotentialSpec pot_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::size_t>> neighbours_;
  StabilityCheck check_ = StabilityCheck::kStrict;
  double mu_minus_ = 0.0;
  double mu_plus_ = 0.0;
};

struct ChainCoefficients {
  double a1 = 1.0, a2 = 0.0, a3 = 0.0;
  double b1 = 1.0, b2 = 0.0, b3 = 0.0;
};

// Nearest-neighbour interaction along every basis axis with on-site potential.
inline PotentialSpec nearest_neighbour_potential(int dimension, const ChainCoefficients& c) {
  PotentialSpec p;
  p.range = 1;
  for (int i = 0; i < dimension; ++i) {
    Offset e{0, 0, 0};
    e[i] = 1;
    p.set_bond(1, e, c.a1).set_bond(2, e, c.a2).set_bond(3, e, c.a3);
  }
  p.set_onsite(1, c.b1).set_onsite(2, c.b2).set_onsite(3, c.b3);
  return p;
}

// Named builtins. "fpu" keeps the on-site part harmonic, "kg" keeps the bonds
// harmonic, "nn-chain" takes every coefficient as given.
inline PotentialSpec builtin_potential(const std::string& name, int dimension, ChainCoefficients c) {
  if (name == "fpu") {
    c.b2 = 0.0;
    c.b3 = 0.0;
  } else if (name == "kg") {
    c.a2 = 0.0;
    c.a3 = 0.0;
  } else if (name != "nn-chain") {
    throw ConfigError("unknown builtin potential '" + name + "'");
  }
  return nearest_neighbour_potential(dimension, c);
}

}  // namespace pulselab
