#pragma once

#include <algorithm>
#include <vector>

#include "pulselab/spectral.hpp"

namespace pulselab {

// Truncated Taylor series in macroscopic time of a field: c[m] holds
// d^m/dtau^m A / m!. An empty series is the exact zero of unbounded degree.
// Running the macro right-hand sides on series yields exact tau-derivatives.
struct Series {
  std::vector<Field> c;

  Series() = default;
  explicit Series(Field value) { c.push_back(std::move(value)); }

  bool zero() const { return c.empty(); }
  int degree() const { return static_cast<int>(c.size()) - 1; }

  // m-th tau-derivative as a field (zero if beyond the stored degree).
  Field derivative(int m, std::size_t n) const {
    if (m > degree()) return Field(n, 0.0);
    double f = 1.0;
    for (int k = 2; k <= m; ++k) f *= k;
    Field out = c[m];
    for (auto& v : out) v *= f;
    return out;
  }

  // Series of d/dtau.
  Series dtau() const {
    Series s;
    for (int m = 1; m <= degree(); ++m) {
      Field f = c[m];
      for (auto& v : f) v *= static_cast<double>(m);
      s.c.push_back(std::move(f));
    }
    return s;
  }

  void truncate(int deg) {
    if (degree() > deg) c.resize(deg + 1);
  }
};

namespace series_ops {

inline int combined_degree(const Series& a, const Series& b) {
  if (a.zero()) return b.degree();
  if (b.zero()) return a.degree();
  return std::min(a.degree(), b.degree());
}

inline Series conj(const Series& a) {
  Series s = a;
  for (auto& f : s.c)
    for (auto& v : f) v = std::conj(v);
  return s;
}

inline Series scale(const Series& a, Complex k) {
  Series s = a;
  for (auto& f : s.c)
    for (auto& v : f) v *= k;
  return s;
}

// y += k * x, truncating to the common degree.
inline void axpy(Series& y, Complex k, const Series& x) {
  if (x.zero() || k == 0.0) return;
  if (y.zero()) {
    y = scale(x, k);
    return;
  }
  const int deg = std::min(y.degree(), x.degree());
  y.truncate(deg);
  for (int m = 0; m <= deg; ++m) {
    auto& ym = y.c[m];
    const auto& xm = x.c[m];
    for (std::size_t i = 0; i < ym.size(); ++i) ym[i] += k * xm[i];
  }
}

// Cauchy product truncated to the common degree.
inline Series mul(const Series& a, const Series& b) {
  if (a.zero() || b.zero()) return {};
  const int deg = std::min(a.degree(), b.degree());
  const std::size_t n = a.c[0].size();
  Series s;
  s.c.assign(deg + 1, Field(n, 0.0));
  for (int m = 0; m <= deg; ++m)
    for (int k = 0; k <= m; ++k) {
      const auto& x = a.c[k];
      const auto& y = b.c[m - k];
      auto& z = s.c[m];
      for (std::size_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
    }
  return s;
}

inline Series mul(const Series& a, const Series& b, const Series& c) { return mul(mul(a, b), c); }

template <class Op>
Series map(const Series& a, Op&& op) {
  Series s;
  for (const auto& f : a.c) s.c.push_back(op(f));
  return s;
}

}  // namespace series_ops
}  // namespace pulselab
