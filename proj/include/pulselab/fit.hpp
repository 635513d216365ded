#pragma once

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "pulselab/errors.hpp"

namespace pulselab {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;      // log(value) at log(eps) = 0
  double max_deviation = 0.0;  // max |log value_i - fit_i|
  double half_width = 0.0;     // 95% confidence half-width of the slope

  double predict(double eps) const { return std::exp(intercept + slope * std::log(eps)); }
};

// Least-squares line through (log eps, log value).
inline SlopeFit fit_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3) throw ConfigError("slope fit needs at least 3 points");
  std::vector<double> xs, ys;
  for (const auto& [e, v] : pts) {
    if (!(e > 0.0) || !(v > 0.0)) throw NonPositiveValue("slope fit needs positive values");
    xs.push_back(std::log(e));
    ys.push_back(std::log(v));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw ConfigError("slope fit needs distinct eps values");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * xs[i]);
    f.max_deviation = std::max(f.max_deviation, std::abs(r));
    ss += r * r;
  }
  const double dof = n - 2.0;
  if (dof > 0.0) {
    const boost::math::students_t dist(dof);
    f.half_width = boost::math::quantile(boost::math::complement(dist, 0.025)) * std::sqrt(ss / dof / sxx);
  }
  return f;
}

}  // namespace pulselab
