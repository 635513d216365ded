#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "pulselab/lattice_model.hpp"

namespace pulselab {

using Field = std::vector<Complex>;
using Mat3c = std::array<std::array<Complex, kMaxDim>, kMaxDim>;
using Vec3c = std::array<Complex, kMaxDim>;

// Periodic macroscopic grid: P points per axis over period L (lattice
// coordinates scaled by epsilon).
struct MacroGrid {
  int dimension = 1;
  int points = 64;
  double period = 1.0;

  std::size_t size() const {
    std::size_t n = 1;
    for (int i = 0; i < dimension; ++i) n *= static_cast<std::size_t>(points);
    return n;
  }
  double spacing() const { return period / points; }

  // Coordinate of grid node `index` along each axis.
  RealVec node(std::size_t index) const {
    RealVec y{0.0, 0.0, 0.0};
    for (int i = 0; i < dimension; ++i) {
      y[i] = static_cast<double>(index % points) * spacing();
      index /= points;
    }
    return y;
  }
};

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Owns an in-place forward/backward plan pair for an n^d complex array.
class FftPlan {
 public:
  FftPlan(int dimension, int n) : count_(1) {
    std::vector<int> dims(dimension, n);
    for (int i = 0; i < dimension; ++i) count_ *= static_cast<std::size_t>(n);
    buffer_ = fftw_alloc_complex(count_);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft(dimension, dims.data(), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(dimension, dims.data(), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(buffer_);
  }

  Field forward(const Field& in) const { return run(in, forward_, 1.0); }
  Field backward(const Field& in) const {
    return run(in, backward_, 1.0 / static_cast<double>(count_));
  }
  std::size_t count() const { return count_; }

 private:
  Field run(const Field& in, fftw_plan plan, double scale) const {
    std::memcpy(buffer_, in.data(), count_ * sizeof(fftw_complex));
    fftw_execute(plan);
    Field out(count_);
    std::memcpy(static_cast<void*>(out.data()), buffer_, count_ * sizeof(fftw_complex));
    if (scale != 1.0)
      for (auto& v : out) v *= scale;
    return out;
  }

  std::size_t count_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};
}  // namespace detail

// Pseudo-spectral operators on a MacroGrid. Not safe for concurrent calls on
// the same instance; create one per thread.
class SpectralOps {
 public:
  explicit SpectralOps(const MacroGrid& grid)
      : grid_(grid), plan_(std::make_shared<detail::FftPlan>(grid.dimension, grid.points)) {
    if (grid.points < 2) throw ConfigError("macro grid needs at least 2 points per axis");
    if (!(grid.period > 0.0)) throw ConfigError("macro period must be positive");
    const int p = grid.points;
    wave_.resize(p);
    odd_.resize(p);
    for (int n = 0; n < p; ++n) {
      const int ns = n < (p + 1) / 2 ? n : n - p;
      wave_[n] = 2.0 * std::numbers::pi * ns / grid.period;
      odd_[n] = (p % 2 == 0 && n == p / 2) ? 0.0 : wave_[n];
    }
  }

  const MacroGrid& grid() const { return grid_; }
  Field forward(const Field& f) const { return plan_->forward(f); }
  Field backward(const Field& f) const { return plan_->backward(f); }

  // sum_i dir_i d/dy_i f
  Field directional(const Field& f, const Vec3c& dir) const {
    if (is_null(dir)) return Field(f.size(), 0.0);
    Field h = forward(f);
    for_each_mode([&](std::size_t idx, const std::array<int, kMaxDim>& n) {
      Complex s = 0.0;
      for (int i = 0; i < grid_.dimension; ++i) s += dir[i] * odd_[n[i]];
      h[idx] *= Complex(0.0, 1.0) * s;
    });
    return backward(h);
  }

  Field directional(const Field& f, const RealVec& dir) const {
    return directional(f, Vec3c{dir[0], dir[1], dir[2]});
  }

  Field derivative(const Field& f, int axis) const {
    Vec3c dir{0.0, 0.0, 0.0};
    dir[axis] = 1.0;
    return directional(f, dir);
  }

  // sum_{i,k} q_{ik} d^2/(dy_i dy_k) f
  Field hessian_contract(const Field& f, const Mat3c& q) const {
    Field h = forward(f);
    for_each_mode([&](std::size_t idx, const std::array<int, kMaxDim>& n) {
      Complex s = 0.0;
      for (int i = 0; i < grid_.dimension; ++i) {
        for (int k = 0; k < grid_.dimension; ++k) {
          const double ki = (i == k) ? wave_[n[i]] : odd_[n[i]];
          const double kk = (i == k) ? wave_[n[k]] : odd_[n[k]];
          s += q[i][k] * ki * kk;
        }
      }
      h[idx] *= -s;
    });
    return backward(h);
  }

  // g(y) = f(y + shift) by trigonometric interpolation.
  Field translate(const Field& f, const RealVec& shift) const {
    Field h = forward(f);
    for_each_mode([&](std::size_t idx, const std::array<int, kMaxDim>& n) {
      double phase = 0.0;
      for (int i = 0; i < grid_.dimension; ++i) phase += odd_[n[i]] * shift[i];
      const bool nyquist = [&] {
        for (int i = 0; i < grid_.dimension; ++i)
          if (grid_.points % 2 == 0 && n[i] == grid_.points / 2) return true;
        return false;
      }();
      h[idx] *= nyquist ? Complex(std::cos(phase), 0.0) : std::polar(1.0, phase);
    });
    return backward(h);
  }

  // Trigonometric interpolant sampled on a finer grid with `cells` points per
  // axis; cells must be a multiple of P.
  Field upsample(const Field& f, int cells) const {
    const int p = grid_.points;
    if (cells % p != 0) throw ConfigError("lattice cells must be a multiple of macro points");
    if (cells == p) return f;
    Field h = forward(f);
    const int d = grid_.dimension;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(cells);
    Field big(total, 0.0);
    const double scale = static_cast<double>(total) / static_cast<double>(grid_.size());
    for_each_mode([&](std::size_t idx, const std::array<int, kMaxDim>& n) {
      // A Nyquist index splits evenly between +P/2 and -P/2.
      std::vector<std::vector<std::pair<int, double>>> targets(d);
      for (int i = 0; i < d; ++i) {
        if (p % 2 == 0 && n[i] == p / 2) {
          targets[i] = {{p / 2, 0.5}, {cells - p / 2, 0.5}};
        } else {
          const int ns = n[i] < (p + 1) / 2 ? n[i] : n[i] - p;
          targets[i] = {{ns >= 0 ? ns : cells + ns, 1.0}};
        }
      }
      std::array<std::size_t, kMaxDim> pick{0, 0, 0};
      while (true) {
        std::size_t pos = 0;
        double w = 1.0;
        for (int i = d - 1; i >= 0; --i) {
          pos = pos * static_cast<std::size_t>(cells) + static_cast<std::size_t>(targets[i][pick[i]].first);
          w *= targets[i][pick[i]].second;
        }
        big[pos] += h[idx] * w * scale;
        int axis = 0;
        while (axis < d && ++pick[axis] == targets[axis].size()) pick[axis++] = 0;
        if (axis == d) break;
      }
    });
    return fine_plan(cells).backward(big);
  }

  static double sup(const Field& f) {
    double m = 0.0;
    for (const auto& v : f) {
      const double a = std::abs(v);
      if (std::isnan(a)) return a;
      m = std::max(m, a);
    }
    return m;
  }

 private:
  static bool is_null(const Vec3c& v) { return v[0] == 0.0 && v[1] == 0.0 && v[2] == 0.0; }

  template <class F>
  void for_each_mode(F&& f) const {
    const std::size_t total = grid_.size();
    std::array<int, kMaxDim> n{0, 0, 0};
    for (std::size_t idx = 0; idx < total; ++idx) {
      f(idx, n);
      int axis = 0;
      while (axis < grid_.dimension && ++n[axis] == grid_.points) n[axis++] = 0;
    }
  }

  const detail::FftPlan& fine_plan(int cells) const {
    auto it = fine_.find(cells);
    if (it == fine_.end())
      it = fine_.emplace(cells, std::make_shared<detail::FftPlan>(grid_.dimension, cells)).first;
    return *it->second;
  }

  MacroGrid grid_;
  std::shared_ptr<detail::FftPlan> plan_;
  std::vector<double> wave_, odd_;
  mutable std::map<int, std::shared_ptr<detail::FftPlan>> fine_;
};

}  // namespace pulselab
