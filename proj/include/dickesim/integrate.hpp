#pragma once

// Adaptive Dormand-Prince 5(4) integrator with dense output, used for every
// time evolution in the library. Requested sample times are evaluated from the
// fifth-order interpolant, not by clipping steps.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "dickesim/types.hpp"

namespace dickesim {

struct IntegrateOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double first_step = 0.0;  // 0 = choose automatically
};

struct IntegrateError : std::runtime_error {
  double t_fail;
  explicit IntegrateError(const std::string& what, double t) : std::runtime_error(what), t_fail(t) {}
};

using SampleCallback = std::function<void(std::size_t index, double t, const VectorXcd& v)>;

namespace detail {

// Dormand-Prince coefficients (FSAL pair) and Hairer's quartic dense-output
// weights.
inline constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
inline constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
inline constexpr double kE[7] = {71.0 / 57600,     0.0,          -71.0 / 16695, 71.0 / 1920,
                                 -17253.0 / 339200, 22.0 / 525,  -1.0 / 40};
inline constexpr double kD[7] = {-12715105075.0 / 11282082432.0,
                                 0.0,
                                 87487479700.0 / 32700410799.0,
                                 -10690763975.0 / 1880347072.0,
                                 701980252875.0 / 199316789632.0,
                                 -1453857185.0 / 822651844.0,
                                 69997945.0 / 29380423.0};

inline void check_finite(const VectorXcd& v, double t) {
  if (!v.allFinite()) throw IntegrateError("integrate: NaN/Inf detected at t = " + std::to_string(t), t);
}

}  // namespace detail

/// Integrates dv/dt = rhs(v) from times.front() over the ascending grid,
/// invoking on_sample at every grid point (including the initial one).
template <typename Rhs>
void integrate_rhs(Rhs&& rhs, const VectorXcd& v0, std::span<const double> times,
                   const IntegrateOptions& opts, const SampleCallback& on_sample) {
  if (times.empty()) throw std::invalid_argument("integrate: empty time grid");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("integrate: times must be strictly ascending");

  const Eigen::Index n = v0.size();
  VectorXcd y = v0;
  double t = times.front();
  on_sample(0, t, y);
  if (times.size() == 1) return;

  VectorXcd k[7], y_stage(n), y_new(n), err(n);
  k[0] = rhs(y);
  detail::check_finite(k[0], t);

  auto err_norm = [&](const VectorXcd& e, const VectorXcd& a, const VectorXcd& b) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
      const double q = std::abs(e[i]) / sc;
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  const double t_end = times.back();
  double h = opts.first_step;
  if (h <= 0.0) {
    // crude initial step from the first derivative scale
    const double d0 = std::max(y.norm(), 1e-8), d1 = std::max(k[0].norm(), 1e-8);
    h = std::min({0.01 * d0 / d1, t_end - t, opts.max_step});
    if (!(h > 0.0)) h = 1e-6;
  }

  std::size_t next_sample = 1;
  VectorXcd rc2(n), rc3(n), rc4(n), rc5(n);

  while (t < t_end) {
    h = std::min({h, t_end - t, opts.max_step});
    if (h <= 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0))
      throw IntegrateError("integrate: step size underflow (stiff problem?) at t = " + std::to_string(t), t);

    for (int s = 1; s < 7; ++s) {
      y_stage = y;
      for (int j = 0; j < s; ++j) y_stage += (h * detail::kA[s][j]) * k[j];
      k[s] = rhs(y_stage);
    }
    y_new = y_stage;  // stage 7 input equals the 5th-order solution (FSAL)
    err.setZero();
    for (int s = 0; s < 7; ++s)
      if (detail::kE[s] != 0.0) err += (h * detail::kE[s]) * k[s];

    detail::check_finite(y_new, t + h);
    const double en = err_norm(err, y, y_new);
    if (en <= 1.0) {
      // dense output over [t, t+h]
      const VectorXcd ydiff = y_new - y;
      rc2 = ydiff;
      rc3 = h * k[0] - ydiff;
      rc4 = ydiff - h * k[6] - rc3;
      rc5.setZero();
      for (int s = 0; s < 7; ++s)
        if (detail::kD[s] != 0.0) rc5 += (h * detail::kD[s]) * k[s];
      const double t_new = t + h;
      while (next_sample < times.size() && times[next_sample] <= t_new + 1e-14 * std::max(std::abs(t_new), 1.0)) {
        const double ts = times[next_sample];
        if (ts >= t_new) {
          on_sample(next_sample, ts, y_new);
        } else {
          const double th = (ts - t) / h, th1 = 1.0 - th;
          y_stage = y + th * (rc2 + th1 * (rc3 + th * (rc4 + th1 * rc5)));
          on_sample(next_sample, ts, y_stage);
        }
        ++next_sample;
      }
      if (next_sample >= times.size()) return;  // grid fully sampled; t_end reached up to roundoff
      t = t_new;
      y.swap(y_new);
      k[0].swap(k[6]);
      h *= std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
    }
  }
  if (next_sample < times.size())
    throw IntegrateError("integrate: internal sampling error at t = " + std::to_string(t), t);
}

/// Matrix RHS form dv/dt = D v. D is copied to row-major storage once; the
/// repeated products dominate the run time.
inline void integrate(const SpMat& d, const VectorXcd& v0, std::span<const double> times,
                      const IntegrateOptions& opts, const SampleCallback& on_sample) {
  if (d.rows() != d.cols() || d.cols() != v0.size())
    throw std::invalid_argument("integrate: dimension mismatch between D and v0");
  const SpMatRM drm(d);
  integrate_rhs([&drm](const VectorXcd& v) -> VectorXcd { return drm * v; }, v0, times, opts, on_sample);
}

/// Convenience overload that returns the sampled states.
inline std::vector<VectorXcd> integrate(const SpMat& d, const VectorXcd& v0,
                                        std::span<const double> times,
                                        const IntegrateOptions& opts = {}) {
  std::vector<VectorXcd> out(times.size());
  integrate(d, v0, times, opts, [&out](std::size_t i, double, const VectorXcd& v) { out[i] = v; });
  return out;
}

}  // namespace dickesim
