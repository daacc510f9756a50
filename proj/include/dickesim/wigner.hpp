#pragma once

// Wigner function of a bosonic state on a phase-space grid, evaluated through
// the Fock-basis expansion with generalized Laguerre polynomials (forward
// recurrence). Conventions: alpha = (x + i p)/sqrt(2), vacuum ->
// exp(-x^2-p^2)/pi, and the grid integrates to Tr(rho) with measure dx dp.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dickesim/types.hpp"

namespace dickesim {

inline MatrixXd wigner(const SpMat& rho_ph, std::span<const double> xs, std::span<const double> ps,
                       double tail_tol = 1e-6, std::string* warning = nullptr) {
  if (rho_ph.rows() != rho_ph.cols()) throw std::invalid_argument("wigner: state must be square");
  const int n_ph = static_cast<int>(rho_ph.rows());
  const MatrixXcd rho = MatrixXcd(rho_ph);

  const double tail = std::abs(rho(n_ph - 1, n_ph - 1));
  if (tail > tail_tol) {
    const std::string msg = "wigner: top Fock level holds population " + std::to_string(tail) +
                            "; cutoff too small for the requested grid";
    if (warning)
      *warning = msg;
    else
      throw std::runtime_error(msg);
  }

  // sqrt(n!/m!) factors for m >= n, filled once
  MatrixXd fac = MatrixXd::Ones(n_ph, n_ph);
  for (int n = 0; n < n_ph; ++n)
    for (int m = n + 1; m < n_ph; ++m) fac(n, m) = fac(n, m - 1) / std::sqrt(static_cast<double>(m));

  MatrixXd w(xs.size(), ps.size());
  std::vector<double> lag(static_cast<std::size_t>(n_ph));
  for (std::size_t ix = 0; ix < xs.size(); ++ix)
    for (std::size_t ip = 0; ip < ps.size(); ++ip) {
      const cplx alpha = (xs[ix] + kI * ps[ip]) / std::sqrt(2.0);
      const double z = 4.0 * std::norm(alpha);
      const double gauss = std::exp(-0.5 * z) / M_PI;
      double acc = 0.0;
      for (int d = 0; d < n_ph; ++d) {
        // L_n^{(d)}(z) by the three-term recurrence, n = 0 .. n_ph-1-d
        const int n_max = n_ph - d;
        lag[0] = 1.0;
        if (n_max > 1) lag[1] = 1.0 + d - z;
        for (int n = 2; n < n_max; ++n)
          lag[static_cast<std::size_t>(n)] =
              ((2.0 * n - 1.0 + d - z) * lag[static_cast<std::size_t>(n - 1)] -
               (n - 1.0 + d) * lag[static_cast<std::size_t>(n - 2)]) /
              n;
        const cplx pref = std::pow(2.0 * alpha, d);
        cplx term = 0.0;
        for (int n = 0; n + d < n_ph; ++n) {
          const cplx r = rho(n, n + d);
          if (r == cplx(0.0)) continue;
          const double sign = (n % 2 == 0) ? 1.0 : -1.0;
          term += r * sign * fac(n, n + d) * lag[static_cast<std::size_t>(n)];
        }
        acc += (d == 0) ? (pref * term).real() : 2.0 * (pref * term).real();
      }
      w(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(ip)) = gauss * acc;
    }
  return w;
}

}  // namespace dickesim
