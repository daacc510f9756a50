#pragma once

// Named density matrices in the Dicke basis and their uncoupled-basis
// counterparts (the oracle side of cross-basis tests).

#include <cmath>
#include <string>
#include <vector>

#include "dickesim/dicke_space.hpp"
#include "dickesim/operators.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

/// |j,m><j,m| as a density matrix in the Dicke basis.
inline SpMat dicke_state(int n_tls, int j2, int m2) {
  const DickeBasis basis(n_tls);
  const auto [r, c] = basis.flat_index({j2, m2, m2});
  SpMat rho(basis.n_ds(), basis.n_ds());
  rho.insert(r, c) = 1.0;
  rho.makeCompressed();
  return rho;
}

inline SpMat excited(int n_tls) { return dicke_state(n_tls, n_tls, n_tls); }
inline SpMat ground(int n_tls) { return dicke_state(n_tls, n_tls, -n_tls); }

/// GHZ state: four entries of magnitude 1/2 at the corners of the j = N/2 block.
inline SpMat ghz(int n_tls) {
  const DickeBasis basis(n_tls);
  SpMat rho(basis.n_ds(), basis.n_ds());
  const int top = 0, bot = n_tls;  // rows of |N/2,N/2> and |N/2,-N/2>
  rho.insert(top, top) = 0.5;
  rho.insert(top, bot) = 0.5;
  rho.insert(bot, top) = 0.5;
  rho.insert(bot, bot) = 0.5;
  rho.makeCompressed();
  return rho;
}

namespace detail {

inline std::vector<cplx> css_amplitudes(int n_tls, cplx a, cplx b) {
  if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-10)
    throw std::invalid_argument("css: |a|^2 + |b|^2 must equal 1");
  // c_m = sqrt(C(N, N/2+m)) a^{N/2+m} b^{N/2-m}, m descending from N/2.
  std::vector<cplx> c(static_cast<std::size_t>(n_tls) + 1);
  for (int k = n_tls; k >= 0; --k) {
    const double lg = 0.5 * (std::lgamma(n_tls + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n_tls - k + 1.0));
    c[static_cast<std::size_t>(n_tls - k)] = std::exp(lg) * std::pow(a, k) * std::pow(b, n_tls - k);
  }
  return c;
}

}  // namespace detail

/// Coherent spin state in cartesian coordinates; the literal amplitudes are
/// stored with no global-phase normalization, so a = -b and a = b differ
/// exactly by the signs of odd-distance coherences.
inline SpMat css(int n_tls, cplx a, cplx b) {
  const DickeBasis basis(n_tls);
  const auto c = detail::css_amplitudes(n_tls, a, b);
  std::vector<Triplet> trips;
  for (std::size_t r = 0; r < c.size(); ++r)
    for (std::size_t cc = 0; cc < c.size(); ++cc) {
      const cplx v = c[r] * std::conj(c[cc]);
      if (std::abs(v) > kPruneTol) trips.emplace_back(r, cc, v);
    }
  SpMat rho(basis.n_ds(), basis.n_ds());
  rho.setFromTriplets(trips.begin(), trips.end());
  return rho;
}

/// Polar form, a = cos(theta/2), b = e^{i phi} sin(theta/2).
inline SpMat css_polar(int n_tls, double theta, double phi) {
  return css(n_tls, std::cos(theta / 2.0), std::exp(kI * phi) * std::sin(theta / 2.0));
}

// ---------------------------------------------------------------------------
// Uncoupled-basis states (2^N).

inline SpMat uncoupled_from_ket(const VectorXcd& ket) {
  std::vector<Triplet> trips;
  for (Eigen::Index r = 0; r < ket.size(); ++r) {
    if (std::abs(ket[r]) <= kPruneTol) continue;
    for (Eigen::Index c = 0; c < ket.size(); ++c) {
      const cplx v = ket[r] * std::conj(ket[c]);
      if (std::abs(v) > kPruneTol) trips.emplace_back(r, c, v);
    }
  }
  SpMat rho(ket.size(), ket.size());
  rho.setFromTriplets(trips.begin(), trips.end());
  return rho;
}

inline SpMat uncoupled_excited(int n_tls, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  VectorXcd ket = VectorXcd::Zero(Eigen::Index(1) << n_tls);
  ket[0] = 1.0;
  return uncoupled_from_ket(ket);
}

inline SpMat uncoupled_ground(int n_tls, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  const Eigen::Index dim = Eigen::Index(1) << n_tls;
  VectorXcd ket = VectorXcd::Zero(dim);
  ket[dim - 1] = 1.0;
  return uncoupled_from_ket(ket);
}

inline SpMat uncoupled_ghz(int n_tls, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  const Eigen::Index dim = Eigen::Index(1) << n_tls;
  VectorXcd ket = VectorXcd::Zero(dim);
  ket[0] = ket[dim - 1] = 1.0 / std::sqrt(2.0);
  return uncoupled_from_ket(ket);
}

inline SpMat uncoupled_css(int n_tls, cplx a, cplx b, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  if (std::abs(std::norm(a) + std::norm(b) - 1.0) > 1e-10)
    throw std::invalid_argument("uncoupled_css: |a|^2 + |b|^2 must equal 1");
  const Eigen::Index dim = Eigen::Index(1) << n_tls;
  VectorXcd ket(dim);
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    cplx amp = 1.0;
    for (int s = 0; s < n_tls; ++s) amp *= ((idx >> (n_tls - 1 - s)) & 1) ? b : a;
    ket[idx] = amp;
  }
  return uncoupled_from_ket(ket);
}

inline SpMat uncoupled_state(const std::string& name, int n_tls, int cap = oracle_cap()) {
  if (name == "excited") return uncoupled_excited(n_tls, cap);
  if (name == "ground") return uncoupled_ground(n_tls, cap);
  if (name == "ghz") return uncoupled_ghz(n_tls, cap);
  if (name == "css+") return uncoupled_css(n_tls, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), cap);
  if (name == "css-") return uncoupled_css(n_tls, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), cap);
  throw std::invalid_argument("uncoupled_state: unknown state '" + name + "'");
}

}  // namespace dickesim
