#pragma once

// Symmetrized Lindbladian of N identical TLSs under local and collective
// emission, dephasing and pumping. Two independent assembly routes are kept:
// the nine-rate table (production path) and the composition from generic
// permutation-symmetric jump superoperators (cross-check path).

#include <array>
#include <vector>

#include "dickesim/dicke_space.hpp"
#include "dickesim/linalg.hpp"
#include "dickesim/operators.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

/// The six TLS dissipation coefficients, all in units of inverse time.
struct Rates {
  double collective_emission = 0.0;   // gamma_{big down}
  double collective_dephasing = 0.0;  // gamma_{big Phi}
  double collective_pumping = 0.0;    // gamma_{big up}
  double local_emission = 0.0;        // gamma_down
  double local_dephasing = 0.0;       // gamma_phi
  double local_pumping = 0.0;         // gamma_up

  void validate() const {
    for (double g : {collective_emission, collective_dephasing, collective_pumping,
                     local_emission, local_dephasing, local_pumping})
      if (!(g >= 0.0)) throw std::invalid_argument("Rates: coefficients must be non-negative");
  }

  /// Detailed-balance pair gamma_down = g0 (1 + nT), gamma_up = g0 nT.
  static Rates detailed_balance(double g0, double n_thermal) {
    Rates r;
    r.local_emission = g0 * (1.0 + n_thermal);
    r.local_pumping = g0 * n_thermal;
    return r;
  }
};

/// The nine rates feeding element (j, m, m'): index 0 is the depletion term
/// Gamma^(1); indices 1..8 are the gain terms Gamma^(2..9) evaluated at the
/// *source* element. Rates whose source or target lies outside the Dicke
/// space are zero; every 1/j factor is guarded at j = 0, where the matching
/// numerators vanish.
using GammaRates = std::array<double, 9>;

inline GammaRates gamma_rates(int n_tls, const Rates& g, const ElementIndex& idx) {
  if (!is_valid_index(n_tls, idx)) throw std::invalid_argument("gamma_rates: invalid element index");
  const double n = n_tls;
  const double j = idx.j2 / 2.0, m = idx.m2 / 2.0, mp = idx.m2p / 2.0;
  const bool jz = idx.j2 == 0;

  const double am = ladder_a(Axis::Minus, j, m), amp = ladder_a(Axis::Minus, j, mp);
  const double ap = ladder_a(Axis::Plus, j, m), app = ladder_a(Axis::Plus, j, mp);
  const double fa = jz ? 0.0 : (n / 2 + 1) / (j * (j + 1));
  const double fb = jz ? 0.0 : (n / 2 + j + 1) / (j * (2 * j + 1));
  const double fc = (n / 2 - j) / ((j + 1) * (2 * j + 1));

  GammaRates out{};
  out[0] = g.collective_emission / 2 * (am * am + amp * amp) +
           g.collective_pumping / 2 * (ap * ap + app * app) +
           g.collective_dephasing / 2 * (m - mp) * (m - mp) +
           g.local_emission / 2 * (n + m + mp) + g.local_pumping / 2 * (n - m - mp) +
           g.local_dephasing / 2 * (n / 2 - (jz ? 0.0 : m * mp * (n / 2 + 1) / (j * (j + 1))));
  out[1] = am * amp * (g.collective_emission + g.local_emission / 2 * fa);
  out[2] = g.local_emission / 2 * ladder_b(Axis::Minus, j, m) * ladder_b(Axis::Minus, j, mp) * fb;
  out[3] = g.local_emission / 2 * ladder_d(Axis::Minus, j, m) * ladder_d(Axis::Minus, j, mp) * fc;
  out[4] = g.local_dephasing / 2 * ladder_b(Axis::Z, j, m) * ladder_b(Axis::Z, j, mp) * fb;
  out[5] = g.local_dephasing / 2 * ladder_d(Axis::Z, j, m) * ladder_d(Axis::Z, j, mp) * fc;
  out[6] = g.local_pumping / 2 * ladder_b(Axis::Plus, j, m) * ladder_b(Axis::Plus, j, mp) * fb;
  out[7] = ap * app * (g.collective_pumping + g.local_pumping / 2 * fa);
  out[8] = g.local_pumping / 2 * ladder_d(Axis::Plus, j, m) * ladder_d(Axis::Plus, j, mp) * fc;
  return out;
}

namespace detail {

/// Target element fed by Gamma^(i+1) evaluated at the source; i in 0..8.
inline ElementIndex gamma_target(const ElementIndex& src, int i) {
  static constexpr int dj2[9] = {0, 0, -2, +2, -2, +2, -2, 0, +2};
  static constexpr int dm2[9] = {0, -2, -2, -2, 0, 0, +2, +2, +2};
  return {src.j2 + dj2[i], src.m2 + dm2[i], src.m2p + dm2[i]};
}

}  // namespace detail

/// Dissipative part L-tilde of the vectorized generator, assembled from the
/// nine-rate table. Rows exist only at valid block positions of the
/// n_ds^2-sided matrix.
inline Superop lindbladian(int n_tls, const Rates& rates) {
  rates.validate();
  const DickeBasis basis(n_tls);
  const Eigen::Index nds = basis.n_ds();
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(num_density_elements(n_tls)) * 9);

  basis.for_each_element([&](const ElementIndex& src) {
    const auto [sr, sc] = basis.flat_index(src);
    const Eigen::Index col = sr * nds + sc;
    const GammaRates g = gamma_rates(n_tls, rates, src);
    if (g[0] != 0.0) trips.emplace_back(col, col, -g[0]);
    for (int i = 1; i < 9; ++i) {
      if (g[i] == 0.0) continue;
      const ElementIndex tgt = detail::gamma_target(src, i);
      if (!is_valid_index(n_tls, tgt)) continue;
      const auto [tr, tc] = basis.flat_index(tgt);
      trips.emplace_back(tr * nds + tc, col, g[i]);
    }
  });

  SpMat mat(nds * nds, nds * nds);
  mat.setFromTriplets(trips.begin(), trips.end());
  return {std::move(mat), {static_cast<int>(nds)}};
}

/// Generic permutation-symmetric jump superoperator
///   T_qr[X] = sum_n J_{q,n} X J_{r,n}^dag ,   q, r in {+, -, z},
/// mapping block j to blocks j, j+-1 with ket shift q and bra shift r.
inline Superop jump_superoperator(int n_tls, Axis q, Axis r) {
  if (q == Axis::X || q == Axis::Y || r == Axis::X || r == Axis::Y)
    throw std::invalid_argument("jump_superoperator: axes must be +, - or z");
  const DickeBasis basis(n_tls);
  const Eigen::Index nds = basis.n_ds();
  const double n = n_tls;
  auto shift2 = [](Axis a) { return a == Axis::Plus ? 2 : (a == Axis::Minus ? -2 : 0); };
  const int dq2 = shift2(q), dr2 = shift2(r);

  std::vector<Triplet> trips;
  basis.for_each_element([&](const ElementIndex& src) {
    const auto [sr, sc] = basis.flat_index(src);
    const Eigen::Index col = sr * nds + sc;
    const double j = src.j2 / 2.0, m = src.m2 / 2.0, mp = src.m2p / 2.0;
    const bool jz = src.j2 == 0;
    const double xa = jz ? 0.0 : (n / 2 + 1) / (j * (j + 1));
    const double xb = jz ? 0.0 : (n / 2 + j + 1) / (j * (2 * j + 1));
    const double xc = (n / 2 - j) / ((j + 1) * (2 * j + 1));

    const double coeff[3] = {ladder_a(q, j, m) * ladder_a(r, j, mp) * xa / 2,
                             ladder_b(q, j, m) * ladder_b(r, j, mp) * xb / 2,
                             ladder_d(q, j, m) * ladder_d(r, j, mp) * xc / 2};
    const int dj2[3] = {0, -2, +2};
    for (int k = 0; k < 3; ++k) {
      if (coeff[k] == 0.0) continue;
      const ElementIndex tgt{src.j2 + dj2[k], src.m2 + dq2, src.m2p + dr2};
      if (!is_valid_index(n_tls, tgt)) continue;
      const auto [tr, tc] = basis.flat_index(tgt);
      trips.emplace_back(tr * nds + tc, col, coeff[k]);
    }
  });

  SpMat mat(nds * nds, nds * nds);
  mat.setFromTriplets(trips.begin(), trips.end());
  return {std::move(mat), {static_cast<int>(nds)}};
}

namespace detail {

/// Restricts a superoperator to the physical block pattern: entries whose row
/// or column decodes to a cross-block coherence are dropped. The spre/spost
/// compositions carry decay terms for those never-populated sectors; the
/// gamma-table path is structurally zero there.
inline SpMat mask_to_block_pattern(const SpMat& m, int n_tls) {
  const DickeBasis basis(n_tls);
  const Eigen::Index nds = basis.n_ds();
  std::vector<char> valid(static_cast<std::size_t>(nds * nds), 0);
  basis.for_each_element([&](const ElementIndex& e) {
    const auto [r, c] = basis.flat_index(e);
    valid[static_cast<std::size_t>(r * nds + c)] = 1;
  });
  SpMat out = m;
  out.prune([&](Eigen::Index r, Eigen::Index c, const cplx&) {
    return valid[static_cast<std::size_t>(r)] && valid[static_cast<std::size_t>(c)];
  });
  return out;
}

}  // namespace detail

/// Cross-check assembly of the Lindbladian through T_qr plus the
/// anticommutator parts; must match `lindbladian` to 1e-12.
inline Superop lindbladian_from_jumps(int n_tls, const Rates& rates) {
  rates.validate();
  const Eigen::Index nds = num_dicke_states(n_tls);
  const SpMat jz = jspin(n_tls, Axis::Z);
  const SpMat id = sparse_identity(nds);
  const double n = n_tls;

  SpMat mat(nds * nds, nds * nds);
  if (rates.collective_emission > 0)
    mat += dissipator_matrix(jspin(n_tls, Axis::Minus), rates.collective_emission);
  if (rates.collective_dephasing > 0) mat += dissipator_matrix(jz, rates.collective_dephasing);
  if (rates.collective_pumping > 0)
    mat += dissipator_matrix(jspin(n_tls, Axis::Plus), rates.collective_pumping);

  if (rates.local_emission > 0) {
    const SpMat half = SpMat(jz + (n / 2) * id);
    mat += rates.local_emission *
           SpMat(jump_superoperator(n_tls, Axis::Minus, Axis::Minus).mat -
                 0.5 * (spre(half).mat + spost(half).mat));
  }
  if (rates.local_dephasing > 0) {
    mat += rates.local_dephasing *
           SpMat(jump_superoperator(n_tls, Axis::Z, Axis::Z).mat -
                 (n / 4) * sparse_identity(nds * nds));
  }
  if (rates.local_pumping > 0) {
    const SpMat half = SpMat(jz - (n / 2) * id);
    mat += rates.local_pumping *
           SpMat(jump_superoperator(n_tls, Axis::Plus, Axis::Plus).mat +
                 0.5 * (spre(half).mat + spost(half).mat));
  }
  mat = detail::mask_to_block_pattern(mat, n_tls);
  mat.makeCompressed();
  return {std::move(mat), {static_cast<int>(nds)}};
}

/// Full generator D = -i[H, .] + L-tilde. H must respect permutational
/// symmetry, which is enforced by checking [H, J^2] = 0.
inline Superop liouvillian(int n_tls, const Rates& rates, const SpMat& h) {
  const Eigen::Index nds = num_dicke_states(n_tls);
  if (h.rows() != nds || h.cols() != nds)
    throw std::invalid_argument("liouvillian: H has wrong dimension for the Dicke basis");
  const SpMat j2 = j2_operator(n_tls);
  const SpMat comm = pruned(SpMat(h * j2 - j2 * h));
  const double scale = std::max(inf_norm(h), 1.0) * std::max(inf_norm(j2), 1.0);
  if (inf_norm(comm) > 1e-10 * scale)
    throw std::invalid_argument(
        "liouvillian: H does not commute with J^2 and would mix j blocks; "
        "permutational symmetry requires H built from collective operators");

  Superop out = lindbladian(n_tls, rates);
  out.mat += hamiltonian_superoperator(h).mat;
  out.mat.makeCompressed();
  return out;
}

inline Superop liouvillian(int n_tls, const Rates& rates) { return lindbladian(n_tls, rates); }

/// Rate matrix M of the diagonal (population-only) problem, dp/dt = M p with
/// p ordered by descending j, then descending m. Columns sum to zero; only
/// numerically nonzero rates are stored.
inline SpMat rate_matrix(int n_tls, const Rates& rates) {
  rates.validate();
  const DickeBasis basis(n_tls);
  std::vector<Triplet> trips;
  basis.for_each_diagonal([&](const ElementIndex& src) {
    const int col = basis.flat_index(src).first;
    const GammaRates g = gamma_rates(n_tls, rates, src);
    if (g[0] != 0.0) trips.emplace_back(col, col, -g[0]);
    for (int i = 1; i < 9; ++i) {
      if (g[i] == 0.0) continue;
      const ElementIndex tgt = detail::gamma_target(src, i);
      if (!is_valid_index(n_tls, tgt)) continue;
      trips.emplace_back(basis.flat_index(tgt).first, col, g[i]);
    }
  });
  SpMat m(basis.n_ds(), basis.n_ds());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

/// Brute-force 4^N Liouvillian with explicit site operators; the oracle the
/// Dicke-basis path is validated against. Assembled as a Kronecker sum
/// streamed into compressed storage, never through a triplet stage.
inline Superop uncoupled_liouvillian(int n_tls, const Rates& rates, const SpMat& h_uncoupled,
                                     int cap = oracle_cap()) {
  rates.validate();
  check_oracle_cap(n_tls, cap);
  const Eigen::Index dim = Eigen::Index(1) << n_tls;
  if (h_uncoupled.rows() != dim || h_uncoupled.cols() != dim)
    throw std::invalid_argument("uncoupled_liouvillian: H has wrong dimension for the 2^N basis");
  if (!is_hermitian(h_uncoupled))
    throw std::invalid_argument("uncoupled_liouvillian: H not Hermitian");

  std::vector<SpMat> hold;  // keeps factor matrices alive for sum_kron
  hold.reserve(6 * static_cast<std::size_t>(n_tls) + 16);
  std::vector<KronTerm> terms;
  SpMat anticomm(dim, dim);  // sum_k (rate_k/2) A_k^dag A_k

  auto add_jump = [&](const SpMat& a, double rate) {
    if (rate <= 0.0) return;
    hold.push_back(a);
    const SpMat& kept = hold.back();
    hold.push_back(SpMat(kept.conjugate()));
    terms.push_back({rate, &hold[hold.size() - 2], &hold.back()});
    anticomm += (rate / 2.0) * pruned(SpMat(SpMat(kept.adjoint()) * kept));
  };

  add_jump(uncoupled_collective(n_tls, Axis::Minus, cap), rates.collective_emission);
  add_jump(uncoupled_collective(n_tls, Axis::Z, cap), rates.collective_dephasing);
  add_jump(uncoupled_collective(n_tls, Axis::Plus, cap), rates.collective_pumping);
  for (int s = 0; s < n_tls; ++s) {
    add_jump(uncoupled_operator(n_tls, Axis::Minus, s, cap), rates.local_emission);
    add_jump(uncoupled_operator(n_tls, Axis::Z, s, cap), rates.local_dephasing);
    add_jump(uncoupled_operator(n_tls, Axis::Plus, s, cap), rates.local_pumping);
  }

  // -i H - sum (rate/2) A^dag A on the left, its mirror on the right
  hold.push_back(pruned(SpMat(-kI * h_uncoupled - anticomm)));
  hold.push_back(sparse_identity(dim));
  const SpMat& left = hold[hold.size() - 2];
  const SpMat& id = hold.back();
  terms.push_back({1.0, &left, &id});
  hold.push_back(SpMat(SpMat(kI * h_uncoupled - anticomm).transpose()));
  terms.push_back({1.0, &id, &hold.back()});

  return {sum_kron(dim, dim, terms), {static_cast<int>(dim)}};
}

}  // namespace dickesim
