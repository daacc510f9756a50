#pragma once

// Index geometry of the permutation-symmetric Dicke space.
//
// Density matrices of N identical two-level systems that start permutation
// symmetric stay block diagonal in the |j,m><j,m'| basis: one block per
// cooperativity number j, blocks ordered by descending j, and m descending
// inside each block (|N/2,N/2> is the top-left diagonal element). Quantum
// numbers are stored doubled (j2 = 2j, m2 = 2m) so odd N needs no
// half-integer keys.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dickesim {

struct DickeBlock {
  int j2 = 0;      // doubled cooperativity number, 2j
  int dim = 0;     // block side, 2j + 1
  int offset = 0;  // first row/column of the block in the global matrix
};

struct ElementIndex {
  int j2 = 0;
  int m2 = 0;   // doubled row quantum number
  int m2p = 0;  // doubled column quantum number
};

inline bool is_valid_j2(int n_tls, int j2) {
  return j2 >= n_tls % 2 && j2 <= n_tls && (j2 - n_tls) % 2 == 0;
}

inline bool is_valid_index(int n_tls, const ElementIndex& idx) {
  if (!is_valid_j2(n_tls, idx.j2)) return false;
  if (std::abs(idx.m2) > idx.j2 || std::abs(idx.m2p) > idx.j2) return false;
  return (idx.m2 - idx.j2) % 2 == 0 && (idx.m2p - idx.j2) % 2 == 0;
}

/// Number of Dicke states, (N/2+1)^2 - mod2(N)/4, in exact integer arithmetic.
inline std::int64_t num_dicke_states(int n_tls) {
  if (n_tls < 1) throw std::invalid_argument("num_dicke_states: ensemble size must be >= 1");
  const std::int64_t n = n_tls;
  return ((n + 2) * (n + 2) - (n % 2)) / 4;
}

/// Number of matrix elements reachable by the block-diagonal density matrix,
/// (N+1)(N+2)(N+3)/6.
inline std::int64_t num_density_elements(int n_tls) {
  if (n_tls < 1) throw std::invalid_argument("num_density_elements: ensemble size must be >= 1");
  const std::int64_t n = n_tls;
  return (n + 1) * (n + 2) * (n + 3) / 6;
}

namespace detail {

// Exact binomial with overflow detection; sufficient for every degeneracy the
// library evaluates (unsigned 128-bit carries C(n,k) well past N = 100).
inline std::uint64_t binomial_exact(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(n - k + i);
    acc /= static_cast<unsigned>(i);
    if (acc > static_cast<unsigned __int128>(UINT64_MAX))
      throw std::overflow_error("binomial_exact: value exceeds 64 bits (n=" + std::to_string(n) + ")");
  }
  return static_cast<std::uint64_t>(acc);
}

}  // namespace detail

/// Degeneracy d_N^j of the Dicke ladder with cooperativity j = j2/2; equals
/// C(N, N/2-j) - C(N, N/2-j-1), the multiplicity of the spin-j irrep.
inline std::uint64_t degeneracy(int n_tls, int j2) {
  if (n_tls < 1 || !is_valid_j2(n_tls, j2))
    throw std::invalid_argument("degeneracy: invalid (N, 2j) pair (" + std::to_string(n_tls) +
                                ", " + std::to_string(j2) + ")");
  const int k = (n_tls - j2) / 2;  // N/2 - j
  return detail::binomial_exact(n_tls, k) - detail::binomial_exact(n_tls, k - 1);
}

/// Partial degeneracy sum alpha_N^j = sum_{j'>=j} d_N^{j'} = N!/((N/2-j)!(N/2+j)!).
/// By convention alpha_N^{j} = 0 for j = N/2 + 1 (j2 = N + 2).
inline std::uint64_t alpha_coeff(int n_tls, int j2) {
  if (n_tls >= 1 && j2 == n_tls + 2) return 0;
  if (n_tls < 1 || !is_valid_j2(n_tls, j2))
    throw std::invalid_argument("alpha_coeff: invalid (N, 2j) pair (" + std::to_string(n_tls) +
                                ", " + std::to_string(j2) + ")");
  return detail::binomial_exact(n_tls, (n_tls - j2) / 2);
}

class DickeBasis {
 public:
  explicit DickeBasis(int n_tls) : n_tls_(n_tls) {
    if (n_tls < 1) throw std::invalid_argument("DickeBasis: ensemble size must be >= 1");
    int offset = 0;
    for (int j2 = n_tls; j2 >= n_tls % 2; j2 -= 2) {
      blocks_.push_back({j2, j2 + 1, offset});
      offset += j2 + 1;
    }
    n_ds_ = offset;
  }

  int n_tls() const { return n_tls_; }
  int n_ds() const { return n_ds_; }
  const std::vector<DickeBlock>& blocks() const { return blocks_; }

  int offset(int j2) const {
    if (!is_valid_j2(n_tls_, j2))
      throw std::invalid_argument("DickeBasis::offset: invalid 2j = " + std::to_string(j2));
    return blocks_[static_cast<std::size_t>((n_tls_ - j2) / 2)].offset;
  }

  /// Global (row, col) of the element |j,m><j,m'|; m descends within a block.
  std::pair<int, int> flat_index(const ElementIndex& idx) const {
    if (!is_valid_index(n_tls_, idx))
      throw std::invalid_argument("DickeBasis::flat_index: invalid element (2j=" +
                                  std::to_string(idx.j2) + ", 2m=" + std::to_string(idx.m2) +
                                  ", 2m'=" + std::to_string(idx.m2p) + ")");
    const int off = offset(idx.j2);
    return {off + (idx.j2 - idx.m2) / 2, off + (idx.j2 - idx.m2p) / 2};
  }

  /// Visits every valid (j, m, m') element, blocks in descending j and m, m'
  /// descending inside each block. The order fixes assembly determinism.
  template <typename Fn>
  void for_each_element(Fn&& fn) const {
    for (const auto& b : blocks_)
      for (int m2 = b.j2; m2 >= -b.j2; m2 -= 2)
        for (int m2p = b.j2; m2p >= -b.j2; m2p -= 2) fn(ElementIndex{b.j2, m2, m2p});
  }

  template <typename Fn>
  void for_each_diagonal(Fn&& fn) const {
    for (const auto& b : blocks_)
      for (int m2 = b.j2; m2 >= -b.j2; m2 -= 2) fn(ElementIndex{b.j2, m2, m2});
  }

  /// Inverse of flat_index. (row, col) must lie inside one diagonal block.
  ElementIndex element_at(int row, int col) const {
    for (const auto& b : blocks_) {
      if (row < b.offset || row >= b.offset + b.dim) continue;
      if (col < b.offset || col >= b.offset + b.dim)
        throw std::invalid_argument("DickeBasis::element_at: position (" + std::to_string(row) +
                                    "," + std::to_string(col) + ") is outside the diagonal blocks");
      return {b.j2, b.j2 - 2 * (row - b.offset), b.j2 - 2 * (col - b.offset)};
    }
    throw std::invalid_argument("DickeBasis::element_at: row out of range");
  }

 private:
  int n_tls_;
  int n_ds_ = 0;
  std::vector<DickeBlock> blocks_;
};

}  // namespace dickesim
