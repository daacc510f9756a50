#pragma once

// Collective spin operators in the block-diagonal Dicke basis, plus the
// exponential-size uncoupled-basis constructions used as a brute-force oracle
// for small ensembles.

#include <cstdlib>
#include <string>
#include <vector>

#include "dickesim/dicke_space.hpp"
#include "dickesim/linalg.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

enum class Axis { X, Y, Z, Plus, Minus };

inline Axis axis_from_string(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  if (s == "+" || s == "plus") return Axis::Plus;
  if (s == "-" || s == "minus") return Axis::Minus;
  throw std::invalid_argument("unknown spin axis '" + s + "'");
}

/// Ladder coefficient A^{j,m}_+- = sqrt((j -+ m)(j +- m + 1)); A_z = m.
inline double ladder_a(Axis q, double j, double m) {
  switch (q) {
    case Axis::Plus:
      return std::sqrt(std::max(0.0, (j - m) * (j + m + 1)));
    case Axis::Minus:
      return std::sqrt(std::max(0.0, (j + m) * (j - m + 1)));
    case Axis::Z:
      return m;
    default:
      throw std::invalid_argument("ladder_a: axis must be +, - or z");
  }
}

/// B^{j,m}_+- = +-sqrt((j -+ m)(j -+ m - 1)); B_z = sqrt((j + m)(j - m)).
inline double ladder_b(Axis q, double j, double m) {
  switch (q) {
    case Axis::Plus:
      return std::sqrt(std::max(0.0, (j - m) * (j - m - 1)));
    case Axis::Minus:
      return -std::sqrt(std::max(0.0, (j + m) * (j + m - 1)));
    case Axis::Z:
      return std::sqrt(std::max(0.0, (j + m) * (j - m)));
    default:
      throw std::invalid_argument("ladder_b: axis must be +, - or z");
  }
}

/// D^{j,m}_+- = -+sqrt((j +- m + 1)(j +- m + 2)); D_z = sqrt((j + m + 1)(j - m + 1)).
inline double ladder_d(Axis q, double j, double m) {
  switch (q) {
    case Axis::Plus:
      return -std::sqrt(std::max(0.0, (j + m + 1) * (j + m + 2)));
    case Axis::Minus:
      return std::sqrt(std::max(0.0, (j - m + 1) * (j - m + 2)));
    case Axis::Z:
      return std::sqrt(std::max(0.0, (j + m + 1) * (j - m + 1)));
    default:
      throw std::invalid_argument("ladder_d: axis must be +, - or z");
  }
}

/// Collective spin operator J_axis in the Dicke basis, block diagonal in j.
inline SpMat jspin(int n_tls, Axis axis) {
  const DickeBasis basis(n_tls);
  const int d = basis.n_ds();

  auto ladder = [&](Axis q) {
    std::vector<Triplet> trips;
    const int shift = (q == Axis::Plus) ? -1 : 1;  // m ascends toward smaller row index
    for (const auto& b : basis.blocks()) {
      const double j = b.j2 / 2.0;
      for (int r = 0; r < b.dim; ++r) {
        const double m = j - r;
        const double amp = ladder_a(q, j, m);
        if (amp != 0.0) trips.emplace_back(b.offset + r + shift, b.offset + r, amp);
      }
    }
    SpMat out(d, d);
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  };

  switch (axis) {
    case Axis::Plus:
      return ladder(Axis::Plus);
    case Axis::Minus:
      return ladder(Axis::Minus);
    case Axis::Z: {
      std::vector<Triplet> trips;
      for (const auto& b : basis.blocks())
        for (int r = 0; r < b.dim; ++r) {
          const double m = b.j2 / 2.0 - r;
          if (m != 0.0) trips.emplace_back(b.offset + r, b.offset + r, m);
        }
      SpMat out(d, d);
      out.setFromTriplets(trips.begin(), trips.end());
      return out;
    }
    case Axis::X:
      return pruned(SpMat(0.5 * (ladder(Axis::Plus) + ladder(Axis::Minus))));
    case Axis::Y:
      return pruned(SpMat(-0.5 * kI * SpMat(ladder(Axis::Plus) - ladder(Axis::Minus))));
  }
  throw std::logic_error("jspin: unreachable");
}

/// Casimir J^2, diagonal with j(j+1) per block.
inline SpMat j2_operator(int n_tls) {
  const DickeBasis basis(n_tls);
  std::vector<Triplet> trips;
  for (const auto& b : basis.blocks()) {
    const double j = b.j2 / 2.0;
    for (int r = 0; r < b.dim; ++r) trips.emplace_back(b.offset + r, b.offset + r, j * (j + 1));
  }
  SpMat out(basis.n_ds(), basis.n_ds());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

// ---------------------------------------------------------------------------
// Uncoupled (2^N product) basis. Site basis per TLS is {|e>, |g>} with
// J_z|e> = +1/2|e>, so the fully excited product state is index 0.

inline int oracle_cap() {
  if (const char* env = std::getenv("DICKESIM_ORACLE_CAP")) return std::atoi(env);
  return 8;
}

inline void check_oracle_cap(int n_tls, int cap) {
  if (n_tls > cap)
    throw std::invalid_argument("uncoupled basis: N = " + std::to_string(n_tls) +
                                " exceeds the oracle cap " + std::to_string(cap));
}

/// Single-site spin operator J_{axis,site} lifted to the 2^N space
/// (sigma_alpha/2 for x,y,z; sigma_+- for the ladder axes).
inline SpMat uncoupled_operator(int n_tls, Axis axis, int site, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  if (site < 0 || site >= n_tls) throw std::invalid_argument("uncoupled_operator: site out of range");

  SpMat op(2, 2);
  switch (axis) {
    case Axis::X:
      op.insert(0, 1) = 0.5;
      op.insert(1, 0) = 0.5;
      break;
    case Axis::Y:
      op.insert(0, 1) = -0.5 * kI;
      op.insert(1, 0) = 0.5 * kI;
      break;
    case Axis::Z:
      op.insert(0, 0) = 0.5;
      op.insert(1, 1) = -0.5;
      break;
    case Axis::Plus:
      op.insert(0, 1) = 1.0;
      break;
    case Axis::Minus:
      op.insert(1, 0) = 1.0;
      break;
  }
  op.makeCompressed();

  SpMat out = sparse_identity(1);
  for (int s = 0; s < n_tls; ++s) out = kron(out, s == site ? op : sparse_identity(2));
  return out;
}

/// Collective operator sum_n J_{axis,n} in the 2^N space.
inline SpMat uncoupled_collective(int n_tls, Axis axis, int cap = oracle_cap()) {
  check_oracle_cap(n_tls, cap);
  const Eigen::Index dim = Eigen::Index(1) << n_tls;
  SpMat out(dim, dim);
  for (int s = 0; s < n_tls; ++s) out += uncoupled_operator(n_tls, axis, s, cap);
  return pruned(out);
}

}  // namespace dickesim
