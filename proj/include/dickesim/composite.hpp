#pragma once

// Tensor composition of Liouvillians for spin-boson systems and multiple TLS
// ensembles. Factor ordering convention: bosonic factors first, then Dicke
// factors, matching the built-in scenarios; the types themselves accept any
// order.

#include <numeric>
#include <vector>

#include "dickesim/dicke_space.hpp"
#include "dickesim/linalg.hpp"
#include "dickesim/operators.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

struct Factor {
  enum class Kind { Bosonic, Dicke } kind;
  int param;  // photon cutoff n_ph, or TLS count N
  int dim;    // Hilbert dimension of the factor
};

inline Factor bosonic_factor(int n_ph) {
  if (n_ph < 2) throw std::invalid_argument("bosonic factor: cutoff must be >= 2");
  return {Factor::Kind::Bosonic, n_ph, n_ph};
}

inline Factor dicke_factor(int n_tls) {
  return {Factor::Kind::Dicke, n_tls, static_cast<int>(num_dicke_states(n_tls))};
}

struct CompositeSpace {
  std::vector<Factor> factors;

  int total_dim() const {
    return std::accumulate(factors.begin(), factors.end(), 1,
                           [](int acc, const Factor& f) { return acc * f.dim; });
  }
  int dim_before(int slot) const {
    int d = 1;
    for (int s = 0; s < slot; ++s) d *= factors[static_cast<std::size_t>(s)].dim;
    return d;
  }
  int dim_after(int slot) const {
    int d = 1;
    for (std::size_t s = static_cast<std::size_t>(slot) + 1; s < factors.size(); ++s) d *= factors[s].dim;
    return d;
  }
  const Factor& at(int slot) const {
    if (slot < 0 || slot >= static_cast<int>(factors.size()))
      throw std::invalid_argument("CompositeSpace: slot out of range");
    return factors[static_cast<std::size_t>(slot)];
  }
  std::vector<int> dims() const {
    std::vector<int> d;
    for (const auto& f : factors) d.push_back(f.dim);
    return d;
  }
};

/// Truncated annihilation operator; [a, a^dag] = 1 except at the cutoff level.
inline SpMat destroy(int n_ph) {
  if (n_ph < 2) throw std::invalid_argument("destroy: cutoff must be >= 2");
  SpMat a(n_ph, n_ph);
  for (int n = 1; n < n_ph; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  a.makeCompressed();
  return a;
}

inline SpMat number_op(int n_ph) {
  SpMat n(n_ph, n_ph);
  for (int k = 1; k < n_ph; ++k) n.insert(k, k) = static_cast<double>(k);
  n.makeCompressed();
  return n;
}

inline SpMat fock_state(int n_ph, int level) {
  if (level < 0 || level >= n_ph) throw std::invalid_argument("fock_state: level out of range");
  SpMat rho(n_ph, n_ph);
  rho.insert(level, level) = 1.0;
  rho.makeCompressed();
  return rho;
}

/// Identity-Kronecker lift of an operator onto one factor of the space.
inline SpMat lift(const SpMat& op, const CompositeSpace& space, int slot) {
  if (op.rows() != space.at(slot).dim || op.cols() != space.at(slot).dim)
    throw std::invalid_argument("lift: operator dimension does not match the slot");
  return kron(kron(sparse_identity(space.dim_before(slot)), op),
              sparse_identity(space.dim_after(slot)));
}

inline Superop identity_super(int dim) {
  return {sparse_identity(static_cast<Eigen::Index>(dim) * dim), {dim}};
}

/// Tensor product of superoperators, consistent with row-major vectorization:
/// super_tensor(spre(A), spre(B)) = spre(A (x) B).
inline Superop super_tensor(const Superop& s1, const Superop& s2) {
  check_dims(s1);
  check_dims(s2);
  const Eigen::Index d1 = s1.hilbert_dim(), d2 = s2.hilbert_dim();
  const Eigen::Index d = d1 * d2;

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(s1.mat.nonZeros()) * s2.mat.nonZeros());
  for (int k1 = 0; k1 < s1.mat.outerSize(); ++k1)
    for (SpMat::InnerIterator i1(s1.mat, k1); i1; ++i1) {
      const Eigen::Index r1 = i1.row() / d1, c1 = i1.row() % d1;
      const Eigen::Index r1p = i1.col() / d1, c1p = i1.col() % d1;
      for (int k2 = 0; k2 < s2.mat.outerSize(); ++k2)
        for (SpMat::InnerIterator i2(s2.mat, k2); i2; ++i2) {
          const Eigen::Index r2 = i2.row() / d2, c2 = i2.row() % d2;
          const Eigen::Index r2p = i2.col() / d2, c2p = i2.col() % d2;
          trips.emplace_back((r1 * d2 + r2) * d + (c1 * d2 + c2),
                             (r1p * d2 + r2p) * d + (c1p * d2 + c2p), i1.value() * i2.value());
        }
    }
  SpMat mat(d * d, d * d);
  mat.setFromTriplets(trips.begin(), trips.end());
  Superop out{std::move(mat), s1.dims};
  out.dims.insert(out.dims.end(), s2.dims.begin(), s2.dims.end());
  return out;
}

/// -i[H_B, .] + (w/2) L_{a^dag} + (kappa/2) L_a on the truncated Fock space.
inline Superop bosonic_liouvillian(int n_ph, double kappa, double w, const SpMat& h_b) {
  if (kappa < 0 || w < 0) throw std::invalid_argument("bosonic_liouvillian: rates must be >= 0");
  const SpMat a = destroy(n_ph);
  SpMat mat = hamiltonian_superoperator(h_b).mat;
  if (kappa > 0) mat += dissipator_matrix(a, kappa);
  if (w > 0) mat += dissipator_matrix(SpMat(a.adjoint()), w);
  mat.makeCompressed();
  return {std::move(mat), {n_ph}};
}

inline Superop bosonic_liouvillian(int n_ph, double kappa, double w) {
  return bosonic_liouvillian(n_ph, kappa, w, SpMat(n_ph, n_ph));
}

/// Sum of lifted collective spin operators over the given Dicke slots,
/// e.g. J_-^{(1)} + J_-^{(2)} for a joint collective channel.
inline SpMat joint_collective_op(const CompositeSpace& space, const std::vector<int>& slots,
                                 Axis axis) {
  if (slots.empty()) throw std::invalid_argument("joint_collective_op: no slots given");
  SpMat out(space.total_dim(), space.total_dim());
  for (int slot : slots) {
    const Factor& f = space.at(slot);
    if (f.kind != Factor::Kind::Dicke)
      throw std::invalid_argument("joint_collective_op: slot " + std::to_string(slot) +
                                  " is not a Dicke factor");
    out += lift(jspin(f.param, axis), space, slot);
  }
  return pruned(out);
}

}  // namespace dickesim
