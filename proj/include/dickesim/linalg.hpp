#pragma once

// Sparse superoperator plumbing. The vectorization convention is row-major
// stacking throughout: vec(A X B) = (A (x) B^T) vec(X). Every superoperator in
// the library is written against this identity.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "dickesim/types.hpp"

namespace dickesim {

/// Superoperator matrix of side dim^2 acting on row-major-vectorized density
/// matrices, with the Hilbert-space factor dimensions kept alongside.
struct Superop {
  SpMat mat;
  std::vector<int> dims;  // subsystem Hilbert dimensions, product = sqrt(side)

  int hilbert_dim() const {
    return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<int>());
  }
};

inline void check_dims(const Superop& s) {
  const Eigen::Index d = s.hilbert_dim();
  if (s.mat.rows() != d * d || s.mat.cols() != d * d)
    throw std::invalid_argument("Superop: matrix side inconsistent with dims");
}

inline VectorXcd vectorize(const SpMat& rho) {
  if (rho.rows() != rho.cols()) throw std::invalid_argument("vectorize: matrix must be square");
  const Eigen::Index d = rho.rows();
  VectorXcd v = VectorXcd::Zero(d * d);
  for (int k = 0; k < rho.outerSize(); ++k)
    for (SpMat::InnerIterator it(rho, k); it; ++it) v[it.row() * d + it.col()] = it.value();
  return v;
}

inline SpMat devectorize(const VectorXcd& v, Eigen::Index dim, double tol = kPruneTol) {
  if (v.size() != dim * dim) throw std::invalid_argument("devectorize: length is not dim^2");
  std::vector<Triplet> trips;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > tol) trips.emplace_back(i / dim, i % dim, v[i]);
  SpMat out(dim, dim);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

inline SpMat kron(const SpMat& a, const SpMat& b) {
  SpMat out = Eigen::kroneckerProduct(a, b).eval();
  out.makeCompressed();
  return out;
}

/// spre(A) vec(X) = vec(A X).
inline Superop spre(const SpMat& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("spre: operator must be square");
  return {kron(a, sparse_identity(a.rows())), {static_cast<int>(a.rows())}};
}

/// spost(B) vec(X) = vec(X B).
inline Superop spost(const SpMat& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("spost: operator must be square");
  return {kron(sparse_identity(b.rows()), SpMat(b.transpose())), {static_cast<int>(b.rows())}};
}

/// Superoperator of a single dissipation channel, (rate/2) L_A with
/// L_A[X] = 2 A X A^dag - A^dag A X - X A^dag A.
inline SpMat dissipator_matrix(const SpMat& a, double rate = 1.0) {
  const SpMat adag_a = pruned(SpMat(a.adjoint()) * a);
  SpMat out = rate * kron(a, SpMat(a.conjugate()));
  out -= (rate / 2.0) * kron(adag_a, sparse_identity(a.rows()));
  out -= (rate / 2.0) * kron(sparse_identity(a.rows()), SpMat(adag_a.transpose()));
  out.makeCompressed();
  return out;
}

/// -i [H, .] as a superoperator; H must be Hermitian within 1e-10 (relative).
inline Superop hamiltonian_superoperator(const SpMat& h) {
  if (!is_hermitian(h)) throw std::invalid_argument("hamiltonian_superoperator: H not Hermitian");
  const Eigen::Index d = h.rows();
  SpMat m = -kI * kron(h, sparse_identity(d));
  m += kI * kron(sparse_identity(d), SpMat(h.transpose()));
  // the two terms cancel exactly wherever the commutator vanishes; keeping
  // those explicit zeros would fake couplings downstream
  return {pruned(m), {static_cast<int>(d)}};
}

struct EigenSystem {
  VectorXd eigenvalues;  // ascending
  MatrixXcd eigenvectors;
};

inline EigenSystem eigensolve_hermitian(const MatrixXcd& h, double herm_tol = 1e-10) {
  if (h.rows() != h.cols()) throw std::invalid_argument("eigensolve_hermitian: matrix not square");
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1.0);
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > herm_tol * scale)
    throw std::invalid_argument("eigensolve_hermitian: matrix not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigensolve_hermitian: eigensolver failed to converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

/// One alpha * (A (x) B) term of a Kronecker sum.
struct KronTerm {
  cplx alpha;
  const SpMat* a;
  const SpMat* b;
};

/// Assembles sum_k alpha_k (A_k (x) B_k) straight into compressed column
/// storage: per-column gather, sort, merge. Avoids the triplet staging array,
/// which at Liouvillian scale (1e8+ entries) would double peak memory.
inline SpMat sum_kron(Eigen::Index rows_a, Eigen::Index rows_b, const std::vector<KronTerm>& terms,
                      double tol = kPruneTol) {
  for (const auto& t : terms)
    if (t.a->rows() != rows_a || t.b->rows() != rows_b)
      throw std::invalid_argument("sum_kron: factor dimension mismatch");
  const Eigen::Index cols_a = terms.empty() ? rows_a : terms.front().a->cols();
  const Eigen::Index cols_b = terms.empty() ? rows_b : terms.front().b->cols();
  const Eigen::Index n_rows = rows_a * rows_b, n_cols = cols_a * cols_b;

  SpMat out(n_rows, n_cols);
  std::vector<std::pair<Eigen::Index, cplx>> col;
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n_cols);

  auto gather = [&](Eigen::Index c) {
    col.clear();
    const Eigen::Index ca = c / cols_b, cb = c % cols_b;
    for (const auto& t : terms)
      for (SpMat::InnerIterator ia(*t.a, ca); ia; ++ia)
        for (SpMat::InnerIterator ib(*t.b, cb); ib; ++ib)
          col.emplace_back(ia.row() * rows_b + ib.row(), t.alpha * ia.value() * ib.value());
    std::sort(col.begin(), col.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    // merge duplicates in place
    std::size_t w = 0;
    for (std::size_t r = 0; r < col.size(); ++r) {
      if (w > 0 && col[w - 1].first == col[r].first)
        col[w - 1].second += col[r].second;
      else
        col[w++] = col[r];
    }
    col.resize(w);
    std::erase_if(col, [tol](const auto& e) { return std::abs(e.second) <= tol; });
  };

  for (Eigen::Index c = 0; c < n_cols; ++c) {
    gather(c);
    counts[c] = static_cast<int>(col.size());
  }
  out.reserve(counts);
  for (Eigen::Index c = 0; c < n_cols; ++c) {
    gather(c);
    for (const auto& [r, v] : col) out.insert(r, c) = v;
  }
  out.makeCompressed();
  return out;
}

}  // namespace dickesim
