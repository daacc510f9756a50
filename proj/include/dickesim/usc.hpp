#pragma once

// Ultrastrong-coupling dressed master equation. The light-matter Hamiltonian
// is diagonalized once; dressed jump rates for the cavity and for the local
// TLS channels come out of the permutation-symmetric jump superoperators, so
// no 2^N-space operator is ever formed. The assembled generator lives in the
// dressed eigenbasis (H diagonal, jumps elementary); DressedBasis converts
// states and observables.

#include <vector>

#include "dickesim/composite.hpp"
#include "dickesim/linalg.hpp"
#include "dickesim/liouvillian.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

struct DressedBasis {
  VectorXd energies;    // ascending
  MatrixXcd vectors;    // columns are the dressed eigenstates
  int dim = 0;

  MatrixXcd to_dressed(const SpMat& op) const { return vectors.adjoint() * MatrixXcd(op) * vectors; }

  SpMat to_dressed_sparse(const SpMat& op, double tol = 1e-14) const {
    const MatrixXcd m = to_dressed(op);
    std::vector<Triplet> trips;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        if (std::abs(m(r, c)) > tol) trips.emplace_back(r, c, m(r, c));
    SpMat out(m.rows(), m.cols());
    out.setFromTriplets(trips.begin(), trips.end());
    return out;
  }
};

/// Full dense diagonalization of the composite Hamiltonian (desk scale).
inline DressedBasis dressed_basis(const SpMat& h_composite) {
  const MatrixXcd h = MatrixXcd(h_composite);
  EigenSystem es = eigensolve_hermitian(h);
  const double scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
  const double resid =
      (h * es.eigenvectors - es.eigenvectors * es.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
  if (resid > 1e-9 * scale * static_cast<double>(h.rows()))
    throw std::runtime_error("dressed_basis: eigen residual too large");
  return {std::move(es.eigenvalues), std::move(es.eigenvectors), static_cast<int>(h.rows())};
}

/// |<r|X|s>|^2 for all dressed pairs (X = a + a^dag lifted by the caller).
inline MatrixXd dressed_cavity_weights(const DressedBasis& basis, const SpMat& x_op) {
  const MatrixXcd xd = basis.to_dressed(x_op);
  return xd.cwiseAbs2();
}

enum class LocalCoupling { Jx, Jminus };

/// sum_n |<r| J_{x,n} |s>|^2 (or |J_{-,n}|^2 in the rotating-wave variant),
/// evaluated through T_qr applied to dressed projectors lifted to the
/// composite space:
///   sum_n <r|J_{q,n}|s> <s|J_{q',n}^dag|r>  =  <r| T_{q q'}[|s><s|] |r> .
inline MatrixXd dressed_local_weights(const DressedBasis& basis, const CompositeSpace& space,
                                      int dicke_slot, LocalCoupling coupling = LocalCoupling::Jx) {
  const Factor& f = space.at(dicke_slot);
  if (f.kind != Factor::Kind::Dicke)
    throw std::invalid_argument("dressed_local_weights: slot is not a Dicke factor");
  const int n_tls = f.param;
  const Eigen::Index dim = space.total_dim();
  if (basis.dim != dim) throw std::invalid_argument("dressed_local_weights: basis/space mismatch");

  auto lift_super = [&](const Superop& s) {
    Superop out = identity_super(space.dim_before(dicke_slot));
    out = super_tensor(out, s);
    out = super_tensor(out, identity_super(space.dim_after(dicke_slot)));
    return out;
  };

  std::vector<Superop> ts;
  if (coupling == LocalCoupling::Jx) {
    ts.push_back(lift_super(jump_superoperator(n_tls, Axis::Plus, Axis::Plus)));
    ts.push_back(lift_super(jump_superoperator(n_tls, Axis::Minus, Axis::Minus)));
    ts.push_back(lift_super(jump_superoperator(n_tls, Axis::Plus, Axis::Minus)));
  } else {
    ts.push_back(lift_super(jump_superoperator(n_tls, Axis::Minus, Axis::Minus)));
  }

  MatrixXd w = MatrixXd::Zero(dim, dim);
  VectorXcd proj_vec(dim * dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    const VectorXcd v = basis.vectors.col(s);
    for (Eigen::Index r = 0; r < dim; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) proj_vec[r * dim + c] = v[r] * std::conj(v[c]);

    auto diag_in_dressed = [&](const Superop& t) -> VectorXcd {
      const VectorXcd img = t.mat * proj_vec;
      MatrixXcd m(dim, dim);
      for (Eigen::Index r = 0; r < dim; ++r)
        for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = img[r * dim + c];
      const MatrixXcd md = basis.vectors.adjoint() * m * basis.vectors;
      return md.diagonal();
    };

    if (coupling == LocalCoupling::Jx) {
      const VectorXcd pp = diag_in_dressed(ts[0]);
      const VectorXcd mm = diag_in_dressed(ts[1]);
      const VectorXcd pm = diag_in_dressed(ts[2]);
      for (Eigen::Index r = 0; r < dim; ++r)
        w(r, s) = 0.25 * (pp[r].real() + mm[r].real() + 2.0 * pm[r].real());
    } else {
      const VectorXcd mm = diag_in_dressed(ts[0]);
      for (Eigen::Index r = 0; r < dim; ++r) w(r, s) = mm[r].real();
    }
  }
  // absolute squares; clip eigensolver noise
  return w.cwiseMax(0.0);
}

struct DressedOptions {
  LocalCoupling coupling = LocalCoupling::Jx;
  double degeneracy_tol = 1e-9;  // relative energy gap below which jumps are dropped
};

/// Zero-temperature dressed Liouvillian, expressed in the dressed eigenbasis:
///   -i[H, .] + sum_{r, s>r} [kappa/2 |X^{rs}|^2 + gamma_down/2 sum_n |J_{x,n}^{rs}|^2] L_{|r><s|}.
/// Jumps run from higher to lower energy only, so the dressed ground state is
/// exactly stationary.
inline Superop dressed_liouvillian(const DressedBasis& basis, double kappa, double gamma_down,
                                   const MatrixXd& cavity_w, const MatrixXd& local_w,
                                   const DressedOptions& opts = {}) {
  if (kappa < 0 || gamma_down < 0)
    throw std::invalid_argument("dressed_liouvillian: rates must be >= 0");
  const Eigen::Index dim = basis.dim;
  const double scale = std::max(basis.energies.cwiseAbs().maxCoeff(), 1e-300);

  std::vector<Triplet> trips;
  VectorXd depletion = VectorXd::Zero(dim);  // sum over r of rates out of s
  for (Eigen::Index s = 0; s < dim; ++s)
    for (Eigen::Index r = 0; r < s; ++r) {
      if (basis.energies[s] - basis.energies[r] < opts.degeneracy_tol * scale) continue;
      const double w = kappa * cavity_w(r, s) + gamma_down * local_w(r, s);
      if (w == 0.0) continue;
      trips.emplace_back(r * dim + r, s * dim + s, w);  // 2 A rho A^dag jump gain
      depletion[s] += w;
    }
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index k = 0; k < dim; ++k) {
      const cplx ham = -kI * (basis.energies[i] - basis.energies[k]);
      const cplx anti = -0.5 * (depletion[i] + depletion[k]);
      const cplx v = ham + anti;
      if (v != cplx(0.0)) trips.emplace_back(i * dim + k, i * dim + k, v);
    }
  SpMat mat(dim * dim, dim * dim);
  mat.setFromTriplets(trips.begin(), trips.end());
  return {std::move(mat), {static_cast<int>(dim)}};
}

/// Downward-filtered quadrature X+ = sum_{s>r} X^{rs} |r><s| (dressed basis);
/// the collapse operator of the cavity channel and the emission operator of
/// the dressed-picture spectrum.
inline SpMat dressed_lowering(const DressedBasis& basis, const SpMat& x_op, double degeneracy_tol = 1e-9) {
  const MatrixXcd xd = basis.to_dressed(x_op);
  const double scale = std::max(basis.energies.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Triplet> trips;
  for (Eigen::Index s = 0; s < basis.dim; ++s)
    for (Eigen::Index r = 0; r < s; ++r) {
      if (basis.energies[s] - basis.energies[r] < degeneracy_tol * scale) continue;
      if (std::abs(xd(r, s)) > 1e-14) trips.emplace_back(r, s, xd(r, s));
    }
  SpMat out(basis.dim, basis.dim);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace dickesim
