#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace dickesim {

using cplx = std::complex<double>;
using SpMat = Eigen::SparseMatrix<cplx>;
using SpMatRM = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<cplx>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};

/// Default magnitude below which explicit entries are dropped on finalize.
inline constexpr double kPruneTol = 1e-15;

inline SpMat pruned(const SpMat& m, double tol = kPruneTol) {
  SpMat out = m;
  out.prune([tol](Eigen::Index, Eigen::Index, const cplx& v) { return std::abs(v) > tol; });
  return out;
}

inline SpMat sparse_identity(Eigen::Index dim) {
  SpMat id(dim, dim);
  id.setIdentity();
  return id;
}

inline double inf_norm(const SpMat& m) {
  double mx = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) mx = std::max(mx, std::abs(it.value()));
  return mx;
}

inline bool is_hermitian(const SpMat& m, double rel_tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  SpMat diff = SpMat(m.adjoint()) - m;
  double scale = std::max(inf_norm(m), 1.0);
  return inf_norm(diff) <= rel_tol * scale;
}

}  // namespace dickesim
