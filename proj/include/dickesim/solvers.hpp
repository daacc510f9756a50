#pragma once

// User-facing dynamics and analysis: time evolution, the diagonal fast path,
// steady states, expectation values, stationary emission spectra and the
// spin-squeezing parameter.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "dickesim/composite.hpp"
#include "dickesim/dicke_space.hpp"
#include "dickesim/integrate.hpp"
#include "dickesim/linalg.hpp"
#include "dickesim/liouvillian.hpp"
#include "dickesim/operators.hpp"
#include "dickesim/types.hpp"

namespace dickesim {

struct Observable {
  std::string label;
  SpMat op;
};

struct Trajectory {
  std::vector<double> times;
  std::map<std::string, std::vector<cplx>> expectations;
  std::vector<SpMat> states;  // retained only on request
  double max_trace_error = 0.0;
  std::vector<std::string> notes;

  std::vector<double> real_series(const std::string& label) const {
    const auto it = expectations.find(label);
    if (it == expectations.end()) throw std::invalid_argument("Trajectory: no observable '" + label + "'");
    std::vector<double> out(it->second.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = it->second[i].real();
    return out;
  }
};

/// Tr(op rho).
inline cplx expect(const SpMat& op, const SpMat& rho) {
  if (op.rows() != rho.rows() || op.cols() != rho.cols())
    throw std::invalid_argument("expect: dimension mismatch");
  cplx acc = 0.0;
  for (int k = 0; k < op.outerSize(); ++k)
    for (SpMat::InnerIterator it(op, k); it; ++it) acc += it.value() * rho.coeff(it.col(), it.row());
  return acc;
}

/// Tr(op rho) for Hermitian op; asserts the imaginary part is noise.
inline double expect_real(const SpMat& op, const SpMat& rho) {
  const cplx v = expect(op, rho);
  if (std::abs(v.imag()) > 1e-9 * std::max(1.0, std::abs(v.real())))
    throw std::runtime_error("expect_real: imaginary part " + std::to_string(v.imag()) +
                             " too large for a Hermitian observable");
  return v.real();
}

namespace detail {

inline cplx expect_vec(const SpMat& op, const VectorXcd& v, Eigen::Index dim) {
  cplx acc = 0.0;
  for (int k = 0; k < op.outerSize(); ++k)
    for (SpMat::InnerIterator it(op, k); it; ++it) acc += it.value() * v[it.col() * dim + it.row()];
  return acc;
}

inline double min_eigenvalue(const VectorXcd& v, Eigen::Index dim) {
  MatrixXcd rho(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) rho(r, c) = v[r * dim + c];
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (rho + rho.adjoint()),
                                              Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace detail

struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  bool store_states = false;
  /// Smallest-eigenvalue monitoring of sampled states (skipped above this
  /// Hilbert dimension); a violation beyond -1e-6 triggers one retry with
  /// tolerances tightened by 100x.
  int positivity_monitor_max_dim = 192;
};

/// Integrates d vec(rho)/dt = D vec(rho) over the grid, recording the
/// requested expectation values.
inline Trajectory evolve(const Superop& d, const SpMat& rho0, std::span<const double> times,
                         const std::vector<Observable>& observables, EvolveOptions opts = {}) {
  check_dims(d);
  const Eigen::Index dim = d.hilbert_dim();
  if (rho0.rows() != dim || rho0.cols() != dim)
    throw std::invalid_argument("evolve: initial state dimension does not match the generator");
  for (const auto& ob : observables)
    if (ob.op.rows() != dim || ob.op.cols() != dim)
      throw std::invalid_argument("evolve: observable '" + ob.label + "' has wrong dimension");

  const bool monitor = dim <= opts.positivity_monitor_max_dim;
  for (int attempt = 0;; ++attempt) {
    Trajectory traj;
    traj.times.assign(times.begin(), times.end());
    for (const auto& ob : observables) traj.expectations[ob.label].resize(times.size());
    if (opts.store_states) traj.states.resize(times.size());

    double min_eig = 0.0;
    integrate(d.mat, vectorize(rho0), times, {opts.rtol, opts.atol, opts.max_step},
              [&](std::size_t i, double, const VectorXcd& v) {
                for (const auto& ob : observables)
                  traj.expectations[ob.label][i] = detail::expect_vec(ob.op, v, dim);
                cplx tr = 0.0;
                for (Eigen::Index k = 0; k < dim; ++k) tr += v[k * dim + k];
                traj.max_trace_error = std::max(traj.max_trace_error, std::abs(tr - 1.0));
                if (monitor) min_eig = std::min(min_eig, detail::min_eigenvalue(v, dim));
                if (opts.store_states) traj.states[i] = devectorize(v, dim);
              });

    if (monitor && min_eig < -1e-6 && attempt == 0) {
      opts.rtol /= 100.0;
      opts.atol /= 100.0;
      traj.notes.push_back("positivity violation " + std::to_string(min_eig) +
                           "; retried with tightened tolerances");
      continue;
    }
    if (monitor && min_eig < -1e-6)
      traj.notes.push_back("positivity violation " + std::to_string(min_eig) + " persisted");
    return traj;
  }
}

/// Diagonal fast path: integrates dp/dt = M p over the populations only.
/// Both the Hamiltonian and the initial state must be diagonal in the Dicke
/// basis; the violating element is named otherwise.
inline Trajectory pisolve(int n_tls, const Rates& rates, const SpMat& h_diag, const SpMat& rho0_diag,
                          std::span<const double> times, const std::vector<Observable>& observables,
                          EvolveOptions opts = {}) {
  const DickeBasis basis(n_tls);
  const Eigen::Index nds = basis.n_ds();
  auto reject_offdiag = [&](const SpMat& m, const std::string& what) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it) {
        if (it.row() == it.col() || std::abs(it.value()) < 1e-12) continue;
        const ElementIndex e = basis.element_at(static_cast<int>(it.row()), static_cast<int>(it.col()));
        throw std::invalid_argument("pisolve: " + what + " is not diagonal in the Dicke basis; element (2j=" +
                                    std::to_string(e.j2) + ", 2m=" + std::to_string(e.m2) + ", 2m'=" +
                                    std::to_string(e.m2p) + ") = " + std::to_string(std::abs(it.value())));
      }
  };
  if (h_diag.rows() != nds || rho0_diag.rows() != nds)
    throw std::invalid_argument("pisolve: dimension mismatch with the Dicke basis");
  reject_offdiag(h_diag, "H");
  reject_offdiag(rho0_diag, "rho0");

  const SpMat m = rate_matrix(n_tls, rates);
  VectorXcd p0 = VectorXcd::Zero(nds);
  for (int k = 0; k < rho0_diag.outerSize(); ++k)
    for (SpMat::InnerIterator it(rho0_diag, k); it; ++it)
      if (it.row() == it.col()) p0[it.row()] = it.value();

  Trajectory traj;
  traj.times.assign(times.begin(), times.end());
  for (const auto& ob : observables) traj.expectations[ob.label].resize(times.size());
  if (opts.store_states) traj.states.resize(times.size());

  integrate(m, p0, times, {opts.rtol, opts.atol, opts.max_step},
            [&](std::size_t i, double, const VectorXcd& p) {
              // re-expand the populations into a diagonal density matrix
              SpMat rho(nds, nds);
              rho.reserve(Eigen::VectorXi::Constant(nds, 1));
              for (Eigen::Index k = 0; k < nds; ++k)
                if (std::abs(p[k]) > kPruneTol) rho.insert(k, k) = p[k];
              rho.makeCompressed();
              for (const auto& ob : observables) traj.expectations[ob.label][i] = expect(ob.op, rho);
              traj.max_trace_error = std::max(traj.max_trace_error, std::abs(p.sum() - 1.0));
              if (opts.store_states) traj.states[i] = std::move(rho);
            });
  return traj;
}

// ---------------------------------------------------------------------------
// Steady states.

struct SteadyState {
  SpMat rho;
  double residual = 0.0;  // ||D vec(rho)||_inf of the returned state
};

enum class SteadyStateMethod { Direct, InverseIteration };

struct SteadyStateOptions {
  SteadyStateMethod method = SteadyStateMethod::Direct;
  double residual_tol = 1e-8;  // relative to the largest |D| entry
  int max_iterations = 200;    // inverse-iteration mode
};

namespace detail {

/// Vec positions coupled by D (nonzero row or column). Positions outside the
/// Dicke block pattern are zero rows and columns; keeping them would make the
/// trace-augmented system singular.
inline std::vector<Eigen::Index> coupled_positions(const SpMat& d) {
  std::vector<char> used(static_cast<std::size_t>(d.rows()), 0);
  for (int k = 0; k < d.outerSize(); ++k)
    for (SpMat::InnerIterator it(d, k); it; ++it) {
      if (std::abs(it.value()) <= kPruneTol) continue;
      used[static_cast<std::size_t>(it.row())] = 1;
      used[static_cast<std::size_t>(it.col())] = 1;
    }
  std::vector<Eigen::Index> pos;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    if (used[static_cast<std::size_t>(i)]) pos.push_back(i);
  return pos;
}

inline SteadyState package_steady_state(const Superop& d, const VectorXcd& x_full) {
  const Eigen::Index dim = d.hilbert_dim();
  SpMat rho = devectorize(x_full, dim);
  rho = SpMat(0.5 * (rho + SpMat(rho.adjoint())));
  const cplx tr = expect(sparse_identity(dim), rho);
  if (std::abs(tr) < 1e-300) throw std::runtime_error("steadystate: traceless solution");
  rho = SpMat(rho / tr);
  const double res = (d.mat * vectorize(rho)).cwiseAbs().maxCoeff();
  return {pruned(rho), res};
}

}  // namespace detail

/// Solves D vec(rho) = 0 with the trace functional replacing the last
/// population row (augmented sparse-LU solve). Rank deficiency beyond the
/// trace redundancy is reported as ambiguous; inverse-iteration mode is the
/// caller's fallback for those spectra.
inline SteadyState steadystate(const Superop& d, const SteadyStateOptions& opts = {}) {
  check_dims(d);
  const Eigen::Index dim = d.hilbert_dim();
  const auto pos = detail::coupled_positions(d.mat);
  if (pos.empty()) throw std::runtime_error("steadystate: D is identically zero");
  std::vector<Eigen::Index> inv(static_cast<std::size_t>(d.mat.rows()), -1);
  for (std::size_t i = 0; i < pos.size(); ++i) inv[static_cast<std::size_t>(pos[i])] = static_cast<Eigen::Index>(i);

  // compressed system on the coupled positions
  const Eigen::Index n = static_cast<Eigen::Index>(pos.size());
  const Eigen::Index last_diag_full = (dim - 1) * dim + (dim - 1);
  const Eigen::Index replace_row = inv[static_cast<std::size_t>(last_diag_full)];
  if (replace_row < 0) throw std::runtime_error("steadystate: last population element is uncoupled");

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(d.mat.nonZeros()) + static_cast<std::size_t>(dim));
  for (int k = 0; k < d.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(d.mat, k); it; ++it) {
      const Eigen::Index r = inv[static_cast<std::size_t>(it.row())];
      if (r == replace_row) continue;
      trips.emplace_back(r, inv[static_cast<std::size_t>(it.col())], it.value());
    }
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Eigen::Index p = inv[static_cast<std::size_t>(k * dim + k)];
    if (p >= 0) trips.emplace_back(replace_row, p, 1.0);
  }
  SpMat a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());

  const double scale = std::max(inf_norm(d.mat), 1.0);

  if (opts.method == SteadyStateMethod::Direct) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error(
          "steadystate: augmented system is singular (rank deficiency > 1, multiple steady "
          "states); rerun with SteadyStateMethod::InverseIteration and inspect the result");
    VectorXcd b = VectorXcd::Zero(n);
    b[replace_row] = 1.0;
    const VectorXcd x = lu.solve(b);
    VectorXcd x_full = VectorXcd::Zero(dim * dim);
    for (Eigen::Index i = 0; i < n; ++i) x_full[pos[static_cast<std::size_t>(i)]] = x[i];
    SteadyState ss = detail::package_steady_state(d, x_full);
    if (!(ss.residual <= opts.residual_tol * scale))
      throw std::runtime_error("steadystate: direct solve residual " + std::to_string(ss.residual) +
                               " exceeds tolerance; the steady state may not be unique");
    return ss;
  }

  // inverse iteration targeting the eigenvalue nearest a small positive shift
  std::vector<Triplet> strips;
  for (int k = 0; k < d.mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(d.mat, k); it; ++it)
      strips.emplace_back(inv[static_cast<std::size_t>(it.row())], inv[static_cast<std::size_t>(it.col())],
                          it.value());
  const double sigma = 1e-4 * scale;
  for (Eigen::Index i = 0; i < n; ++i) strips.emplace_back(i, i, -sigma);
  SpMat shifted(n, n);
  shifted.setFromTriplets(strips.begin(), strips.end());
  Eigen::SparseLU<SpMat> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("steadystate: inverse-iteration factorization failed");

  VectorXcd x = VectorXcd::Zero(n);
  for (Eigen::Index k = 0; k < dim; ++k) {
    const Eigen::Index p = inv[static_cast<std::size_t>(k * dim + k)];
    if (p >= 0) x[p] = 1.0 / static_cast<double>(dim);
  }
  for (int it = 0; it < opts.max_iterations; ++it) {
    x = lu.solve(x);
    x /= x.norm();
  }
  VectorXcd x_full = VectorXcd::Zero(dim * dim);
  for (Eigen::Index i = 0; i < n; ++i) x_full[pos[static_cast<std::size_t>(i)]] = x[i];
  return detail::package_steady_state(d, x_full);
}

/// Steady populations of a diagonal problem: the kernel of the rate matrix M,
/// normalized to sum 1. Unique when the rate chain is irreducible.
inline VectorXd steady_populations(int n_tls, const Rates& rates) {
  const SpMat m = rate_matrix(n_tls, rates);
  const Eigen::Index n = m.rows();
  std::vector<Triplet> trips;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      if (it.row() != n - 1) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index c = 0; c < n; ++c) trips.emplace_back(n - 1, c, 1.0);
  SpMat a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());

  Eigen::SparseLU<SpMat> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("steady_populations: rate chain is reducible (multiple steady states)");
  VectorXcd b = VectorXcd::Zero(n);
  b[n - 1] = 1.0;
  const VectorXcd p = lu.solve(b);
  const double resid = (m * p).cwiseAbs().maxCoeff();
  if (resid > 1e-8 * std::max(1.0, inf_norm(m)))
    throw std::runtime_error("steady_populations: residual " + std::to_string(resid) + " too large");
  return p.real();
}

// ---------------------------------------------------------------------------
// Stationary emission spectrum via the quantum regression theorem:
//   S(w) = 2 Re tr[a^dag devec((i w I - D)^{-1} vec(a rho_ss))],
// one sparse solve per frequency (shared symbolic factorization).

inline std::vector<double> spectrum(const Superop& d, const SpMat& a_op,
                                    std::span<const double> omegas, const SpMat& rho_ss) {
  check_dims(d);
  const Eigen::Index dim = d.hilbert_dim();
  if (a_op.rows() != dim || rho_ss.rows() != dim)
    throw std::invalid_argument("spectrum: operator dimensions do not match the generator");

  const VectorXcd b = vectorize(pruned(SpMat(a_op * rho_ss)));
  const VectorXcd a_vec = vectorize(a_op);
  const SpMat id = sparse_identity(dim * dim);

  Eigen::SparseLU<SpMat> lu;
  {
    const SpMat pattern = SpMat(id - d.mat);
    lu.analyzePattern(pattern);
  }
  std::vector<double> s(omegas.size());
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    const SpMat a = SpMat(cplx(0.0, omegas[i]) * id - d.mat);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("spectrum: resolvent singular at omega = " + std::to_string(omegas[i]) +
                               " (eigenvalue of D on the imaginary axis)");
    s[i] = 2.0 * a_vec.dot(lu.solve(b)).real();
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Reduced density matrix of one factor of a composite space.
inline SpMat partial_trace(const SpMat& rho, const CompositeSpace& space, int keep) {
  const int d_keep = space.at(keep).dim;
  const Eigen::Index total = space.total_dim();
  if (rho.rows() != total || rho.cols() != total)
    throw std::invalid_argument("partial_trace: state dimension does not match the space");
  const Eigen::Index before = space.dim_before(keep), after = space.dim_after(keep);

  std::vector<Triplet> trips;
  for (int k = 0; k < rho.outerSize(); ++k)
    for (SpMat::InnerIterator it(rho, k); it; ++it) {
      const Eigen::Index r = it.row(), c = it.col();
      const Eigen::Index rb = r / (d_keep * after), rk = (r / after) % d_keep, ra = r % after;
      const Eigen::Index cb = c / (d_keep * after), ck = (c / after) % d_keep, ca = c % after;
      if (rb == cb && ra == ca) trips.emplace_back(rk, ck, it.value());
    }
  SpMat out(d_keep, d_keep);
  out.setFromTriplets(trips.begin(), trips.end());
  return pruned(out);
}

/// Spin squeezing parameter xi^2 = N <Delta Jy^2> / (<Jz>^2 + <Jx>^2);
/// xi^2 < 1 signals squeezing. Undefined when the mean spin vanishes.
inline double spin_squeezing_xi2(const SpMat& rho, int n_tls) {
  const SpMat jx = jspin(n_tls, Axis::X), jy = jspin(n_tls, Axis::Y), jz = jspin(n_tls, Axis::Z);
  const double mjx = expect(jx, rho).real();
  const double mjz = expect(jz, rho).real();
  const double denom = mjx * mjx + mjz * mjz;
  if (denom <= 1e-12)
    throw std::domain_error("spin_squeezing_xi2: mean spin <Jz>^2 + <Jx>^2 vanishes; parameter undefined");
  const double mjy = expect(jy, rho).real();
  const double var_y = expect(SpMat(jy * jy), rho).real() - mjy * mjy;
  return n_tls * var_y / denom;
}

}  // namespace dickesim
