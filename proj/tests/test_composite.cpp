#include <catch2/catch_amalgamated.hpp>

#include "dickesim/composite.hpp"
#include "dickesim/solvers.hpp"
#include "dickesim/states.hpp"
#include "oracle_utils.hpp"

using namespace dickesim;

TEST_CASE("bosonic operators", "[composite]") {
  {
    const SpMat a = destroy(2);
    CHECK(a.coeff(0, 1) == cplx(1.0));
    CHECK(a.nonZeros() == 1);
  }
  const int n_ph = 7;
  const SpMat a = destroy(n_ph);
  const SpMat n_op = number_op(n_ph);
  CHECK(inf_norm(SpMat(SpMat(a.adjoint() * a) - n_op)) < 1e-14);
  CHECK(expect_real(n_op, fock_state(n_ph, 1)) == Catch::Approx(1.0));
  // [a, a^dag] = I except the truncation corner
  const SpMat comm = pruned(SpMat(a * SpMat(a.adjoint()) - SpMat(a.adjoint()) * a));
  for (int k = 0; k < n_ph - 1; ++k) CHECK(std::abs(comm.coeff(k, k) - cplx(1.0)) < 1e-14);
  CHECK(std::abs(comm.coeff(n_ph - 1, n_ph - 1) - cplx(1.0 - n_ph)) < 1e-13);
  CHECK_THROWS_AS(destroy(1), std::invalid_argument);
}

TEST_CASE("lift places operators on the right factor", "[composite]") {
  const CompositeSpace space{{bosonic_factor(3), dicke_factor(2)}};
  CHECK(space.total_dim() == 12);
  CHECK(inf_norm(SpMat(lift(sparse_identity(3), space, 0) - sparse_identity(12))) == 0.0);
  const SpMat a = lift(destroy(3), space, 0);
  const SpMat jz = lift(jspin(2, Axis::Z), space, 1);
  CHECK(inf_norm(SpMat(SpMat(a * jz) - SpMat(jz * a))) < 1e-15);
  CHECK(a.rows() == 12);
  CHECK_THROWS_AS(lift(sparse_identity(5), space, 1), std::invalid_argument);
}

TEST_CASE("super_tensor obeys the Kronecker identity", "[composite]") {
  CHECK(inf_norm(SpMat(super_tensor(identity_super(3), identity_super(4)).mat -
                       sparse_identity(144))) == 0.0);

  std::mt19937 rng(97);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rnd = [&](int d) {
    SpMat m(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        if (u(rng) > 0.1) m.coeffRef(r, c) = cplx(u(rng), u(rng));
    return m;
  };
  const SpMat a = rnd(3), b = rnd(2);
  CHECK(inf_norm(SpMat(super_tensor(spre(a), spre(b)).mat - spre(kron(a, b)).mat)) < 1e-13);
  CHECK(inf_norm(SpMat(super_tensor(spost(a), spost(b)).mat - spost(kron(a, b)).mat)) < 1e-13);
}

TEST_CASE("independent subsystems evolve as a product", "[composite]") {
  // photon loss next to a decaying ensemble, no interaction: expectation
  // values factorize against the separately evolved parts
  const int n_ph = 5, n_tls = 2;
  const CompositeSpace space{{bosonic_factor(n_ph), dicke_factor(n_tls)}};
  Rates g;
  g.local_emission = 0.6;
  const Superop d_ph = bosonic_liouvillian(n_ph, 0.8, 0.0, SpMat(cplx(1.0) * number_op(n_ph)));
  const Superop d_tls = lindbladian(n_tls, g);
  Superop d = super_tensor(d_ph, identity_super(d_tls.hilbert_dim()));
  d.mat += super_tensor(identity_super(n_ph), d_tls).mat;

  const SpMat rho_ph = fock_state(n_ph, 2);
  const SpMat rho_tls = css_polar(n_tls, 0.7, 0.2);
  const SpMat rho0 = kron(rho_ph, rho_tls);

  std::vector<double> times{0.0, 0.3, 0.9, 1.8};
  const SpMat num_c = lift(number_op(n_ph), space, 0);
  const SpMat jz_c = lift(jspin(n_tls, Axis::Z), space, 1);
  const auto traj = evolve(d, rho0, times, {{"n", num_c}, {"jz", jz_c}, {"njz", SpMat(num_c * jz_c)}},
                           {.rtol = 1e-10, .atol = 1e-12});

  const auto t_ph = evolve(d_ph, rho_ph, times, {{"n", number_op(n_ph)}}, {.rtol = 1e-10, .atol = 1e-12});
  const auto t_tls = evolve(d_tls, rho_tls, times, {{"jz", jspin(n_tls, Axis::Z)}},
                            {.rtol = 1e-10, .atol = 1e-12});
  for (std::size_t i = 0; i < times.size(); ++i) {
    const cplx n_val = t_ph.expectations.at("n")[i], jz_val = t_tls.expectations.at("jz")[i];
    CHECK(std::abs(traj.expectations.at("n")[i] - n_val) < 1e-8);
    CHECK(std::abs(traj.expectations.at("jz")[i] - jz_val) < 1e-8);
    CHECK(std::abs(traj.expectations.at("njz")[i] - n_val * jz_val) < 1e-8);
  }
}

TEST_CASE("driven spin-boson pipeline preserves the trace", "[composite]") {
  // photonic Liouvillian + TLS Liouvillian + interaction commutator
  const int n_ph = 4, n_tls = 3;
  const CompositeSpace space{{bosonic_factor(n_ph), dicke_factor(n_tls)}};
  const int nds = static_cast<int>(num_dicke_states(n_tls));
  Rates g;
  g.local_emission = 0.2;
  g.local_dephasing = 0.15;

  const Superop d_ph = bosonic_liouvillian(n_ph, 1.0, 0.0, SpMat(cplx(1.0) * number_op(n_ph)));
  Superop d = super_tensor(d_ph, identity_super(nds));
  d.mat += super_tensor(identity_super(n_ph), lindbladian(n_tls, g)).mat;
  const SpMat a = destroy(n_ph);
  const SpMat h_i = SpMat(lift(SpMat(a + SpMat(a.adjoint())), space, 0) *
                          lift(jspin(n_tls, Axis::X), space, 1));
  d.mat += hamiltonian_superoperator(SpMat(cplx(0.7) * h_i)).mat;

  const SpMat rho0 = kron(fock_state(n_ph, 0), ghz(n_tls));
  std::vector<double> times{0.0, 0.5, 1.5, 3.0};
  const auto traj = evolve(d, rho0, times, {}, {.rtol = 1e-9, .atol = 1e-11});
  CHECK(traj.max_trace_error < 1e-7);
}

TEST_CASE("bosonic Liouvillian analytics", "[composite]") {
  SECTION("damped cavity: <n>(t) = e^{-kappa t}") {
    const double kappa = 0.9;
    const int n_ph = 6;
    const Superop d = bosonic_liouvillian(n_ph, kappa, 0.0);
    std::vector<double> times{0.0, 0.4, 1.0, 2.2};
    const auto traj = evolve(d, fock_state(n_ph, 1), times, {{"n", number_op(n_ph)}},
                             {.rtol = 1e-10, .atol = 1e-12});
    for (std::size_t i = 0; i < times.size(); ++i)
      CHECK(std::abs(traj.expectations.at("n")[i].real() - std::exp(-kappa * times[i])) < 1e-7);
  }
  SECTION("thermal pump: steady <n> = w/(kappa - w)") {
    const double kappa = 1.0, w = 0.25;  // n_bar = 1/3, cutoff-converged at 25
    const int n_ph = 25;
    const auto ss = steadystate(bosonic_liouvillian(n_ph, kappa, w));
    CHECK(expect_real(number_op(n_ph), ss.rho) == Catch::Approx(w / (kappa - w)).epsilon(1e-6));
  }
  SECTION("vacuum is stationary without pumping") {
    const Superop d = bosonic_liouvillian(4, 0.7, 0.0);
    CHECK((d.mat * vectorize(fock_state(4, 0))).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(bosonic_liouvillian(5, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("joint collective operators", "[composite]") {
  const CompositeSpace space{{dicke_factor(1), dicke_factor(1)}};
  const SpMat jm = joint_collective_op(space, {0, 1}, Axis::Minus);
  const SpMat jp = joint_collective_op(space, {0, 1}, Axis::Plus);
  CHECK(inf_norm(SpMat(SpMat(jm.adjoint()) - jp)) == 0.0);

  // two single TLSs: the joint channel is exactly the 2-TLS collective
  // emission dissipator of the uncoupled oracle
  const double rate = 0.8;
  Rates g;
  g.collective_emission = rate;
  const SpMat joint_diss = dissipator_matrix(jm, rate);
  const SpMat oracle_mat = uncoupled_liouvillian(2, g, SpMat(4, 4)).mat;
  CHECK(inf_norm(SpMat(joint_diss - oracle_mat)) < 1e-13);

  // single slot reduces to the lifted jspin
  const CompositeSpace pair{{bosonic_factor(3), dicke_factor(2)}};
  CHECK(inf_norm(SpMat(joint_collective_op(pair, {1}, Axis::Z) - lift(jspin(2, Axis::Z), pair, 1))) ==
        0.0);
  CHECK_THROWS_AS(joint_collective_op(pair, {0}, Axis::Minus), std::invalid_argument);
}

TEST_CASE("vacuum Rabi oscillation", "[composite]") {
  // rotating-wave coupling, one TLS, no dissipation: P_e(t) = cos^2(g t)
  const int n_ph = 3;
  const double g_rabi = 0.8;
  const CompositeSpace space{{bosonic_factor(n_ph), dicke_factor(1)}};
  const SpMat a = lift(destroy(n_ph), space, 0);
  const SpMat jp = lift(jspin(1, Axis::Plus), space, 1);
  const SpMat a_jp = SpMat(a * jp);
  const SpMat h = pruned(SpMat(cplx(g_rabi) * SpMat(a_jp + SpMat(a_jp.adjoint()))));
  const Superop d = hamiltonian_superoperator(h);

  const SpMat rho0 = kron(fock_state(n_ph, 0), excited(1));
  const SpMat pop_e = lift(excited(1), space, 1);
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(6.0 * i / 40.0);
  const auto traj = evolve(d, rho0, times, {{"pe", pop_e}}, {.rtol = 1e-10, .atol = 1e-12});
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double expect_pe = std::pow(std::cos(g_rabi * times[i]), 2);
    REQUIRE(std::abs(traj.expectations.at("pe")[i].real() - expect_pe) < 1e-6);
  }
}
