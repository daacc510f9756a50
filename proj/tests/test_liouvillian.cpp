#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dickesim/liouvillian.hpp"
#include "dickesim/solvers.hpp"
#include "dickesim/states.hpp"
#include "oracle_utils.hpp"

using namespace dickesim;

namespace {

// Diagonal rate specialization written out independently (the explicit
// single-index forms), the oracle for the general table at m = m'.
double diag_gamma(int i, int n_tls, const Rates& g, double j, double m) {
  const double n = n_tls;
  switch (i) {
    case 1:
      return g.collective_emission * (1 + j - m) * (j + m) +
             g.collective_pumping * (1 + j + m) * (j - m) + g.local_emission * (n / 2 + m) +
             g.local_pumping * (n / 2 - m) +
             g.local_dephasing * (n / 4 - (j == 0 ? 0.0 : m * m * (1 + n / 2) / (2 * j * (j + 1))));
    case 2:
      return g.collective_emission * (1 + j - m) * (j + m) +
             (j == 0 ? 0.0 : g.local_emission * (n + 2) * (j - m + 1) * (j + m) / (4 * j * (j + 1)));
    case 3:
      return j == 0 ? 0.0
                    : g.local_emission * (j + m - 1) * (j + m) * (j + 1 + n / 2) / (2 * j * (2 * j + 1));
    case 4:
      return g.local_emission * (j - m + 1) * (j - m + 2) * (n / 2 - j) / (2 * (j + 1) * (2 * j + 1));
    case 5:
      return j == 0 ? 0.0
                    : g.local_dephasing * (j - m) * (j + m) * (j + 1 + n / 2) / (2 * j * (2 * j + 1));
    case 6:
      return g.local_dephasing * (j - m + 1) * (j + m + 1) * (n / 2 - j) / (2 * (j + 1) * (2 * j + 1));
    case 7:
      return j == 0 ? 0.0
                    : g.local_pumping * (j - m - 1) * (j - m) * (j + 1 + n / 2) / (2 * j * (2 * j + 1));
    case 8:
      return g.collective_pumping * (1 + j + m) * (j - m) +
             (j == 0 ? 0.0 : g.local_pumping * (1 + n / 2) * (j - m) * (j + m + 1) / (2 * j * (j + 1)));
    case 9:
      return g.local_pumping * (j + m + 1) * (j + m + 2) * (n / 2 - j) / (2 * (j + 1) * (2 * j + 1));
  }
  return 0.0;
}

double max_abs(const SpMat& m) { return inf_norm(m); }

}  // namespace

TEST_CASE("gamma_rates anchor values", "[liouvillian]") {
  for (int n : {2, 5, 8}) {
    Rates g;
    g.collective_emission = 0.83;
    const GammaRates gr = gamma_rates(n, g, {n, n, n});
    CHECK(gr[0] == Catch::Approx(0.83 * n));
  }
  {
    Rates g;
    g.local_dephasing = 0.61;
    const int n = 6;
    const GammaRates gr = gamma_rates(n, g, {0, 0, 0});
    CHECK(gr[0] == Catch::Approx(0.61 * n / 4.0));
    CHECK(gr[1] == 0.0);  // nothing flows through the coherence-shift channels
    CHECK(gr[2] == 0.0);
    CHECK(gr[6] == 0.0);
  }
  CHECK_THROWS_AS(gamma_rates(4, Rates{}, {4, 6, 0}), std::invalid_argument);
}

TEST_CASE("probability conservation per diagonal source", "[liouvillian]") {
  std::mt19937 rng(41);
  for (int n = 1; n <= 10; ++n) {
    const Rates g = oracle::random_rates(rng);
    DickeBasis(n).for_each_diagonal([&](const ElementIndex& e) {
      const GammaRates gr = gamma_rates(n, g, e);
      double gain = 0.0;
      for (int i = 1; i < 9; ++i) gain += gr[i];
      REQUIRE(gain == Catch::Approx(gr[0]).margin(1e-12));
    });
  }
}

TEST_CASE("out-of-range targets carry zero rate", "[liouvillian]") {
  std::mt19937 rng(43);
  for (int n = 1; n <= 8; ++n) {
    const Rates g = oracle::random_rates(rng);
    DickeBasis(n).for_each_element([&](const ElementIndex& e) {
      const GammaRates gr = gamma_rates(n, g, e);
      for (int i = 1; i < 9; ++i) {
        const ElementIndex tgt = detail::gamma_target(e, i);
        if (!is_valid_index(n, tgt)) REQUIRE(gr[i] == 0.0);
      }
    });
  }
}

TEST_CASE("general table reduces to the explicit diagonal forms up to N = 40", "[liouvillian]") {
  std::mt19937 rng(47);
  for (int n : {1, 2, 3, 7, 12, 25, 40}) {
    const Rates g = oracle::random_rates(rng);
    DickeBasis(n).for_each_diagonal([&](const ElementIndex& e) {
      const GammaRates gr = gamma_rates(n, g, e);
      for (int i = 1; i <= 9; ++i)
        REQUIRE(gr[static_cast<std::size_t>(i - 1)] ==
                Catch::Approx(diag_gamma(i, n, g, e.j2 / 2.0, e.m2 / 2.0)).margin(1e-12));
    });
  }
}

TEST_CASE("x coefficients match their degeneracy-ratio definitions", "[liouvillian]") {
  // closed forms used in production vs the alpha/d expressions they derive from
  for (int n = 1; n <= 60; ++n)
    for (int j2 = n % 2; j2 <= n; j2 += 2) {
      const double j = j2 / 2.0;
      const double d = static_cast<double>(degeneracy(n, j2));
      const double a_next = static_cast<double>(alpha_coeff(n, j2 + 2));
      const double a_same = static_cast<double>(alpha_coeff(n, j2));
      if (j2 > 0) {
        const double xa_lit = (1.0 / j) * (1.0 + a_next * (2 * j + 1) / (d * (j + 1)));
        REQUIRE(xa_lit == Catch::Approx((n / 2.0 + 1) / (j * (j + 1))).epsilon(1e-12));
        const double xb_lit = a_same / (j * d);
        REQUIRE(xb_lit == Catch::Approx((n / 2.0 + j + 1) / (j * (2 * j + 1))).epsilon(1e-12));
      }
      const double xc_lit = a_next / ((j + 1) * d);
      REQUIRE(xc_lit == Catch::Approx((n / 2.0 - j) / ((j + 1) * (2 * j + 1))).margin(1e-12));
    }
}

TEST_CASE("jump superoperator structure", "[liouvillian]") {
  // T_zz keeps the block and multiplies by m m' x_a / 2
  const int n = 4;
  const DickeBasis basis(n);
  const Superop tzz = jump_superoperator(n, Axis::Z, Axis::Z);
  const Eigen::Index nds = basis.n_ds();
  basis.for_each_element([&](const ElementIndex& e) {
    const auto [r, c] = basis.flat_index(e);
    const double j = e.j2 / 2.0, m = e.m2 / 2.0, mp = e.m2p / 2.0;
    const double xa = (e.j2 == 0) ? 0.0 : (n / 2.0 + 1) / (j * (j + 1));
    CHECK(std::abs(tzz.mat.coeff(r * nds + c, r * nds + c) - cplx(m * mp * xa / 2)) < 1e-14);
  });

  // one TLS: T_-- is exactly the sigma- X sigma+ superoperator
  const Superop tmm = jump_superoperator(1, Axis::Minus, Axis::Minus);
  SpMat sm(2, 2);
  sm.insert(1, 0) = 1.0;
  CHECK(max_abs(SpMat(tmm.mat - kron(sm, SpMat(sm.conjugate())))) < 1e-15);

  CHECK_THROWS_AS(jump_superoperator(3, Axis::X, Axis::Z), std::invalid_argument);
}

TEST_CASE("all nine jump superoperators match the uncoupled oracle", "[liouvillian]") {
  std::mt19937 rng(53);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const Axis axes[3] = {Axis::Plus, Axis::Minus, Axis::Z};

  for (int n : {2, 3, 4, 6}) {
    const DickeBasis basis(n);
    const Eigen::Index nds = basis.n_ds();

    // Dicke-diagonal state with weight in every (j, m), plus a coherence-rich
    // symmetric-sector state; embedded exactly in the uncoupled basis.
    std::map<std::pair<int, int>, double> pops;
    double norm = 0.0;
    basis.for_each_diagonal([&](const ElementIndex& e) {
      const double p = u(rng);
      pops[{e.j2, e.m2}] = p;
      norm += p;
    });
    for (auto& [k, p] : pops) p /= norm;
    SpMat rho_diag_d(nds, nds);
    for (const auto& [k, p] : pops) {
      const auto [r, c] = basis.flat_index({k.first, k.second, k.second});
      rho_diag_d.coeffRef(r, c) = p;
    }
    const SpMat rho_diag_u = oracle::embed_diagonal(n, pops);

    const SpMat rho_css_d = css_polar(n, 0.9, 0.4);
    const SpMat rho_css_u = oracle::embed_symmetric(n, rho_css_d);

    const auto ops_d = oracle::moment_ops(n, false);
    const auto ops_u = oracle::moment_ops(n, true);

    for (Axis q : axes)
      for (Axis r : axes) {
        const Superop t = jump_superoperator(n, q, r);
        for (int which = 0; which < 2; ++which) {
          const SpMat& rho_d = which ? rho_css_d : rho_diag_d;
          const SpMat& rho_u = which ? rho_css_u : rho_diag_u;
          const SpMat img_d = devectorize(VectorXcd(t.mat * vectorize(rho_d)), nds, 0.0);
          // oracle: sum_n J_{q,n} rho J_{r,n}^dag in the 2^N space
          SpMat img_u(rho_u.rows(), rho_u.cols());
          for (int site = 0; site < n; ++site) {
            const SpMat jq = uncoupled_operator(n, q, site);
            const SpMat jr = uncoupled_operator(n, r, site);
            img_u += SpMat(jq * rho_u * SpMat(jr.adjoint()));
          }
          const auto md = oracle::moments(img_d, ops_d);
          const auto mu = oracle::moments(img_u, ops_u);
          for (std::size_t k = 0; k < md.size(); ++k) REQUIRE(std::abs(md[k] - mu[k]) < 1e-10);
        }
      }
  }
}

TEST_CASE("lindbladian basics", "[liouvillian]") {
  CHECK(lindbladian(5, Rates{}).mat.nonZeros() == 0);

  // single TLS amplitude damping: excited population decays as e^{-gamma t}
  Rates g;
  g.collective_emission = 0.7;
  const Superop d = lindbladian(1, g);
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.2 * i);
  const auto traj = evolve(d, excited(1), times, {{"pop", excited(1)}});
  for (std::size_t i = 0; i < times.size(); ++i)
    REQUIRE(std::abs(traj.expectations.at("pop")[i].real() - std::exp(-0.7 * times[i])) < 1e-7);
}

TEST_CASE("both assembly paths produce the same matrix", "[liouvillian]") {
  std::mt19937 rng(59);
  for (int n : {1, 2, 3, 4, 6, 10}) {
    const Rates g = oracle::random_rates(rng);
    const SpMat a = lindbladian(n, g).mat;
    const SpMat b = lindbladian_from_jumps(n, g).mat;
    REQUIRE(max_abs(SpMat(a - b)) < 1e-12);
  }
}

TEST_CASE("trace preservation: vec(I)^T L = 0 up to N = 60", "[liouvillian]") {
  std::mt19937 rng(61);
  for (int n : {2, 7, 20, 41, 60}) {
    const Rates g = oracle::random_rates(rng);
    const Superop l = lindbladian(n, g);
    const VectorXcd left = SpMat(l.mat.transpose()) * vectorize(sparse_identity(l.hilbert_dim()));
    REQUIRE(left.cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, inf_norm(l.mat)));
  }
}

TEST_CASE("structure preservation of the assembled generator", "[liouvillian]") {
  std::mt19937 rng(67);
  const int n = 6;
  const DickeBasis basis(n);
  const Eigen::Index nds = basis.n_ds();
  const Rates g = oracle::random_rates(rng);
  const SpMat l = lindbladian(n, g).mat;
  for (int k = 0; k < l.outerSize(); ++k)
    for (SpMat::InnerIterator it(l, k); it; ++it) {
      const ElementIndex src = basis.element_at(static_cast<int>(it.col() / nds),
                                                static_cast<int>(it.col() % nds));
      const ElementIndex tgt = basis.element_at(static_cast<int>(it.row() / nds),
                                                static_cast<int>(it.row() % nds));
      REQUIRE(src.m2 - src.m2p == tgt.m2 - tgt.m2p);  // populations never mix with coherences
    }
}

TEST_CASE("collective-only dynamics conserves J^2", "[liouvillian]") {
  Rates g;
  g.collective_emission = 0.8;
  g.collective_dephasing = 0.4;
  g.collective_pumping = 0.2;
  const int n = 6;
  const Superop d = liouvillian(n, g, SpMat(cplx(1.3) * jspin(n, Axis::X)));
  std::vector<double> times{0.0, 0.5, 1.0, 2.0, 4.0};
  const auto traj = evolve(d, css_polar(n, 1.2, 0.3), times, {{"j2", j2_operator(n)}},
                           {.rtol = 1e-10, .atol = 1e-12});
  const double j0 = traj.expectations.at("j2")[0].real();
  for (const cplx& v : traj.expectations.at("j2")) REQUIRE(std::abs(v.real() - j0) < 1e-9);

  // the rate matrix then never couples different j blocks
  const SpMat m = rate_matrix(6, g);
  const DickeBasis basis(6);
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      REQUIRE(basis.element_at(static_cast<int>(it.row()), static_cast<int>(it.row())).j2 ==
              basis.element_at(static_cast<int>(it.col()), static_cast<int>(it.col())).j2);
}

TEST_CASE("liouvillian rejects block-mixing Hamiltonians", "[liouvillian]") {
  const int n = 4;
  SpMat h(num_dicke_states(n), num_dicke_states(n));
  h.insert(0, 6) = 1.0;  // couples the j = 2 and j = 1 blocks
  h.insert(6, 0) = 1.0;
  CHECK_THROWS_WITH(liouvillian(n, Rates{}, h), Catch::Matchers::ContainsSubstring("permutational"));

  // collective Hamiltonians pass
  CHECK_NOTHROW(liouvillian(n, Rates{}, SpMat(cplx(0.4) * jspin(n, Axis::X))));
}

TEST_CASE("Liouvillian of the dephased-superradiance model has at most nine entries per row",
          "[liouvillian]") {
  Rates g;
  g.collective_emission = 1.0;
  g.local_dephasing = 1.0;
  const int n = 20;
  const Superop d = liouvillian(n, g, SpMat(cplx(1.0) * jspin(n, Axis::Z)));
  const SpMatRM rm(d.mat);
  for (int r = 0; r < rm.outerSize(); ++r) {
    int count = 0;
    for (SpMatRM::InnerIterator it(rm, r); it; ++it) ++count;
    REQUIRE(count <= 9);
  }
}

TEST_CASE("rate matrix columns sum to zero", "[liouvillian]") {
  std::mt19937 rng(71);
  for (int n : {1, 4, 17, 38, 60}) {
    const Rates g = oracle::random_rates(rng);
    const SpMat m = rate_matrix(n, g);
    const VectorXcd colsum = SpMat(m.transpose()) * VectorXcd::Ones(m.rows());
    REQUIRE(colsum.cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, inf_norm(m)));
    REQUIRE(inf_norm(SpMat(m - SpMat(m.conjugate()))) == 0.0);  // real matrix
  }
}

TEST_CASE("uncoupled Liouvillian equals the Dicke path for one TLS", "[liouvillian]") {
  std::mt19937 rng(73);
  const Rates g = oracle::random_rates(rng);
  const SpMat h(2, 2);
  const SpMat a = uncoupled_liouvillian(1, g, h).mat;
  const SpMat b = lindbladian(1, g).mat;
  CHECK(max_abs(SpMat(a - b)) < 1e-13);

  // Lindblad form preserves the trace: vec(I)^T L = 0
  std::mt19937 rng2(79);
  const Rates g2 = oracle::random_rates(rng2);
  const Superop l = uncoupled_liouvillian(4, g2, SpMat(16, 16));
  const VectorXcd left = SpMat(l.mat.transpose()) * vectorize(sparse_identity(16));
  CHECK(left.cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(uncoupled_liouvillian(12, g, SpMat(1 << 12, 1 << 12), 8), std::invalid_argument);
}

TEST_CASE("master oracle: Dicke dynamics equals uncoupled dynamics at N = 4", "[liouvillian]") {
  std::mt19937 rng(83);
  const Rates g = oracle::random_rates(rng);
  const int n = 4;
  const double w0 = 0.8, wx = 0.45;

  const SpMat h_d = SpMat(cplx(w0) * jspin(n, Axis::Z) + cplx(wx) * jspin(n, Axis::X));
  const SpMat h_u = SpMat(cplx(w0) * uncoupled_collective(n, Axis::Z) +
                          cplx(wx) * uncoupled_collective(n, Axis::X));
  const Superop d_d = liouvillian(n, g, h_d);
  const Superop d_u = uncoupled_liouvillian(n, g, h_u);

  const SpMat rho_d = css_polar(n, 1.0, 0.5);
  const SpMat rho_u = oracle::embed_symmetric(n, rho_d);

  std::vector<double> times;
  for (int i = 0; i <= 60; ++i) times.push_back(3.0 * i / 60.0);

  std::vector<Observable> obs_d, obs_u;
  const char* names[] = {"jz", "jpjm", "j2"};
  const auto ops_d = std::vector<SpMat>{jspin(n, Axis::Z),
                                        SpMat(jspin(n, Axis::Plus) * jspin(n, Axis::Minus)),
                                        j2_operator(n)};
  const SpMat jpu = uncoupled_collective(n, Axis::Plus), jmu = uncoupled_collective(n, Axis::Minus);
  const SpMat jxu = uncoupled_collective(n, Axis::X), jyu = uncoupled_collective(n, Axis::Y),
              jzu = uncoupled_collective(n, Axis::Z);
  const auto ops_u = std::vector<SpMat>{
      jzu, SpMat(jpu * jmu), pruned(SpMat(jxu * jxu + jyu * jyu + jzu * jzu))};
  for (int k = 0; k < 3; ++k) {
    obs_d.push_back({names[k], ops_d[static_cast<std::size_t>(k)]});
    obs_u.push_back({names[k], ops_u[static_cast<std::size_t>(k)]});
  }

  const EvolveOptions opts{.rtol = 1e-10, .atol = 1e-12};
  const auto td = evolve(d_d, rho_d, times, obs_d, opts);
  const auto tu = evolve(d_u, rho_u, times, obs_u, opts);
  for (const char* name : names)
    for (std::size_t i = 0; i < times.size(); ++i)
      REQUIRE(std::abs(td.expectations.at(name)[i] - tu.expectations.at(name)[i]) < 1e-8);
}

TEST_CASE("local dephasing channel matches the oracle (the factor-2 pin)", "[liouvillian]") {
  // gamma_phi alone, diagonal initial state spread over every (j, m)
  std::mt19937 rng(89);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  const int n = 5;
  Rates g;
  g.local_dephasing = 0.9;

  const DickeBasis basis(n);
  std::map<std::pair<int, int>, double> pops;
  double norm = 0.0;
  basis.for_each_diagonal([&](const ElementIndex& e) {
    const double p = u(rng);
    pops[{e.j2, e.m2}] = p;
    norm += p;
  });
  for (auto& [k, p] : pops) p /= norm;
  SpMat rho_d(basis.n_ds(), basis.n_ds());
  for (const auto& [k, p] : pops)
    rho_d.coeffRef(basis.flat_index({k.first, k.second, k.second}).first,
                   basis.flat_index({k.first, k.second, k.second}).first) = p;
  const SpMat rho_u = oracle::embed_diagonal(n, pops);

  const Superop d_d = lindbladian(n, g);
  const Superop d_u = uncoupled_liouvillian(n, g, SpMat(1 << n, 1 << n));

  std::vector<double> times{0.0, 0.4, 1.1, 2.5};
  std::vector<Observable> obs_d{{"j2", j2_operator(n)}},
      obs_u{{"j2", pruned(SpMat(uncoupled_collective(n, Axis::X) * uncoupled_collective(n, Axis::X) +
                                uncoupled_collective(n, Axis::Y) * uncoupled_collective(n, Axis::Y) +
                                uncoupled_collective(n, Axis::Z) * uncoupled_collective(n, Axis::Z)))}};
  const EvolveOptions opts{.rtol = 1e-10, .atol = 1e-12};
  const auto td = evolve(d_d, rho_d, times, obs_d, opts);
  const auto tu = evolve(d_u, rho_u, times, obs_u, opts);
  for (std::size_t i = 0; i < times.size(); ++i)
    REQUIRE(std::abs(td.expectations.at("j2")[i] - tu.expectations.at("j2")[i]) < 1e-8);
}
