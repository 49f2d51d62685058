#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "dicke/model.hpp"

using Catch::Approx;
using namespace dicke;

namespace {

// Oracle: enumerate every ket by direct scan over photon numbers and matter
// compositions, then filter on the conserved sums and the parity label.
std::set<std::uint64_t> brute_force_sector(const ModelParams& p, ParitySector sec,
                                           std::array<int, 2> caps) {
  std::set<std::uint64_t> out;
  const int numax = caps[0] + caps[1] + 2;
  for (int nu1 = 0; nu1 <= numax; ++nu1)
    for (int nu2 = 0; nu2 <= numax; ++nu2)
      for (int n1 = 0; n1 <= p.Na; ++n1)
        for (int n3 = 0; n1 + n3 <= p.Na; ++n3) {
          const BasisState st{{nu1, nu2}, {n1, p.Na - n1 - n3, n3}};
          const auto K = constants_of_motion(p.config, st);
          if (K[0] > caps[0] || K[1] > caps[1]) continue;
          if (parity_sector(K) == sec) out.insert(st.packed());
        }
  return out;
}

// Dense collective operator A_jk (1-based levels) on the symmetric irrep of
// Na atoms, built from the same ladder elements the Hamiltonian uses.
Eigen::MatrixXd collective_op(int Na, int j, int k) {
  std::vector<std::array<int, 3>> states;
  for (int n1 = 0; n1 <= Na; ++n1)
    for (int n3 = 0; n1 + n3 <= Na; ++n3) states.push_back({n1, Na - n1 - n3, n3});
  auto idx = [&](const std::array<int, 3>& n) {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == n) return static_cast<int>(i);
    return -1;
  };
  const int d = static_cast<int>(states.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
  for (int s = 0; s < d; ++s) {
    if (j == k) {
      m(s, s) = states[s][j - 1];
      continue;
    }
    const auto [to, amp] = matter_ladder_element(states[s], j, k);
    if (amp != 0.0) m(idx(to), s) += amp;
  }
  return m;
}

}  // namespace

TEST_CASE("active pairs are ordered lexicographically") {
  REQUIRE(active_pairs(ConfigKind::Xi) == std::array<LevelPair, 2>{{{1, 2}, {2, 3}}});
  REQUIRE(active_pairs(ConfigKind::Lambda) == std::array<LevelPair, 2>{{{1, 3}, {2, 3}}});
  REQUIRE(active_pairs(ConfigKind::V) == std::array<LevelPair, 2>{{{1, 2}, {1, 3}}});
}

TEST_CASE("critical couplings match the closed form per mode") {
  const auto lam = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {0.0, 0.0}, 1);
  REQUIRE(lam.critical(0) == Approx(0.5).epsilon(1e-14));    // 0.5 sqrt(1 * (1 - 0))
  REQUIRE(lam.critical(1) == Approx(0.45).epsilon(1e-14));   // 0.5 sqrt(0.9 * 0.9)

  const auto xi = ModelParams::make(ConfigKind::Xi, 0.25, {0.25, 0.75}, {0.0, 0.0}, 1);
  REQUIRE(xi.critical(0) == Approx(0.125).epsilon(1e-14));
  REQUIRE(xi.critical(1) == Approx(0.375).epsilon(1e-14));

  const auto v = ModelParams::make(ConfigKind::V, 0.8, {0.8, 1.0}, {0.0, 0.0}, 1);
  REQUIRE(v.critical(0) == Approx(0.4).epsilon(1e-14));
  REQUIRE(v.critical(1) == Approx(0.5).epsilon(1e-14));

  REQUIRE(lam.with_x({2.0, 0.0}).mu(0) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("parameter validation rejects bad input") {
  REQUIRE_THROWS_AS(ModelParams::make(ConfigKind::Lambda, -0.1, {1.0, 1.0}, {0.0, 0.0}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ModelParams::make(ConfigKind::Lambda, 0.1, {0.0, 1.0}, {0.0, 0.0}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 1.0}, {-0.5, 0.0}, 1),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 1.0}, {0.0, 0.0}, 0),
                    std::invalid_argument);
}

TEST_CASE("parity sector naming and indexing round-trip") {
  for (int i = 0; i < 4; ++i) REQUIRE(ParitySector::from_index(i).index() == i);
  REQUIRE(ParitySector::from_index(0).name() == "ee");
  REQUIRE(ParitySector::from_index(1).name() == "eo");
  REQUIRE(ParitySector::from_index(2).name() == "oe");
  REQUIRE(ParitySector::from_index(3).name() == "oo");
}

TEST_CASE("sector bases agree with brute-force enumeration") {
  for (ConfigKind kind : {ConfigKind::Xi, ConfigKind::Lambda, ConfigKind::V}) {
    for (int Na : {1, 2}) {
      const auto p = ModelParams::make(kind, 0.3, {1.0, 0.8}, {1.0, 1.0}, Na);
      const std::array<int, 2> caps{5, 6};
      for (int s = 0; s < 4; ++s) {
        const auto sec = ParitySector::from_index(s);
        const auto basis = enumerate_sector_basis(p, sec, caps);
        std::set<std::uint64_t> got;
        for (const auto& st : basis.states) got.insert(st.packed());
        REQUIRE(got.size() == basis.states.size());
        REQUIRE(got == brute_force_sector(p, sec, caps));
      }
    }
  }
}

TEST_CASE("four sector bases partition the union basis") {
  const auto p = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {1.5, 0.7}, 2);
  const std::array<int, 2> caps{6, 7};
  const auto all = enumerate_union_basis(p, caps);
  std::set<std::uint64_t> seen;
  int total = 0;
  for (int s = 0; s < 4; ++s) {
    const auto b = enumerate_sector_basis(p, ParitySector::from_index(s), caps);
    total += b.size();
    for (const auto& st : b.states) REQUIRE(seen.insert(st.packed()).second);
  }
  REQUIRE(total == all.size());
  for (const auto& st : all.states) REQUIRE(seen.count(st.packed()) == 1);
}

TEST_CASE("sector basis find is consistent with ordering") {
  const auto p = ModelParams::make(ConfigKind::V, 0.8, {0.8, 1.0}, {1.0, 1.0}, 1);
  const auto b = enumerate_sector_basis(p, ParitySector::from_index(0), {8, 8});
  for (int i = 0; i < b.size(); ++i) REQUIRE(b.find(b.states[i]) == i);
  BasisState absent{{100, 100}, {1, 0, 0}};
  REQUIRE(b.find(absent) == -1);
}

TEST_CASE("ladder amplitudes on two atoms match hand values") {
  const std::array<int, 3> both_top{0, 0, 2};
  const auto a = matter_ladder_element(both_top, 1, 3);  // move one atom 3 -> 1
  REQUIRE(a.first == std::array<int, 3>{1, 0, 1});
  REQUIRE(a.second == Approx(std::sqrt(2.0)).epsilon(1e-15));

  const auto b = matter_ladder_element(std::array<int, 3>{1, 0, 1}, 1, 3);
  REQUIRE(b.first == std::array<int, 3>{2, 0, 0});
  REQUIRE(b.second == Approx(std::sqrt(2.0)).epsilon(1e-15));

  const auto c = matter_ladder_element(std::array<int, 3>{1, 0, 1}, 2, 3);
  REQUIRE(c.first == std::array<int, 3>{1, 1, 0});
  REQUIRE(c.second == Approx(1.0).epsilon(1e-15));

  // source level empty: amplitude vanishes
  const auto d = matter_ladder_element(std::array<int, 3>{2, 0, 0}, 1, 3);
  REQUIRE(d.second == 0.0);
}

TEST_CASE("collective operators satisfy the u(3) algebra") {
  for (int Na : {1, 2, 3}) {
    for (int j = 1; j <= 3; ++j)
      for (int k = 1; k <= 3; ++k) {
        if (j == k) continue;
        const auto Ajk = collective_op(Na, j, k);
        const auto Akj = collective_op(Na, k, j);
        const auto Njj = collective_op(Na, j, j);
        const auto Nkk = collective_op(Na, k, k);
        const Eigen::MatrixXd comm = Ajk * Akj - Akj * Ajk;
        REQUIRE((comm - (Njj - Nkk)).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((Ajk - Akj.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      }
    // chained transfer: [A_12, A_23] = A_13
    const Eigen::MatrixXd chain = collective_op(Na, 1, 2) * collective_op(Na, 2, 3) -
                                  collective_op(Na, 2, 3) * collective_op(Na, 1, 2);
    REQUIRE((chain - collective_op(Na, 1, 3)).cwiseAbs().maxCoeff() < 1e-12);
    // level populations sum to the atom number
    const Eigen::MatrixXd total =
        collective_op(Na, 1, 1) + collective_op(Na, 2, 2) + collective_op(Na, 3, 3);
    REQUIRE((total - Na * Eigen::MatrixXd::Identity(total.rows(), total.cols()))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }
}

TEST_CASE("hamiltonian is exactly symmetric entry by entry") {
  for (ConfigKind kind : {ConfigKind::Xi, ConfigKind::Lambda, ConfigKind::V}) {
    const auto p = ModelParams::make(kind, 0.3, {1.0, 0.8}, {1.7, 0.9}, 2);
    const auto basis = enumerate_union_basis(p, {7, 7});
    const auto h = build_hamiltonian(p, basis, false);
    Eigen::SparseMatrix<double> t = h.mat.transpose();
    Eigen::SparseMatrix<double> d = h.mat - t;
    double worst = 0.0;
    for (int c = 0; c < d.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(d, c); it; ++it)
        worst = std::max(worst, std::abs(it.value()));
    REQUIRE(worst == 0.0);
  }
}

TEST_CASE("conserved sums commute exactly with the rotating hamiltonian") {
  for (ConfigKind kind : {ConfigKind::Xi, ConfigKind::Lambda, ConfigKind::V}) {
    const auto p = ModelParams::make(kind, 0.3, {1.0, 0.8}, {0.7, 1.3}, 2);
    REQUIRE(commutator_norm(p, {8, 8}, 0, true) == 0.0);
    REQUIRE(commutator_norm(p, {8, 8}, 1, true) == 0.0);
  }
}

TEST_CASE("counter-rotating terms break the sums but keep their parity") {
  const auto p = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {1.0, 1.0}, 1);
  REQUIRE(commutator_norm(p, {8, 8}, 0, false) > 0.1);
  REQUIRE(commutator_norm(p, {8, 8}, 1, false) > 0.1);

  const auto ops = ParityCoefficients::for_config(ConfigKind::Lambda);
  const auto basis = enumerate_union_basis(p, {8, 8});
  const auto h = build_hamiltonian(p, basis, false);
  for (int c = 0; c < h.mat.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(h.mat, c); it; ++it) {
      const auto& from = basis.states[it.col()];
      const auto& to = basis.states[it.row()];
      for (int s = 0; s < 2; ++s)
        REQUIRE((ops.eval(s, to) - ops.eval(s, from)) % 2 == 0);
    }
}

TEST_CASE("wrong conserved-sum coefficients are detected") {
  const auto lam = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {1.0, 1.0}, 1);
  const auto wrong = ParityCoefficients::for_config(ConfigKind::V);
  REQUIRE(commutator_norm(lam, {8, 8}, 0, true, &wrong) > 0.1);
}

TEST_CASE("diagonal energies count photons and level populations") {
  const auto p = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {0.0, 0.0}, 1);
  const auto basis = enumerate_union_basis(p, {4, 4});
  const auto h = build_hamiltonian(p, basis, false);
  const Eigen::MatrixXd dense(h.mat);
  for (int i = 0; i < basis.size(); ++i) {
    const auto& st = basis.states[i];
    const double expect = 1.0 * st.nu[0] + 0.9 * st.nu[1] + 0.1 * st.n[1] + 1.0 * st.n[2];
    REQUIRE(dense(i, i) == Approx(expect).margin(1e-15));
    for (int j = 0; j < basis.size(); ++j)
      if (i != j) REQUIRE(dense(i, j) == 0.0);  // no coupling at x = 0
  }
}

TEST_CASE("rotating approximation drops half of the interaction elements") {
  const auto p = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {1.0, 1.0}, 1);
  const auto basis = enumerate_union_basis(p, {6, 6});
  const auto full = build_hamiltonian(p, basis, false);
  const auto rwa = build_hamiltonian(p, basis, true);
  REQUIRE(rwa.rwa);
  REQUIRE(rwa.mat.nonZeros() < full.mat.nonZeros());
  // every rotating element appears identically in the full matrix
  for (int c = 0; c < rwa.mat.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(rwa.mat, c); it; ++it)
      REQUIRE(full.mat.coeff(it.row(), it.col()) == Approx(it.value()).margin(1e-15));
}

TEST_CASE("fingerprints separate distinct parameter sets") {
  const auto a = ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {1.0, 2.0}, 1);
  REQUIRE(a.fingerprint() == a.fingerprint());
  REQUIRE(a.fingerprint() != a.with_x({1.0, 2.0000001}).fingerprint());
  REQUIRE(a.fingerprint() != a.with_Na(2).fingerprint());
  const auto b = ModelParams::make(ConfigKind::V, 0.1, {1.0, 0.9}, {1.0, 2.0}, 1);
  REQUIRE(a.fingerprint() != b.fingerprint());
}
