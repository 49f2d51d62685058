#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include "dicke/presets.hpp"
#include "dicke/qpt.hpp"
#include "dicke/solver.hpp"
#include "dicke/tomography.hpp"

using Catch::Approx;
using namespace dicke;

namespace {

const ModelParams& lam() {
  static const ModelParams p = *find_preset("lambda-fig3");
  return p;
}

// Harmonic-oscillator wavefunctions psi_k(x) by the stable two-term
// recurrence; used only to build the transform-integral oracle below.
std::vector<double> oscillator_psi(int kmax, double x) {
  std::vector<double> psi(kmax + 1);
  psi[0] = std::pow(M_PI, -0.25) * std::exp(-0.5 * x * x);
  if (kmax >= 1) psi[1] = x * std::sqrt(2.0) * psi[0];
  for (int k = 1; k < kmax; ++k)
    psi[k + 1] = x * std::sqrt(2.0 / (k + 1)) * psi[k] - std::sqrt(double(k) / (k + 1)) * psi[k - 1];
  return psi;
}

// Oracle: W_{nm}(q, p) = (1/pi) Int psi_n(q + y) psi_m(q - y) e^{-2ipy} dy
// by trapezoid quadrature on a wide window.
std::complex<double> weyl_by_integral(int n, int m, double q, double p) {
  const double half = 8.0, h = 1.0 / 512.0;
  const int steps = static_cast<int>(2 * half / h);
  const int kmax = std::max(n, m);
  std::complex<double> acc = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double y = -half + i * h;
    const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
    const double a = oscillator_psi(kmax, q + y)[n];
    const double b = oscillator_psi(kmax, q - y)[m];
    acc += w * a * b * std::complex<double>(std::cos(2.0 * p * y), -std::sin(2.0 * p * y));
  }
  return acc * h / M_PI;
}

// Oracle: partial trace by a direct quadratic scan over basis-state pairs.
Eigen::MatrixXcd brute_mode_rdm(const GroundState& gs, int mode, int dim) {
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  const auto& states = gs.basis->states;
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = 0; b < states.size(); ++b) {
      const auto& sa = states[a];
      const auto& sb = states[b];
      if (sa.nu[1 - mode] != sb.nu[1 - mode] || sa.n != sb.n) continue;
      if (sa.nu[mode] >= dim || sb.nu[mode] >= dim) continue;
      rho(sa.nu[mode], sb.nu[mode]) += gs.coeffs[a] * gs.coeffs[b];
    }
  return rho;
}

}  // namespace

TEST_CASE("associated laguerre recurrence matches explicit polynomials") {
  for (double x : {0.0, 0.7, 2.3, 9.0}) {
    REQUIRE(laguerre_assoc(0, 0, x) == 1.0);
    REQUIRE(laguerre_assoc(1, 2, x) == Approx(3.0 - x).margin(1e-13));
    REQUIRE(laguerre_assoc(2, 0, x) == Approx(1.0 - 2.0 * x + 0.5 * x * x).margin(1e-12));
    // L_3^1(x) = 4 - 6x + 2x^2 - x^3/6
    REQUIRE(laguerre_assoc(3, 1, x) ==
            Approx(4.0 - 6.0 * x + 2.0 * x * x - x * x * x / 6.0).margin(1e-11));
  }
}

TEST_CASE("closed-form weyl symbols match the transform integral") {
  const std::array<std::array<double, 2>, 3> points{{{0.35, -0.6}, {1.2, 0.8}, {0.0, 0.0}}};
  double worst = 0.0;
  for (int n = 0; n <= 6; ++n)
    for (int m = 0; m <= 6; ++m)
      for (const auto& qp : points) {
        const auto closed = weyl_symbol(n, m, qp[0], qp[1]);
        const auto integral = weyl_by_integral(n, m, qp[0], qp[1]);
        worst = std::max(worst, std::abs(closed - integral));
      }
  REQUIRE(worst < 1e-10);
}

TEST_CASE("weyl symbols are hermitian under index swap") {
  for (int n = 0; n <= 4; ++n)
    for (int m = 0; m <= 4; ++m) {
      const auto a = weyl_symbol(n, m, 0.8, -0.45);
      const auto b = weyl_symbol(m, n, 0.8, -0.45);
      REQUIRE(std::abs(a - std::conj(b)) < 1e-15);
    }
}

TEST_CASE("single-photon negativity volume matches the analytic value") {
  ReducedDensityMatrix rdm;
  rdm.subsystem = ReducedDensityMatrix::Subsystem::Mode;
  rdm.mode = 0;
  rdm.fock_dims = {2, 0};
  rdm.rho = Eigen::MatrixXcd::Zero(2, 2);
  rdm.rho(1, 1) = 1.0;

  const auto field = wigner_field(rdm);
  // W for |1> dips to -1/pi at the origin and integrates to one
  REQUIRE(field.w.minCoeff() == Approx(-1.0 / M_PI).margin(1e-6));
  REQUIRE(field.integral == Approx(1.0).margin(1e-5));
  REQUIRE_FALSE(field.normalization_warning);
  REQUIRE(negativity_volume(field) == Approx(4.0 * std::exp(-0.5) - 2.0).margin(1e-3));
}

TEST_CASE("vacuum wigner function is a unit gaussian") {
  ReducedDensityMatrix rdm;
  rdm.subsystem = ReducedDensityMatrix::Subsystem::Mode;
  rdm.mode = 1;
  rdm.fock_dims = {1, 0};
  rdm.rho = Eigen::MatrixXcd::Ones(1, 1);
  const auto field = wigner_field(rdm);
  REQUIRE(field.w.minCoeff() >= 0.0);
  REQUIRE(field.integral == Approx(1.0).margin(1e-6));
  REQUIRE(negativity_volume(field) == Approx(0.0).margin(1e-6));
  // peak value 1/pi at the origin
  REQUIRE(field.w.maxCoeff() == Approx(1.0 / M_PI).margin(1e-10));
}

TEST_CASE("mode reductions agree with the brute-force partial trace") {
  GroundStateCache cache;
  const auto g = cache.get(lam().with_Na(2).with_x({1.5, 2.5}), 1e-8);
  for (int mode : {0, 1}) {
    const auto rdm = reduce_to_mode(*g, mode);
    const auto brute = brute_mode_rdm(*g, mode, rdm.dim());
    REQUIRE((rdm.rho - brute).cwiseAbs().maxCoeff() < 1e-13);
    REQUIRE(std::abs(rdm.rho.trace().real() - 1.0) < 1e-12);
    REQUIRE(std::abs(rdm.rho.trace().imag()) < 1e-15);
    REQUIRE((rdm.rho - rdm.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rdm.rho);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("matter and field-pair reductions share the entanglement spectrum") {
  // for a pure state both sides of a bipartition have equal purity
  GroundStateCache cache;
  const auto g = cache.get(lam().with_x({2.0, 2.2}), 1e-8);
  const double p_matter = purity(reduce_to_matter(*g));
  const double p_fields = purity(reduce_to_field_pair(*g));
  REQUIRE(p_matter == Approx(p_fields).margin(1e-10));
  REQUIRE(p_matter <= 1.0 + 1e-12);
  REQUIRE(p_matter > 0.0);
}

TEST_CASE("purity equals the phase-space integral of the squared wigner function") {
  GroundStateCache cache;
  const auto g = cache.get(lam().with_x({2.0, 2.0}), 1e-8);
  for (int mode : {0, 1}) {
    const auto rdm = reduce_to_mode(*g, mode);
    const auto field = wigner_field(rdm);
    double sq = 0.0;
    for (int jp = 0; jp < field.grid.np; ++jp)
      for (int iq = 0; iq < field.grid.nq; ++iq) {
        const double wj = (jp == 0 || jp == field.grid.np - 1) ? 0.5 : 1.0;
        const double wi = (iq == 0 || iq == field.grid.nq - 1) ? 0.5 : 1.0;
        sq += wj * wi * field.w(jp, iq) * field.w(jp, iq);
      }
    sq *= field.grid.dq() * field.grid.dp() * 2.0 * M_PI;
    REQUIRE(std::abs(sq - purity(rdm)) < 1e-4);
  }
}

TEST_CASE("mean photon number agrees with the reduced density matrix") {
  GroundStateCache cache;
  const auto g = cache.get(lam().with_x({1.8, 0.9}), 1e-8);
  for (int mode : {0, 1}) {
    const auto rdm = reduce_to_mode(*g, mode);
    double from_rdm = 0.0;
    for (int k = 0; k < rdm.dim(); ++k) from_rdm += k * rdm.rho(k, k).real();
    REQUIRE(mean_photon(*g, mode) == Approx(from_rdm).margin(1e-12));
  }
  REQUIRE(mean_photon(*g, 0) > 0.0);
}

TEST_CASE("near-origin ground state is almost a product state") {
  GroundStateCache cache;
  const auto g = cache.get(lam().with_x({0.05, 0.05}), 1e-8);
  const auto e = linear_entropies(*g);
  REQUIRE(e.s_nu1 >= 0.0);
  REQUIRE(e.s_nu2 >= 0.0);
  REQUIRE(e.s_nu_m >= 0.0);
  REQUIRE(e.s_nu1 < 1e-3);
  REQUIRE(e.s_nu2 < 1e-3);
  REQUIRE(e.s_nu_m < 1e-3);
}

TEST_CASE("reduction input validation") {
  GroundStateCache cache;
  const auto g = cache.get(lam().with_x({0.5, 0.5}), 1e-8);
  REQUIRE_THROWS_AS(reduce_to_mode(*g, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(mean_photon(*g, -1), std::invalid_argument);
  const auto matter = reduce_to_matter(*g);
  REQUIRE_THROWS_AS(wigner_field(matter), std::invalid_argument);
}
