#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "dicke/model.hpp"
#include "dicke/solver.hpp"

namespace dicke {

struct ReducedDensityMatrix {
  enum class Subsystem { Mode, FieldPair, Matter };
  Subsystem subsystem = Subsystem::Mode;
  int mode = -1;                    ///< active-pair index for Subsystem::Mode
  LevelPair pair_label{0, 0};       ///< levels of that pair
  std::array<int, 2> fock_dims{0, 0};  ///< Fock dimension per mode (second unused for Mode)
  Eigen::MatrixXcd rho;

  [[nodiscard]] int dim() const { return static_cast<int>(rho.rows()); }
};

/// Frobenius purity Tr rho^2 of a Hermitian density matrix.
inline double purity(const ReducedDensityMatrix& rdm) { return rdm.rho.squaredNorm(); }

namespace detail {

template <typename KeyFn, typename RowFn>
Eigen::MatrixXcd accumulate_rdm(const GroundState& gs, int dim, KeyFn&& key, RowFn&& row) {
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, double>>> buckets;
  const auto& states = gs.basis->states;
  for (std::size_t i = 0; i < states.size(); ++i)
    buckets[key(states[i])].emplace_back(row(states[i]), gs.coeffs[static_cast<int>(i)]);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& [k, entries] : buckets)
    for (const auto& [ra, ca] : entries)
      for (const auto& [rb, cb] : entries) acc(ra, rb) += ca * cb;
  return acc.cast<std::complex<double>>();
}

}  // namespace detail

/// Traces the ground state down to one field mode. The Fock dimension is set
/// by the largest occupation of that mode present in the basis.
inline ReducedDensityMatrix reduce_to_mode(const GroundState& gs, int mode) {
  if (mode < 0 || mode > 1) throw std::invalid_argument("reduce_to_mode: mode must be 0 or 1");
  int nmax = 0;
  for (const auto& st : gs.basis->states) nmax = std::max(nmax, st.nu[mode]);
  const int other = 1 - mode;
  ReducedDensityMatrix rdm;
  rdm.subsystem = ReducedDensityMatrix::Subsystem::Mode;
  rdm.mode = mode;
  rdm.pair_label = gs.params.config.pairs[mode];
  rdm.fock_dims = {nmax + 1, 0};
  rdm.rho = detail::accumulate_rdm(
      gs, nmax + 1,
      [&](const BasisState& st) {
        BasisState k = st;
        k.nu[mode] = 0;
        return k.packed();
      },
      [&](const BasisState& st) { return st.nu[mode]; });
  return rdm;
}

/// Traces out the matter, leaving the two-mode field density matrix with
/// composite index nu_1 * (nmax_2 + 1) + nu_2.
inline ReducedDensityMatrix reduce_to_field_pair(const GroundState& gs) {
  std::array<int, 2> nmax{0, 0};
  for (const auto& st : gs.basis->states) {
    nmax[0] = std::max(nmax[0], st.nu[0]);
    nmax[1] = std::max(nmax[1], st.nu[1]);
  }
  const int d2 = nmax[1] + 1;
  ReducedDensityMatrix rdm;
  rdm.subsystem = ReducedDensityMatrix::Subsystem::FieldPair;
  rdm.fock_dims = {nmax[0] + 1, d2};
  rdm.rho = detail::accumulate_rdm(
      gs, (nmax[0] + 1) * d2,
      [&](const BasisState& st) {
        BasisState k = st;
        k.nu = {0, 0};
        return k.packed();
      },
      [&](const BasisState& st) { return st.nu[0] * d2 + st.nu[1]; });
  return rdm;
}

/// Traces out both field modes, leaving the symmetric-irrep matter density
/// matrix. Matter states are indexed lexicographically in (n_1, n_3).
inline ReducedDensityMatrix reduce_to_matter(const GroundState& gs) {
  const int na = gs.params.Na;
  std::unordered_map<int, int> midx;
  int dim = 0;
  for (int n1 = 0; n1 <= na; ++n1)
    for (int n3 = 0; n3 + n1 <= na; ++n3) midx[n1 * (na + 1) + n3] = dim++;
  ReducedDensityMatrix rdm;
  rdm.subsystem = ReducedDensityMatrix::Subsystem::Matter;
  rdm.fock_dims = {dim, 0};
  rdm.rho = detail::accumulate_rdm(
      gs, dim,
      [&](const BasisState& st) {
        BasisState k = st;
        k.n = {0, 0, 0};
        return k.packed();
      },
      [&](const BasisState& st) { return midx.at(st.n[0] * (na + 1) + st.n[2]); });
  return rdm;
}

inline double mean_photon(const GroundState& gs, int mode) {
  if (mode < 0 || mode > 1) throw std::invalid_argument("mean_photon: mode must be 0 or 1");
  double m = 0.0;
  for (int i = 0; i < gs.basis->size(); ++i)
    m += gs.coeffs[i] * gs.coeffs[i] * gs.basis->states[i].nu[mode];
  return m;
}

/// Generalized Laguerre polynomial L_n^k(x) by upward recurrence in n.
inline double laguerre_assoc(int n, int k, double x) {
  if (n < 0 || k < 0) throw std::invalid_argument("laguerre_assoc: negative index");
  double lm2 = 1.0;                 // L_0
  if (n == 0) return lm2;
  double lm1 = 1.0 + k - x;         // L_1
  for (int j = 2; j <= n; ++j) {
    const double l = ((2.0 * j - 1.0 + k - x) * lm1 - (j - 1.0 + k) * lm2) / j;
    lm2 = lm1;
    lm1 = l;
  }
  return lm1;
}

/// Weyl symbol of |n><m|,
///   W(q,p) = ((-1)^n / pi) sqrt(2^(m-n) n!/m!) (q+ip)^(m-n)
///            e^(-(q^2+p^2)) L_n^(m-n)(2(q^2+p^2))        for m >= n,
/// and the conjugate for m < n; consistent with the transform
/// W(q,p) = (1/pi) Int <q+y|rho|q-y> e^(-2ipy) dy.
inline std::complex<double> weyl_symbol(int n, int m, double q, double p) {
  if (n < 0 || m < 0) throw std::invalid_argument("weyl_symbol: negative Fock index");
  if (m < n) return std::conj(weyl_symbol(m, n, q, p));
  const int k = m - n;
  const double r2 = q * q + p * p;
  const double az = std::sqrt(r2);
  if (k > 0 && az == 0.0) return {0.0, 0.0};
  const double logpref =
      0.5 * (k * std::log(2.0) + std::lgamma(n + 1.0) - std::lgamma(m + 1.0));
  const double mag = std::exp(logpref - r2 + (k > 0 ? k * std::log(az) : 0.0));
  const double theta = k > 0 ? k * std::atan2(p, q) : 0.0;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  const double lag = laguerre_assoc(n, k, 2.0 * r2);
  const double amp = (sign / M_PI) * mag * lag;
  return {amp * std::cos(theta), amp * std::sin(theta)};
}

struct QuadratureGrid {
  double q_min = -6.0, q_max = 6.0;
  int nq = 241;
  double p_min = -6.0, p_max = 6.0;
  int np = 241;

  [[nodiscard]] double dq() const { return nq > 1 ? (q_max - q_min) / (nq - 1) : 0.0; }
  [[nodiscard]] double dp() const { return np > 1 ? (p_max - p_min) / (np - 1) : 0.0; }
  [[nodiscard]] double q(int i) const { return q_min + i * dq(); }
  [[nodiscard]] double p(int j) const { return p_min + j * dp(); }
};

struct WignerField {
  QuadratureGrid grid;
  Eigen::MatrixXd w;  ///< row j = p index, column i = q index
  int mode = -1;
  LevelPair pair_label{0, 0};
  double integral = 0.0;
  double max_imag = 0.0;
  bool normalization_warning = false;
};

namespace detail {

inline double trapezoid_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

}  // namespace detail

/// Wigner function of a single-mode density matrix on a quadrature grid.
/// The imaginary residue of the mode sum is tracked and must stay below
/// 1e-10; the real part is returned.
inline WignerField wigner_field(const ReducedDensityMatrix& rdm, const QuadratureGrid& grid = {}) {
  if (rdm.subsystem != ReducedDensityMatrix::Subsystem::Mode)
    throw std::invalid_argument("wigner_field: needs a single-mode density matrix");
  if (grid.nq < 2 || grid.np < 2)
    throw std::invalid_argument("wigner_field: grid needs >= 2 points per axis");
  const int d = rdm.dim();

  // log-prefactors and Laguerre tables keep magnitudes in range at large k
  Eigen::MatrixXd logpref(d, d);
  for (int n = 0; n < d; ++n)
    for (int m = n; m < d; ++m)
      logpref(n, m) =
          0.5 * ((m - n) * std::log(2.0) + std::lgamma(n + 1.0) - std::lgamma(m + 1.0));

  WignerField field;
  field.grid = grid;
  field.mode = rdm.mode;
  field.pair_label = rdm.pair_label;
  field.w.resize(grid.np, grid.nq);

  std::vector<double> lag(static_cast<std::size_t>(d) * d);
  std::vector<double> cosk(d), sink(d), powaz(d);
  double max_imag = 0.0;
  for (int jp = 0; jp < grid.np; ++jp) {
    const double p = grid.p(jp);
    for (int iq = 0; iq < grid.nq; ++iq) {
      const double q = grid.q(iq);
      const double r2 = q * q + p * p;
      const double x = 2.0 * r2;
      const double az = std::sqrt(r2);
      const double theta = std::atan2(p, q);
      const double e0 = std::exp(-r2);
      // lag[k*d+n] = L_n^k(x), cos/sin of k*theta, az^k
      for (int k = 0; k < d; ++k) {
        double lm2 = 1.0, lm1 = 1.0 + k - x;
        lag[static_cast<std::size_t>(k) * d] = lm2;
        if (d > 1) lag[static_cast<std::size_t>(k) * d + 1] = lm1;
        for (int nn = 2; nn < d - k; ++nn) {
          const double l = ((2.0 * nn - 1.0 + k - x) * lm1 - (nn - 1.0 + k) * lm2) / nn;
          lm2 = lm1;
          lm1 = l;
          lag[static_cast<std::size_t>(k) * d + nn] = l;
        }
      }
      cosk[0] = 1.0;
      sink[0] = 0.0;
      powaz[0] = 1.0;
      const double ct = std::cos(theta), st = std::sin(theta);
      for (int k = 1; k < d; ++k) {
        cosk[k] = cosk[k - 1] * ct - sink[k - 1] * st;
        sink[k] = sink[k - 1] * ct + cosk[k - 1] * st;
        powaz[k] = powaz[k - 1] * az;
      }

      std::complex<double> sum = 0.0;
      for (int n = 0; n < d; ++n) {
        const double sign = (n % 2 == 0) ? 1.0 : -1.0;
        const double wd = (sign / M_PI) * std::exp(logpref(n, n)) * e0 *
                          lag[static_cast<std::size_t>(0) * d + n];
        sum += rdm.rho(n, n).real() * wd;
        max_imag = std::max(max_imag, std::abs(rdm.rho(n, n).imag() * wd));
        for (int m = n + 1; m < d; ++m) {
          const int k = m - n;
          const double amp = (sign / M_PI) * std::exp(logpref(n, m)) * e0 * powaz[k] *
                             lag[static_cast<std::size_t>(k) * d + n];
          const std::complex<double> wnm(amp * cosk[k], amp * sink[k]);
          sum += rdm.rho(n, m) * wnm + rdm.rho(m, n) * std::conj(wnm);
        }
      }
      max_imag = std::max(max_imag, std::abs(sum.imag()));
      field.w(jp, iq) = sum.real();
    }
  }
  field.max_imag = max_imag;
  if (max_imag > 1e-10)
    throw std::runtime_error("wigner_field: imaginary residue above 1e-10");

  double integral = 0.0;
  for (int jp = 0; jp < grid.np; ++jp)
    for (int iq = 0; iq < grid.nq; ++iq)
      integral += detail::trapezoid_weight(jp, grid.np) * detail::trapezoid_weight(iq, grid.nq) *
                  field.w(jp, iq);
  field.integral = integral * grid.dq() * grid.dp();
  field.normalization_warning = std::abs(field.integral - 1.0) > 1e-4;
  return field;
}

/// Integrated negativity indicator: Int |W| dq dp - 1.
inline double negativity_volume(const WignerField& field) {
  double integral = 0.0;
  for (int jp = 0; jp < field.grid.np; ++jp)
    for (int iq = 0; iq < field.grid.nq; ++iq)
      integral += detail::trapezoid_weight(jp, field.grid.np) *
                  detail::trapezoid_weight(iq, field.grid.nq) * std::abs(field.w(jp, iq));
  return integral * field.grid.dq() * field.grid.dp() - 1.0;
}

struct EntropyTriple {
  double s_nu1 = 0.0;   ///< linear entropy of mode 1
  double s_nu2 = 0.0;   ///< linear entropy of mode 2
  double s_nu_m = 0.0;  ///< field-matter linear entropy
};

/// Linear entropies 1 - Tr rho^2 for both modes and for the field-matter
/// bipartition (computed from the matter reduction of the pure state).
inline EntropyTriple linear_entropies(const GroundState& gs) {
  EntropyTriple e;
  e.s_nu1 = 1.0 - purity(reduce_to_mode(gs, 0));
  e.s_nu2 = 1.0 - purity(reduce_to_mode(gs, 1));
  e.s_nu_m = 1.0 - purity(reduce_to_matter(gs));
  return e;
}

}  // namespace dicke
