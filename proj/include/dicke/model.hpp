#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "dicke/util.hpp"

namespace dicke {

/// Which two of the three level pairs carry a field mode.
enum class ConfigKind { Xi, Lambda, V };

/// Ordered level pair (j, k) with 1 <= j < k <= 3.
using LevelPair = std::array<int, 2>;

inline std::string config_name(ConfigKind kind) {
  switch (kind) {
    case ConfigKind::Xi: return "xi";
    case ConfigKind::Lambda: return "lambda";
    case ConfigKind::V: return "v";
  }
  throw std::logic_error("bad ConfigKind");
}

inline std::optional<ConfigKind> parse_config_kind(const std::string& s) {
  if (s == "xi") return ConfigKind::Xi;
  if (s == "lambda") return ConfigKind::Lambda;
  if (s == "v") return ConfigKind::V;
  return std::nullopt;
}

/// The two active pairs of a configuration, in lexicographic pair order.
/// Mode index 0 couples to the first pair, mode index 1 to the second.
inline std::array<LevelPair, 2> active_pairs(ConfigKind kind) {
  switch (kind) {
    case ConfigKind::Xi: return {{{1, 2}, {2, 3}}};
    case ConfigKind::Lambda: return {{{1, 3}, {2, 3}}};
    case ConfigKind::V: return {{{1, 2}, {1, 3}}};
  }
  throw std::logic_error("bad ConfigKind");
}

struct AtomicConfig {
  ConfigKind kind;
  std::array<LevelPair, 2> pairs;

  static AtomicConfig make(ConfigKind kind) { return {kind, active_pairs(kind)}; }
  bool operator==(const AtomicConfig& o) const { return kind == o.kind; }
};

inline std::array<LevelPair, 2> active_pairs(const AtomicConfig& config) {
  return config.pairs;
}

/// Critical coupling of the two-level pair (j, k):
///   mu_c = sqrt(Omega_jk (omega_k - omega_j)) / 2.
/// Degenerate or inverted level pairs have no critical coupling.
inline double critical_coupling(double Omega, double omega_j, double omega_k) {
  if (!(Omega > 0.0)) throw std::invalid_argument("critical_coupling: Omega must be positive");
  if (!(omega_k > omega_j))
    throw std::invalid_argument("critical_coupling: requires omega_k > omega_j");
  return 0.5 * std::sqrt(Omega * (omega_k - omega_j));
}

/// Model parameters in units of hbar*omega_3 (omega_1 = 0, omega_3 = 1 fixed).
/// Mode quantities are indexed by active-pair position (0 or 1).
struct ModelParams {
  AtomicConfig config;
  std::array<double, 3> omega{0.0, 0.0, 1.0};
  std::array<double, 2> Omega{1.0, 1.0};  ///< mode frequencies
  std::array<double, 2> x{0.0, 0.0};      ///< couplings in units of mu_c per mode
  int Na = 1;

  static ModelParams make(ConfigKind kind, double omega2, std::array<double, 2> Omega,
                          std::array<double, 2> x, int Na) {
    if (!(omega2 >= 0.0 && omega2 <= 1.0))
      throw std::invalid_argument("ModelParams: omega2 outside [0, 1]");
    for (double O : Omega)
      if (!(O > 0.0)) throw std::invalid_argument("ModelParams: Omega must be positive");
    for (double xi : x)
      if (!(xi >= 0.0)) throw std::invalid_argument("ModelParams: x must be nonnegative");
    if (Na < 1) throw std::invalid_argument("ModelParams: Na must be >= 1");
    ModelParams p;
    p.config = AtomicConfig::make(kind);
    p.omega = {0.0, omega2, 1.0};
    p.Omega = Omega;
    p.x = x;
    p.Na = Na;
    return p;
  }

  [[nodiscard]] double critical(int mode) const {
    const auto& pr = config.pairs[mode];
    return critical_coupling(Omega[mode], omega[pr[0] - 1], omega[pr[1] - 1]);
  }

  /// Dimensionful coupling mu = x * mu_c for the given mode.
  [[nodiscard]] double mu(int mode) const { return x[mode] * critical(mode); }

  [[nodiscard]] ModelParams with_x(std::array<double, 2> xs) const {
    ModelParams p = *this;
    for (double xi : xs)
      if (!(xi >= 0.0)) throw std::invalid_argument("ModelParams: x must be nonnegative");
    p.x = xs;
    return p;
  }

  [[nodiscard]] ModelParams with_Na(int n) const {
    if (n < 1) throw std::invalid_argument("ModelParams: Na must be >= 1");
    ModelParams p = *this;
    p.Na = n;
    return p;
  }

  /// True when two parameter sets describe the same system up to couplings.
  [[nodiscard]] bool same_system(const ModelParams& o) const {
    return config == o.config && omega == o.omega && Omega == o.Omega && Na == o.Na;
  }

  [[nodiscard]] std::uint64_t fingerprint() const {
    HashStream h;
    h.add_i32(static_cast<int>(config.kind));
    h.add_i32(Na);
    for (double v : omega) h.add_f64(v);
    for (double v : Omega) h.add_f64(v);
    for (double v : x) h.add_f64(v);
    return h.value();
  }
};

/// One configuration basis ket: photon occupations per mode plus the
/// symmetric-irrep matter occupations (n_1, n_2, n_3).
struct BasisState {
  std::array<int, 2> nu{0, 0};
  std::array<int, 3> n{0, 0, 0};

  bool operator==(const BasisState& o) const { return nu == o.nu && n == o.n; }

  /// Injective 54-bit key; requires nu < 4096 and n < 1024 componentwise.
  [[nodiscard]] std::uint64_t packed() const {
    return static_cast<std::uint64_t>(nu[0]) | (static_cast<std::uint64_t>(nu[1]) << 12) |
           (static_cast<std::uint64_t>(n[0]) << 24) | (static_cast<std::uint64_t>(n[1]) << 34) |
           (static_cast<std::uint64_t>(n[2]) << 44);
  }
};

enum class Parity { Even, Odd };

struct ParitySector {
  Parity p1 = Parity::Even;
  Parity p2 = Parity::Even;

  bool operator==(const ParitySector& o) const { return p1 == o.p1 && p2 == o.p2; }

  [[nodiscard]] int index() const {
    return 2 * (p1 == Parity::Odd) + (p2 == Parity::Odd);
  }
  static ParitySector from_index(int i) {
    if (i < 0 || i > 3) throw std::invalid_argument("ParitySector: index outside 0..3");
    return {(i & 2) ? Parity::Odd : Parity::Even, (i & 1) ? Parity::Odd : Parity::Even};
  }
  [[nodiscard]] std::string name() const {
    static const char* names[4] = {"ee", "eo", "oe", "oo"};
    return names[index()];
  }
};

/// Integer coefficients of the two conserved excitation sums,
///   K_s = sum_p photon[s][p] nu_p + sum_j matter[s][j] n_j.
struct ParityCoefficients {
  std::array<std::array<int, 2>, 2> photon;
  std::array<std::array<int, 3>, 2> matter;

  static ParityCoefficients for_config(ConfigKind kind) {
    switch (kind) {
      case ConfigKind::Xi:
        // K1 = nu_12 + nu_23 + n_2 + 2 n_3, K2 = nu_23 + n_3
        return {{{{{1, 1}}, {{0, 1}}}}, {{{{0, 1, 2}}, {{0, 0, 1}}}}};
      case ConfigKind::Lambda:
        // K1 = nu_13 + nu_23 + n_3, K2 = nu_23 + n_1 + n_3
        return {{{{{1, 1}}, {{0, 1}}}}, {{{{0, 0, 1}}, {{1, 0, 1}}}}};
      case ConfigKind::V:
        // K1 = nu_12 + n_2, K2 = nu_13 + n_3
        return {{{{{1, 0}}, {{0, 1}}}}, {{{{0, 1, 0}}, {{0, 0, 1}}}}};
    }
    throw std::logic_error("bad ConfigKind");
  }

  [[nodiscard]] int eval(int s, const BasisState& st) const {
    return photon[s][0] * st.nu[0] + photon[s][1] * st.nu[1] + matter[s][0] * st.n[0] +
           matter[s][1] * st.n[1] + matter[s][2] * st.n[2];
  }

  /// Solves the 2x2 integer system photon * nu = r. Requires |det| = 1,
  /// which holds for all three configurations.
  [[nodiscard]] std::array<int, 2> invert_photon(std::array<int, 2> r) const {
    const int a = photon[0][0], b = photon[0][1], c = photon[1][0], d = photon[1][1];
    const int det = a * d - b * c;
    if (det != 1 && det != -1)
      throw std::logic_error("ParityCoefficients: photon block not unimodular");
    return {(d * r[0] - b * r[1]) / det, (a * r[1] - c * r[0]) / det};
  }
};

inline std::array<int, 2> constants_of_motion(const AtomicConfig& config, const BasisState& st) {
  auto ops = ParityCoefficients::for_config(config.kind);
  return {ops.eval(0, st), ops.eval(1, st)};
}

inline ParitySector parity_sector(std::array<int, 2> K) {
  return {(K[0] % 2) ? Parity::Odd : Parity::Even, (K[1] % 2) ? Parity::Odd : Parity::Even};
}

inline ParitySector parity_sector(const AtomicConfig& config, const BasisState& st) {
  return parity_sector(constants_of_motion(config, st));
}

/// Basis of one parity sector under the truncation nu such that K_1 <= kcaps[0],
/// K_2 <= kcaps[1]; states are ordered lexicographically in (K_1, K_2, n_1, n_3).
struct SectorBasis {
  AtomicConfig config;
  int Na = 1;
  ParitySector sector;
  std::array<int, 2> kcaps{0, 0};
  std::vector<BasisState> states;
  std::unordered_map<std::uint64_t, std::int32_t> index;

  [[nodiscard]] int size() const { return static_cast<int>(states.size()); }

  [[nodiscard]] std::int32_t find(const BasisState& st) const {
    auto it = index.find(st.packed());
    return it == index.end() ? -1 : it->second;
  }

  void rebuild_index() {
    index.clear();
    index.reserve(states.size() * 2);
    for (std::size_t i = 0; i < states.size(); ++i)
      index.emplace(states[i].packed(), static_cast<std::int32_t>(i));
    if (index.size() != states.size())
      throw std::logic_error("SectorBasis: duplicate states");
  }
};

namespace detail {

template <typename Keep>
SectorBasis enumerate_filtered(const ModelParams& params, ParitySector sector,
                               std::array<int, 2> kcaps, Keep&& keep) {
  if (kcaps[0] < 0 || kcaps[1] < 0)
    throw std::invalid_argument("enumerate_sector_basis: negative cap");
  SectorBasis b;
  b.config = params.config;
  b.Na = params.Na;
  b.sector = sector;
  b.kcaps = kcaps;
  const auto ops = ParityCoefficients::for_config(params.config.kind);
  for (int k1 = 0; k1 <= kcaps[0]; ++k1)
    for (int k2 = 0; k2 <= kcaps[1]; ++k2) {
      if (!keep(k1, k2)) continue;
      for (int n1 = 0; n1 <= params.Na; ++n1)
        for (int n3 = 0; n3 + n1 <= params.Na; ++n3) {
          const int n2 = params.Na - n1 - n3;
          const std::array<int, 3> n{n1, n2, n3};
          const std::array<int, 2> r{
              k1 - (ops.matter[0][0] * n1 + ops.matter[0][1] * n2 + ops.matter[0][2] * n3),
              k2 - (ops.matter[1][0] * n1 + ops.matter[1][1] * n2 + ops.matter[1][2] * n3)};
          const auto nu = ops.invert_photon(r);
          if (nu[0] < 0 || nu[1] < 0) continue;
          b.states.push_back(BasisState{nu, n});
        }
    }
  b.rebuild_index();
  return b;
}

}  // namespace detail

inline SectorBasis enumerate_sector_basis(const ModelParams& params, ParitySector sector,
                                          std::array<int, 2> kcaps) {
  const int want1 = sector.p1 == Parity::Odd, want2 = sector.p2 == Parity::Odd;
  return detail::enumerate_filtered(params, sector, kcaps, [&](int k1, int k2) {
    return (k1 % 2) == want1 && (k2 % 2) == want2;
  });
}

/// All states with K_1 <= kcaps[0], K_2 <= kcaps[1] regardless of parity.
/// Used for whole-space checks; the sector label is meaningless here.
inline SectorBasis enumerate_union_basis(const ModelParams& params, std::array<int, 2> kcaps) {
  return detail::enumerate_filtered(params, ParitySector{}, kcaps,
                                    [](int, int) { return true; });
}

/// Collective ladder operator A_jk on a symmetric-irrep occupation vector
/// (levels are 1-based): moves one quantum from level k to level j with
/// amplitude sqrt((n_j + 1) n_k). Returns the moved occupations and the
/// amplitude; amplitude 0 leaves the occupations unchanged.
inline std::pair<std::array<int, 3>, double> matter_ladder_element(const std::array<int, 3>& n,
                                                                   int j, int k) {
  if (j < 1 || j > 3 || k < 1 || k > 3 || j == k)
    throw std::invalid_argument("matter_ladder_element: need distinct levels in 1..3");
  if (n[k - 1] == 0) return {n, 0.0};
  std::array<int, 3> out = n;
  --out[k - 1];
  ++out[j - 1];
  const double amp = std::sqrt(static_cast<double>((n[j - 1] + 1) * n[k - 1]));
  return {out, amp};
}

struct HamiltonianMatrix {
  Eigen::SparseMatrix<double> mat;
  bool rwa = false;

  [[nodiscard]] int dim() const { return static_cast<int>(mat.rows()); }
};

/// Builds the sector Hamiltonian over the given basis. States outside the
/// basis are dropped, and the sparse matrix is exactly symmetric entry by
/// entry because mirrored elements evaluate the same integer products.
inline HamiltonianMatrix build_hamiltonian(const ModelParams& params, const SectorBasis& basis,
                                           bool rwa = false) {
  const int dim = basis.size();
  const double inv_sqrt_na = 1.0 / std::sqrt(static_cast<double>(params.Na));
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(dim) * (rwa ? 5 : 9));

  for (int s = 0; s < dim; ++s) {
    const BasisState& st = basis.states[s];
    double diag = 0.0;
    for (int p = 0; p < 2; ++p) diag += params.Omega[p] * st.nu[p];
    for (int j = 0; j < 3; ++j) diag += params.omega[j] * st.n[j];
    trips.emplace_back(s, s, diag);

    for (int p = 0; p < 2; ++p) {
      const double mu = params.mu(p);
      if (mu == 0.0) continue;
      const double pref = -mu * inv_sqrt_na;
      const int j = params.config.pairs[p][0], k = params.config.pairs[p][1];

      auto emit = [&](const std::array<int, 3>& n_to, double m_amp, int dnu) {
        if (m_amp == 0.0) return;
        const int nu_to = st.nu[p] + dnu;
        if (nu_to < 0) return;
        const double p_amp =
            dnu > 0 ? std::sqrt(static_cast<double>(nu_to)) : std::sqrt(static_cast<double>(st.nu[p]));
        BasisState to = st;
        to.n = n_to;
        to.nu[p] = nu_to;
        const std::int32_t t = basis.find(to);
        if (t < 0) return;
        trips.emplace_back(t, s, pref * (m_amp * p_amp));
      };

      const auto lower = matter_ladder_element(st.n, j, k);  // A_jk: k -> j
      const auto raise = matter_ladder_element(st.n, k, j);  // A_kj: j -> k
      emit(raise.first, raise.second, -1);  // A_kj a
      emit(lower.first, lower.second, +1);  // A_jk a+
      if (!rwa) {
        emit(lower.first, lower.second, -1);  // A_jk a
        emit(raise.first, raise.second, +1);  // A_kj a+
      }
    }
  }

  HamiltonianMatrix h;
  h.rwa = rwa;
  h.mat.resize(dim, dim);
  h.mat.setFromTriplets(trips.begin(), trips.end());
  return h;
}

/// Max |(K_which(r) - K_which(c)) H_rc| over the stored elements of H built
/// on the union basis at the given caps. Zero for an exact constant of
/// motion; `ops` substitutes trial coefficients for cross-checks.
inline double commutator_norm(const ModelParams& params, std::array<int, 2> kcaps, int which,
                              bool rwa = true, const ParityCoefficients* ops = nullptr) {
  if (which < 0 || which > 1) throw std::invalid_argument("commutator_norm: which must be 0 or 1");
  const SectorBasis basis = enumerate_union_basis(params, kcaps);
  const HamiltonianMatrix h = build_hamiltonian(params, basis, rwa);
  const ParityCoefficients use =
      ops ? *ops : ParityCoefficients::for_config(params.config.kind);
  std::vector<int> K(basis.states.size());
  for (std::size_t i = 0; i < basis.states.size(); ++i)
    K[i] = use.eval(which, basis.states[i]);
  double worst = 0.0;
  for (int c = 0; c < h.mat.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(h.mat, c); it; ++it) {
      const double v = std::abs((K[it.row()] - K[it.col()]) * it.value());
      if (v > worst) worst = v;
    }
  return worst;
}

}  // namespace dicke
