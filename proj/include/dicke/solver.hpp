#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <lapacke.h>

#include "dicke/model.hpp"
#include "dicke/util.hpp"

namespace dicke {

/// Iterative eigensolver did not reach the requested residual.
struct SolverError : std::runtime_error {
  double residual;
  explicit SolverError(const std::string& what, double resid)
      : std::runtime_error(what), residual(resid) {}
};

/// Truncation loop hit the cap ceiling before the infidelity target.
struct TruncationError : std::runtime_error {
  std::array<int, 2> kcaps;
  double infidelity;
  TruncationError(const std::string& what, std::array<int, 2> caps, double infid)
      : std::runtime_error(what), kcaps(caps), infidelity(infid) {}
};

struct SolveOptions {
  int dense_threshold = 3000;  ///< dense solver up to this dimension, Lanczos past it
  double iter_tol = 1e-10;     ///< Lanczos residual target, relative to max(1, |E|)
  int max_iter = 600;
  int cap_ceiling = 120;       ///< per-component limit for the truncation loop
  bool parallel_sectors = false;
};

struct TruncationStep {
  std::array<int, 2> kcaps;
  int dim = 0;
  double energy = 0.0;
  double infidelity = 1.0;  ///< 1 - F against the next finer basis
};

struct TruncationReport {
  std::array<int, 2> kcaps{0, 0};
  int dim = 0;
  double infidelity = 1.0;
  double tol = 0.0;
  std::vector<TruncationStep> steps;
};

/// Converged ground state of one parity sector (or the sector winning the
/// global minimum). Coefficients follow the basis ordering of `basis` and
/// carry the sign convention that the largest-magnitude coefficient is
/// positive.
struct GroundState {
  ModelParams params;
  ParitySector sector;
  std::shared_ptr<const SectorBasis> basis;
  Eigen::VectorXd coeffs;
  double energy = 0.0;
  TruncationReport truncation;
  bool degenerate = false;  ///< another sector ties within 1e-10
  std::array<double, 4> sector_energies{0.0, 0.0, 0.0, 0.0};  ///< set by global solves
};

namespace detail {

inline void canonical_sign(Eigen::VectorXd& v) {
  int arg = 0;
  double best = -1.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  if (v[arg] < 0.0) v = -v;
}

inline std::pair<double, Eigen::VectorXd> dense_lowest(const Eigen::SparseMatrix<double>& m) {
  const int n = static_cast<int>(m.rows());
  Eigen::MatrixXd a(m);
  Eigen::VectorXd w(n), z(n);
  lapack_int found = 0;
  std::array<lapack_int, 2> isuppz{};
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, a.data(), n, 0.0, 0.0, 1, 1, 0.0,
                     &found, w.data(), z.data(), n, isuppz.data());
  if (info != 0 || found < 1)
    throw SolverError("dense eigensolver failed (dsyevr info " + std::to_string(info) + ")",
                      std::numeric_limits<double>::infinity());
  return {w[0], z};
}

inline std::pair<double, Eigen::VectorXd> lanczos_lowest(const Eigen::SparseMatrix<double>& m,
                                                         double tol, int max_iter) {
  const int n = static_cast<int>(m.rows());
  if (n == 1) return {m.coeff(0, 0), Eigen::VectorXd::Ones(1)};

  // Deterministic start: unit vector on the smallest diagonal entry.
  int start = 0;
  double dmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double d = m.coeff(i, i);
    if (d < dmin) {
      dmin = d;
      start = i;
    }
  }
  std::vector<Eigen::VectorXd> V;
  V.push_back(Eigen::VectorXd::Unit(n, start));
  std::vector<double> alpha, beta;
  const int cap = std::min(max_iter, n);

  auto ritz_pair = [&](int k) -> std::pair<double, Eigen::VectorXd> {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), k);
    Eigen::VectorXd e(std::max(0, k - 1));
    for (int i = 0; i + 1 < k; ++i) e[i] = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e);
    Eigen::VectorXd s = es.eigenvectors().col(0);
    return {es.eigenvalues()[0], s};
  };

  double b = 0.0;
  Eigen::VectorXd w;
  for (int it = 0; it < cap; ++it) {
    w = m * V[it];
    const double a = V[it].dot(w);
    alpha.push_back(a);
    w -= a * V[it];
    if (it > 0) w -= beta[it - 1] * V[it - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : V) w -= v.dot(w) * v;
    b = w.norm();

    const int k = it + 1;
    const bool exhausted = (b < 1e-13) || (k == n) || (k == cap);
    if (exhausted || k % 4 == 0) {
      auto [theta, s] = ritz_pair(k);
      const double scale = std::max(1.0, std::abs(theta));
      if (b * std::abs(s[k - 1]) <= tol * scale || exhausted) {
        Eigen::VectorXd ritz = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < k; ++i) ritz += s[i] * V[i];
        ritz.normalize();
        const double resid = (m * ritz - theta * ritz).norm();
        if (resid <= 100.0 * tol * scale) return {theta, ritz};
        if (exhausted)
          throw SolverError("Lanczos stalled before reaching tolerance", resid);
      }
    }
    beta.push_back(b);
    V.push_back(w / b);
  }
  throw SolverError("Lanczos failed to converge", b);
}

}  // namespace detail

/// Lowest eigenpair of a sector Hamiltonian. Dense up to
/// SolveOptions::dense_threshold, Lanczos with full reorthogonalization
/// beyond it; `method` forces one path ("dense" / "iterative").
inline std::pair<double, Eigen::VectorXd> sector_ground_state(const HamiltonianMatrix& h,
                                                              const SectorBasis& basis,
                                                              const SolveOptions& opts = {},
                                                              const char* method = nullptr) {
  if (h.dim() != basis.size())
    throw std::invalid_argument("sector_ground_state: Hamiltonian/basis dimension mismatch");
  if (h.dim() == 0) throw std::invalid_argument("sector_ground_state: empty basis");
  bool dense = h.dim() <= opts.dense_threshold;
  if (method != nullptr) dense = std::string_view(method) == "dense";
  auto [e, v] = dense ? detail::dense_lowest(h.mat)
                      : detail::lanczos_lowest(h.mat, opts.iter_tol, opts.max_iter);
  v.normalize();
  detail::canonical_sign(v);
  return {e, std::move(v)};
}

/// Process-wide cache of sector bases. Bases depend only on configuration,
/// Na, sector and caps, so they are shared across coupling values.
inline std::shared_ptr<const SectorBasis> shared_basis(const ModelParams& params,
                                                       ParitySector sector,
                                                       std::array<int, 2> kcaps) {
  static std::mutex mu;
  static std::unordered_map<std::uint64_t, std::shared_ptr<const SectorBasis>> pool;
  HashStream key;
  key.add_i32(static_cast<int>(params.config.kind));
  key.add_i32(params.Na);
  key.add_i32(sector.index());
  key.add_i32(kcaps[0]);
  key.add_i32(kcaps[1]);
  const std::uint64_t k = key.value();
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = pool.find(k);
    if (it != pool.end()) return it->second;
  }
  auto built = std::make_shared<SectorBasis>(enumerate_sector_basis(params, sector, kcaps));
  std::lock_guard<std::mutex> lock(mu);
  auto [it, inserted] = pool.emplace(k, std::move(built));
  return it->second;
}

/// Grows caps by (+2, +2) from the smallest parity-compatible values until
/// the ground state overlaps the next refinement with infidelity <= tol.
/// Returns the state at the last caps before the tolerance was met.
inline GroundState converged_ground_state(const ModelParams& params, ParitySector sector,
                                          double tol = 1e-10, const SolveOptions& opts = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("converged_ground_state: tol must be positive");
  std::array<int, 2> caps{sector.p1 == Parity::Odd ? 1 : 0, sector.p2 == Parity::Odd ? 1 : 0};
  auto basis = shared_basis(params, sector, caps);
  while (basis->size() == 0) {
    caps = {caps[0] + 2, caps[1] + 2};
    if (caps[0] > opts.cap_ceiling || caps[1] > opts.cap_ceiling)
      throw TruncationError("sector basis empty up to the cap ceiling", caps, 1.0);
    basis = shared_basis(params, sector, caps);
  }
  auto [e1, v1] = sector_ground_state(build_hamiltonian(params, *basis, false), *basis, opts);

  std::vector<TruncationStep> steps;
  for (;;) {
    const std::array<int, 2> next{caps[0] + 2, caps[1] + 2};
    if (next[0] > opts.cap_ceiling || next[1] > opts.cap_ceiling) {
      const double last = steps.empty() ? 1.0 : steps.back().infidelity;
      throw TruncationError("cap ceiling reached at infidelity " + std::to_string(last),
                            caps, last);
    }
    auto basis2 = shared_basis(params, sector, next);
    auto [e2, v2] = sector_ground_state(build_hamiltonian(params, *basis2, false), *basis2, opts);

    double ov = 0.0;
    for (int i = 0; i < basis->size(); ++i) {
      const std::int32_t j = basis2->find(basis->states[i]);
      if (j < 0) throw std::logic_error("refined basis lost a state");
      ov += v1[i] * v2[j];
    }
    const double infid = 1.0 - std::min(ov * ov, 1.0);
    steps.push_back({caps, basis->size(), e1, infid});

    if (infid <= tol) {
      GroundState g;
      g.params = params;
      g.sector = sector;
      g.basis = basis;
      g.coeffs = std::move(v1);
      g.energy = e1;
      g.truncation = {caps, basis->size(), infid, tol, std::move(steps)};
      return g;
    }
    caps = next;
    basis = std::move(basis2);
    e1 = e2;
    v1 = std::move(v2);
  }
}

/// Minimum-energy converged state over the four parity sectors. Ties within
/// 1e-10 keep the earlier sector in (ee, eo, oe, oo) order and set the
/// degeneracy flag.
inline GroundState global_ground_state(const ModelParams& params, double tol = 1e-10,
                                       const SolveOptions& opts = {}) {
  std::array<std::optional<GroundState>, 4> results;
  std::array<std::exception_ptr, 4> errors;
  auto run = [&](std::size_t i) {
    try {
      results[i] = converged_ground_state(params, ParitySector::from_index(static_cast<int>(i)),
                                          tol, opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (opts.parallel_sectors)
    parallel_for(4, run, 4);
  else
    for (std::size_t i = 0; i < 4; ++i) run(i);
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  std::array<double, 4> energies{};
  for (int i = 0; i < 4; ++i) energies[i] = results[i]->energy;
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (energies[i] < energies[best]) best = i;
  GroundState g = std::move(*results[best]);
  g.sector_energies = energies;
  for (int i = 0; i < 4; ++i)
    if (i != best && std::abs(energies[i] - energies[best]) < 1e-10) g.degenerate = true;
  return g;
}

}  // namespace dicke
