#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dicke/model.hpp"
#include "dicke/solver.hpp"
#include "dicke/util.hpp"

namespace dicke {

using ParamPoint = std::array<double, 2>;

/// Squared overlap of two converged ground states of the same system at
/// (possibly) different couplings. States from different parity sectors are
/// exactly orthogonal.
inline double fidelity(const GroundState& a, const GroundState& b) {
  if (!a.params.same_system(b.params))
    throw std::invalid_argument("fidelity: states belong to different systems");
  if (!(a.sector == b.sector)) return 0.0;
  const GroundState* small = &a;
  const GroundState* large = &b;
  if (small->basis->size() > large->basis->size()) std::swap(small, large);
  double sum = 0.0, comp = 0.0;  // Kahan: the overlap feeds 1-F comparisons near 1e-15
  for (int i = 0; i < small->basis->size(); ++i) {
    const std::int32_t j = large->basis->find(small->basis->states[i]);
    if (j < 0) continue;
    const double y = small->coeffs[i] * large->coeffs[j] - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return std::min(sum * sum, 1.0);
}

inline double bures_distance(double f) {
  if (f < 0.0 || f > 1.0) throw std::invalid_argument("bures_distance: fidelity outside [0, 1]");
  return std::sqrt(2.0 * (1.0 - std::sqrt(f)));
}

inline double bures_distance(const GroundState& a, const GroundState& b) {
  return bures_distance(fidelity(a, b));
}

/// Memoizes global ground states by (params, tol).
class GroundStateCache {
 public:
  std::shared_ptr<const GroundState> get(const ModelParams& params, double tol,
                                         const SolveOptions& opts = {}) {
    HashStream h;
    h.add_u64(params.fingerprint());
    h.add_f64(tol);
    const std::uint64_t key = h.value();
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    auto g = std::make_shared<GroundState>(global_ground_state(params, tol, opts));
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = map_.emplace(key, std::move(g));
    return it->second;
  }

  [[nodiscard]] std::size_t size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return map_.size();
  }

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_ptr<const GroundState>> map_;
};

/// Trajectory with fidelities between consecutive ground states.
struct FidelityProfile {
  std::vector<ParamPoint> points;
  double delta = 0.0;
  std::vector<std::shared_ptr<const GroundState>> states;  ///< one per point
  std::vector<double> F;           ///< F[i] between points i and i+1
  std::vector<int> minima;         ///< indices into F of strict local minima
};

inline std::vector<ParamPoint> make_trajectory(ParamPoint start, std::array<double, 2> direction,
                                               int points, double delta) {
  const double norm = std::hypot(direction[0], direction[1]);
  if (!(norm > 0.0)) throw std::invalid_argument("make_trajectory: zero direction");
  if (points < 2) throw std::invalid_argument("make_trajectory: need >= 2 points");
  std::vector<ParamPoint> out(points);
  for (int i = 0; i < points; ++i)
    out[i] = {start[0] + i * delta * direction[0] / norm,
              start[1] + i * delta * direction[1] / norm};
  return out;
}

inline FidelityProfile fidelity_profile(const ModelParams& params,
                                        const std::vector<ParamPoint>& trajectory, double delta,
                                        double tol = 1e-10, GroundStateCache* cache = nullptr,
                                        const SolveOptions& opts = {}, unsigned workers = 1) {
  if (trajectory.size() < 2)
    throw std::invalid_argument("fidelity_profile: need >= 2 trajectory points");
  if (!(delta > 0.0)) throw std::invalid_argument("fidelity_profile: delta must be positive");
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    const double step = std::hypot(trajectory[i + 1][0] - trajectory[i][0],
                                   trajectory[i + 1][1] - trajectory[i][1]);
    if (std::abs(step - delta) > 1e-6 * std::max(1.0, delta))
      throw std::invalid_argument("fidelity_profile: trajectory step differs from delta");
  }
  for (const auto& p : trajectory)
    if (p[0] < 0.0 || p[1] < 0.0)
      throw std::invalid_argument("fidelity_profile: negative coupling on trajectory");

  GroundStateCache local;
  GroundStateCache& c = cache ? *cache : local;
  FidelityProfile prof;
  prof.points = trajectory;
  prof.delta = delta;
  prof.states.resize(trajectory.size());
  parallel_for(
      trajectory.size(),
      [&](std::size_t i) { prof.states[i] = c.get(params.with_x(trajectory[i]), tol, opts); },
      workers);

  prof.F.resize(trajectory.size() - 1);
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i)
    prof.F[i] = fidelity(*prof.states[i], *prof.states[i + 1]);
  for (std::size_t i = 1; i + 1 < prof.F.size(); ++i)
    if (prof.F[i] < prof.F[i - 1] && prof.F[i] < prof.F[i + 1])
      prof.minima.push_back(static_cast<int>(i));
  return prof;
}

enum class TransitionType {
  Discontinuous,
  StableContinuous,
  UnstableContinuous,
  UnclassifiedContinuous
};

inline std::string transition_type_name(TransitionType t) {
  switch (t) {
    case TransitionType::Discontinuous: return "discontinuous";
    case TransitionType::StableContinuous: return "stable-continuous";
    case TransitionType::UnstableContinuous: return "unstable-continuous";
    case TransitionType::UnclassifiedContinuous: return "unclassified-continuous";
  }
  throw std::logic_error("bad TransitionType");
}

struct SeparatrixPoint {
  ParamPoint location{0.0, 0.0};
  std::array<double, 2> direction{0.0, 0.0};  ///< unit vector of the detecting family
  double f_min = 1.0;
  double chi = 0.0;  ///< 2 (1 - F) / step^2 along the detecting family
  TransitionType type = TransitionType::UnclassifiedContinuous;
  bool sector_change = false;
  ParitySector sector;  ///< ground sector at the location
};

struct SurfaceGrid {
  double x1_min = 0.0, x1_max = 3.0;
  int n1 = 61;
  double x2_min = 0.0, x2_max = 3.0;
  int n2 = 61;

  [[nodiscard]] double dx1() const { return n1 > 1 ? (x1_max - x1_min) / (n1 - 1) : 0.0; }
  [[nodiscard]] double dx2() const { return n2 > 1 ? (x2_max - x2_min) / (n2 - 1) : 0.0; }
  [[nodiscard]] ParamPoint at(int i, int j) const {
    return {x1_min + i * dx1(), x2_min + j * dx2()};
  }
};

struct SurfaceOptions {
  double eps_f = 1e-8;      ///< below this, a minimum counts as a fidelity zero
  unsigned workers = 0;
  SolveOptions solve;
};

/// Detects the minimum-fidelity separatrix on a rectangular grid. At every
/// node the fidelity towards a displaced partner is evaluated along four
/// direction families: the two axes (displacement delta) and the two
/// diagonals (displacement delta per component, so step delta*sqrt(2));
/// per-component diagonal steps keep partner points on the grid lattice
/// when delta equals the grid spacing. Strict local minima along a family
/// line mark separatrix points.
inline std::vector<SeparatrixPoint> minimum_fidelity_surface(const ModelParams& params,
                                                             const SurfaceGrid& grid, double delta,
                                                             double tol = 1e-10,
                                                             GroundStateCache* cache = nullptr,
                                                             const SurfaceOptions& opts = {}) {
  if (grid.n1 < 3 || grid.n2 < 3)
    throw std::invalid_argument("minimum_fidelity_surface: grid needs >= 3 points per axis");
  if (!(delta > 0.0)) throw std::invalid_argument("minimum_fidelity_surface: delta must be positive");
  if (delta > grid.dx1() + 1e-12 || delta > grid.dx2() + 1e-12)
    throw std::invalid_argument("minimum_fidelity_surface: delta exceeds grid spacing");
  if (grid.x1_min < 0.0 || grid.x2_min < 0.0)
    throw std::invalid_argument("minimum_fidelity_surface: negative couplings");

  GroundStateCache local;
  GroundStateCache& c = cache ? *cache : local;
  const int n1 = grid.n1, n2 = grid.n2;
  const int nodes = n1 * n2;

  // Family displacements in coupling space.
  const std::array<std::array<double, 2>, 4> disp{{{delta, 0.0},
                                                   {0.0, delta},
                                                   {delta, delta},
                                                   {delta, -delta}}};
  // Node states first, then partner fidelities; both phases are
  // order-independent so worker count cannot change any value.
  std::vector<std::shared_ptr<const GroundState>> state(nodes);
  parallel_for(
      static_cast<std::size_t>(nodes),
      [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / n2, j = static_cast<int>(idx) % n2;
        state[idx] = c.get(params.with_x(grid.at(i, j)), tol, opts.solve);
      },
      opts.workers);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::array<double, 4>> F(nodes, {nan, nan, nan, nan});
  std::vector<std::array<bool, 4>> flip(nodes, {false, false, false, false});
  parallel_for(
      static_cast<std::size_t>(nodes),
      [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / n2, j = static_cast<int>(idx) % n2;
        const ParamPoint x0 = grid.at(i, j);
        for (int f = 0; f < 4; ++f) {
          const ParamPoint xp{x0[0] + disp[f][0], x0[1] + disp[f][1]};
          if (xp[0] < 0.0 || xp[1] < 0.0) continue;
          const auto partner = c.get(params.with_x(xp), tol, opts.solve);
          F[idx][f] = fidelity(*state[idx], *partner);
          flip[idx][f] = !(state[idx]->sector == partner->sector);
        }
      },
      opts.workers);

  auto fat = [&](int i, int j, int f) -> double {
    if (i < 0 || i >= n1 || j < 0 || j >= n2) return nan;
    return F[i * n2 + j][f];
  };
  const std::array<std::array<int, 2>, 4> lattice_step{{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};

  std::vector<SeparatrixPoint> out;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const int idx = i * n2 + j;
      int best_f = -1;
      double best_val = 2.0;
      for (int f = 0; f < 4; ++f) {
        const double v = F[idx][f];
        if (!std::isfinite(v)) continue;
        const double prev = fat(i - lattice_step[f][0], j - lattice_step[f][1], f);
        const double next = fat(i + lattice_step[f][0], j + lattice_step[f][1], f);
        if (!std::isfinite(prev) || !std::isfinite(next)) continue;
        if (v < prev && v < next && v < best_val) {
          best_val = v;
          best_f = f;
        }
      }
      if (best_f < 0) continue;
      SeparatrixPoint sp;
      sp.location = grid.at(i, j);
      const double norm = std::hypot(disp[best_f][0], disp[best_f][1]);
      sp.direction = {disp[best_f][0] / norm, disp[best_f][1] / norm};
      sp.f_min = best_val;
      sp.chi = 2.0 * (1.0 - best_val) / (norm * norm);
      sp.sector_change = flip[idx][best_f];
      sp.sector = state[idx]->sector;
      sp.type = best_val < opts.eps_f ? TransitionType::Discontinuous
                                      : TransitionType::UnclassifiedContinuous;
      out.push_back(sp);
    }
  return out;
}

struct ClassifyOptions {
  std::vector<int> na_list{1, 2, 3, 4};
  int half_steps = 4;           ///< window is +- half_steps * delta along the direction
  double eps_f = 1e-8;
  double slope_stable = -0.05;  ///< fitted d ln F_min / d Na above this -> stable
  double slope_unstable = -0.5; ///< below this -> unstable
  SolveOptions solve;
  unsigned workers = 1;
};

struct ClassificationResult {
  TransitionType type = TransitionType::UnclassifiedContinuous;
  std::vector<int> na_list;
  std::vector<double> f_min;  ///< per Na
  double slope = 0.0;         ///< least-squares slope of ln F_min vs Na
  bool partial = false;       ///< some Na failed to converge and were dropped
};

/// Distinguishes stable from unstable continuous transitions by how the
/// minimum fidelity across the candidate point scales with Na.
inline ClassificationResult classify_transition(const ModelParams& params, ParamPoint location,
                                                std::array<double, 2> direction, double delta,
                                                double tol = 1e-10,
                                                const ClassifyOptions& opts = {},
                                                GroundStateCache* cache = nullptr) {
  if (opts.na_list.size() < 3)
    throw std::invalid_argument("classify_transition: need >= 3 values of Na");
  const double norm = std::hypot(direction[0], direction[1]);
  if (!(norm > 0.0)) throw std::invalid_argument("classify_transition: zero direction");
  const std::array<double, 2> d{direction[0] / norm, direction[1] / norm};

  std::vector<ParamPoint> window;
  for (int s = -opts.half_steps; s <= opts.half_steps; ++s) {
    const ParamPoint p{location[0] + s * delta * d[0], location[1] + s * delta * d[1]};
    if (p[0] < 0.0 || p[1] < 0.0) continue;
    window.push_back(p);
  }
  if (window.size() < 3)
    throw std::invalid_argument("classify_transition: window clipped below 3 points");

  ClassificationResult res;
  GroundStateCache local;
  GroundStateCache& c = cache ? *cache : local;
  for (int na : opts.na_list) {
    try {
      const auto prof = fidelity_profile(params.with_Na(na), window, delta, tol, &c, opts.solve,
                                         opts.workers);
      res.na_list.push_back(na);
      res.f_min.push_back(*std::min_element(prof.F.begin(), prof.F.end()));
    } catch (const TruncationError&) {
      res.partial = true;
    } catch (const SolverError&) {
      res.partial = true;
    }
  }
  if (res.na_list.size() < 2)
    throw TruncationError("classify_transition: fewer than two Na values converged",
                          {0, 0}, 1.0);

  for (double f : res.f_min)
    if (f < opts.eps_f) {
      res.type = TransitionType::Discontinuous;
      return res;
    }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(res.na_list.size());
  for (std::size_t i = 0; i < res.na_list.size(); ++i) {
    const double xi = res.na_list[i], yi = std::log(res.f_min[i]);
    sx += xi;
    sy += yi;
    sxx += xi * xi;
    sxy += xi * yi;
  }
  res.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  if (res.slope < opts.slope_unstable)
    res.type = TransitionType::UnstableContinuous;
  else if (res.slope > opts.slope_stable)
    res.type = TransitionType::StableContinuous;
  else
    res.type = TransitionType::UnclassifiedContinuous;
  return res;
}

}  // namespace dicke
