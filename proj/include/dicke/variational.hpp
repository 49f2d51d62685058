#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "dicke/model.hpp"

namespace dicke {

/// Trial state: coherent field amplitudes (intensive, alpha/sqrt(Na)) and a
/// normalized single-atom amplitude vector.
struct CoherentParams {
  std::array<std::complex<double>, 2> alpha{{{0.0, 0.0}, {0.0, 0.0}}};
  std::array<std::complex<double>, 3> c{{{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};

  [[nodiscard]] double c_norm() const {
    double s = 0.0;
    for (const auto& v : c) s += std::norm(v);
    return std::sqrt(s);
  }

  void normalize() {
    const double s = c_norm();
    if (s <= 0.0) throw std::invalid_argument("CoherentParams: zero atomic amplitude");
    for (auto& v : c) v /= s;
  }
};

/// Energy per particle of the product coherent trial state,
///   E = sum_p Omega_p |alpha_p|^2 + sum_j omega_j |c_j|^2
///       - sum_p 4 mu_p Re(conj(c_j) c_k) Re(alpha_p),
/// with (j, k) the active pair of mode p.
inline double variational_energy(const ModelParams& params, const CoherentParams& cp) {
  if (std::abs(cp.c_norm() - 1.0) > 1e-12)
    throw std::invalid_argument("variational_energy: atomic amplitudes not normalized");
  double e = 0.0;
  for (int p = 0; p < 2; ++p) e += params.Omega[p] * std::norm(cp.alpha[p]);
  for (int j = 0; j < 3; ++j) e += params.omega[j] * std::norm(cp.c[j]);
  for (int p = 0; p < 2; ++p) {
    const int j = params.config.pairs[p][0] - 1, k = params.config.pairs[p][1] - 1;
    const double re_cc = (std::conj(cp.c[j]) * cp.c[k]).real();
    e -= 4.0 * params.mu(p) * re_cc * cp.alpha[p].real();
  }
  return e;
}

/// Mean-field region label: Normal (both modes dark) or collective with a
/// single dominant mode.
struct VariationalRegion {
  int collective_mode = -1;  ///< -1 normal, else active-pair index 0/1

  [[nodiscard]] bool normal() const { return collective_mode < 0; }
  [[nodiscard]] std::string name(const AtomicConfig& config) const {
    if (normal()) return "N";
    const auto& pr = config.pairs[collective_mode];
    return "S" + std::to_string(pr[0]) + std::to_string(pr[1]);
  }
  bool operator==(const VariationalRegion& o) const {
    return collective_mode == o.collective_mode;
  }
};

struct VariationalResult {
  double energy = 0.0;  ///< per particle
  CoherentParams minimizer;
  VariationalRegion region;
  bool converged = false;  ///< best two starts agree within 1e-8
  int evaluations = 0;
};

struct MinimizeOptions {
  int max_starts = 32;
  double step0 = 0.25;
  double step_min = 1e-9;
  double shrink = 0.35;
  double eps_alpha = 1e-6;  ///< |alpha| threshold for region classification
};

namespace detail {

/// Greedy coordinate descent on (Re/Im alpha, Re/Im c) with the atomic part
/// renormalized inside the objective.
inline std::pair<double, CoherentParams> descend(const ModelParams& params, CoherentParams cp,
                                                 const MinimizeOptions& opts, int& evals) {
  auto pack = [&](const CoherentParams& q, std::array<double, 10>& th) {
    th = {q.alpha[0].real(), q.alpha[0].imag(), q.alpha[1].real(), q.alpha[1].imag(),
          q.c[0].real(),     q.c[0].imag(),     q.c[1].real(),     q.c[1].imag(),
          q.c[2].real(),     q.c[2].imag()};
  };
  auto unpack = [&](const std::array<double, 10>& th) {
    CoherentParams q;
    q.alpha = {std::complex<double>(th[0], th[1]), std::complex<double>(th[2], th[3])};
    q.c = {std::complex<double>(th[4], th[5]), std::complex<double>(th[6], th[7]),
           std::complex<double>(th[8], th[9])};
    return q;
  };
  auto eval = [&](const std::array<double, 10>& th) {
    CoherentParams q = unpack(th);
    if (q.c_norm() < 1e-8) return std::numeric_limits<double>::infinity();
    q.normalize();
    ++evals;
    return variational_energy(params, q);
  };

  std::array<double, 10> th;
  cp.normalize();
  pack(cp, th);
  double best = eval(th);
  for (double h = opts.step0; h >= opts.step_min; h *= opts.shrink) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int i = 0; i < 10; ++i) {
        for (double sgn : {+1.0, -1.0}) {
          auto trial = th;
          trial[i] += sgn * h;
          const double e = eval(trial);
          if (e < best - 1e-15) {
            best = e;
            th = trial;
            improved = true;
          }
        }
      }
    }
  }
  CoherentParams out = unpack(th);
  out.normalize();
  return {best, out};
}

}  // namespace detail

/// Multistart minimization of the coherent energy surface. Starts cover the
/// atomic corners, pair mixes and both condensate signs for each mode.
inline VariationalResult minimize_variational(const ModelParams& params,
                                              const MinimizeOptions& opts = {}) {
  std::vector<CoherentParams> starts;
  std::vector<std::array<std::complex<double>, 3>> cs;
  for (int j = 0; j < 3; ++j) {
    std::array<std::complex<double>, 3> c{{{0, 0}, {0, 0}, {0, 0}}};
    c[j] = 1.0;
    cs.push_back(c);
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < 3; ++j)
    for (int k = j + 1; k < 3; ++k)
      for (double sgn : {+1.0, -1.0}) {
        std::array<std::complex<double>, 3> c{{{0, 0}, {0, 0}, {0, 0}}};
        c[j] = r;
        c[k] = sgn * r;
        cs.push_back(c);
      }
  cs.push_back({std::complex<double>(1, 0), std::complex<double>(1, 0),
                std::complex<double>(1, 0)});  // normalized later

  const std::array<double, 2> scale{params.mu(0) / params.Omega[0],
                                    params.mu(1) / params.Omega[1]};
  for (const auto& c : cs) {
    for (int mode = 0; mode < 3; ++mode) {
      if (static_cast<int>(starts.size()) >= opts.max_starts) break;
      CoherentParams cp;
      cp.c = c;
      cp.alpha = {0.0, 0.0};
      if (mode == 1) cp.alpha[0] = scale[0];
      if (mode == 2) cp.alpha[1] = scale[1];
      cp.normalize();
      starts.push_back(cp);
    }
  }
  while (static_cast<int>(starts.size()) < opts.max_starts) {
    CoherentParams cp;
    cp.c = cs[starts.size() % cs.size()];
    cp.alpha = {scale[0], scale[1]};
    cp.normalize();
    starts.push_back(cp);
  }

  int evals = 0;
  double best = std::numeric_limits<double>::infinity(), second = best;
  CoherentParams arg;
  for (const auto& s : starts) {
    auto [e, q] = detail::descend(params, s, opts, evals);
    if (e < best) {
      second = best;
      best = e;
      arg = q;
    } else if (e < second) {
      second = e;
    }
  }

  VariationalResult res;
  res.energy = best;
  res.minimizer = arg;
  res.evaluations = evals;
  res.converged = std::isfinite(second) && (second - best) <= 1e-8;
  const double a0 = std::abs(arg.alpha[0]), a1 = std::abs(arg.alpha[1]);
  if (a0 >= opts.eps_alpha || a1 >= opts.eps_alpha)
    res.region.collective_mode = a0 >= a1 ? 0 : 1;
  return res;
}

/// Ehrenfest order marks along a uniformly spaced parameter path.
struct TransitionMark {
  int index = 0;  ///< path point where the change is detected
  std::array<double, 2> x{0.0, 0.0};
  int order = 0;  ///< 1 = slope jump, 2 = curvature jump
  double jump = 0.0;
};

struct OrderOptions {
  double theta1 = 0.0;  ///< slope-jump threshold; 0 = auto (6 h)
  double theta2 = 0.0;  ///< curvature-jump threshold; 0 = auto (max(0.25, 25 h))
  MinimizeOptions minimize;
};

/// Scans E(t) on the path, locating first-order (slope discontinuity) and
/// second-order (curvature discontinuity) Ehrenfest transitions.
inline std::vector<TransitionMark> transition_order_along_path(
    const ModelParams& params, const std::vector<std::array<double, 2>>& path,
    const OrderOptions& opts = {}) {
  const int n = static_cast<int>(path.size());
  if (n < 5) throw std::invalid_argument("transition_order_along_path: need >= 5 points");
  double h = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const double dx0 = path[i + 1][0] - path[i][0], dx1 = path[i + 1][1] - path[i][1];
    const double step = std::sqrt(dx0 * dx0 + dx1 * dx1);
    if (i == 0)
      h = step;
    else if (std::abs(step - h) > 1e-9 * std::max(1.0, h))
      throw std::invalid_argument("transition_order_along_path: path not uniformly spaced");
  }
  if (h <= 0.0) throw std::invalid_argument("transition_order_along_path: degenerate path");

  std::vector<double> e(n);
  for (int i = 0; i < n; ++i)
    e[i] = minimize_variational(params.with_x(path[i]), opts.minimize).energy;

  const double th1 = opts.theta1 > 0.0 ? opts.theta1 : 6.0 * h;
  const double th2 = opts.theta2 > 0.0 ? opts.theta2 : std::max(0.25, 25.0 * h);

  std::vector<double> d1(n - 1);
  for (int i = 0; i + 1 < n; ++i) d1[i] = (e[i + 1] - e[i]) / h;

  std::vector<TransitionMark> marks;
  for (int i = 1; i + 1 < n - 1; ++i) {
    // slope jump between adjacent secants flags first order at point i+1
    const double jump1 = std::abs(d1[i + 1] - d1[i]);
    if (jump1 > th1) {
      if (!marks.empty() && marks.back().order == 1 && i + 1 - marks.back().index <= 1) {
        if (jump1 > marks.back().jump) marks.back() = {i + 1, path[i + 1], 1, jump1};
        continue;
      }
      marks.push_back({i + 1, path[i + 1], 1, jump1});
    }
  }
  for (int i = 2; i + 2 < n; ++i) {
    const double cl = (d1[i - 1] - d1[i - 2]) / h;
    const double cr = (d1[i + 1] - d1[i]) / h;
    const double jump2 = std::abs(cr - cl);
    if (jump2 > th2) {
      bool near_first = false;
      for (const auto& m : marks)
        if (m.order == 1 && std::abs(m.index - i) <= 2) near_first = true;
      if (near_first) continue;
      if (!marks.empty() && marks.back().order == 2 && i - marks.back().index <= 2) {
        if (jump2 > marks.back().jump) marks.back() = {i, path[i], 2, jump2};
        continue;
      }
      marks.push_back({i, path[i], 2, jump2});
    }
  }
  std::sort(marks.begin(), marks.end(),
            [](const TransitionMark& a, const TransitionMark& b) { return a.index < b.index; });
  return marks;
}

/// Uniformly spaced straight path helper.
inline std::vector<std::array<double, 2>> make_path(std::array<double, 2> from,
                                                    std::array<double, 2> to, int points) {
  if (points < 2) throw std::invalid_argument("make_path: need >= 2 points");
  std::vector<std::array<double, 2>> p(points);
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / (points - 1);
    p[i] = {from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])};
  }
  return p;
}

}  // namespace dicke
