#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "dicke/config.hpp"
#include "dicke/model.hpp"
#include "dicke/qpt.hpp"
#include "dicke/solver.hpp"
#include "dicke/tomography.hpp"
#include "dicke/util.hpp"
#include "dicke/variational.hpp"

namespace dicke {

inline constexpr const char* kVersion = "0.1.0";

struct FileRecord {
  std::string name;
  std::size_t bytes = 0;
  std::string fnv1a64_hex;
};

struct ResultManifest {
  std::string analysis;
  std::string version = kVersion;
  std::string generated_at;
  nlohmann::json config_echo;
  std::vector<FileRecord> files;
  std::vector<std::string> failed_cells;
  nlohmann::json truncation = nlohmann::json::array();
  double timing_seconds = 0.0;
  int workers = 1;

  [[nodiscard]] bool ok() const { return failed_cells.empty(); }

  [[nodiscard]] nlohmann::json to_json() const {
    nlohmann::json j;
    j["analysis"] = analysis;
    j["version"] = version;
    j["generated_at"] = generated_at;
    j["config"] = config_echo;
    j["workers"] = workers;
    j["timing_seconds"] = timing_seconds;
    auto files_j = nlohmann::json::array();
    for (const auto& f : files)
      files_j.push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64_hex}});
    j["files"] = files_j;
    j["failed_cells"] = failed_cells;
    j["truncation"] = truncation;
    return j;
  }
};

namespace detail {

/// Locale-independent shortest-round-trip formatting, 17 significant digits.
inline std::string fmt_g17(double v) {
  char buf[48];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string to_hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline FileRecord write_file_atomic(const std::filesystem::path& dir, const std::string& name,
                                    const std::string& contents) {
  std::filesystem::create_directories(dir);
  const auto tmp = dir / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, dir / name);
  return {name, contents.size(), to_hex64(fnv1a64(contents))};
}

inline std::string iso_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json params_to_json(const ModelParams& p) {
  return {{"config", config_name(p.config.kind)},
          {"omega2", p.omega[1]},
          {"Omega1", p.Omega[0]},
          {"Omega2", p.Omega[1]},
          {"x1", p.x[0]},
          {"x2", p.x[1]},
          {"Na", p.Na}};
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  if (!cfg.preset.empty()) j["preset"] = cfg.preset;
  j["model"] = params_to_json(cfg.params);
  if (cfg.analysis) j["analysis"] = analysis_name(*cfg.analysis);
  j["tol"] = cfg.tol;
  j["delta"] = cfg.delta;
  j["eps_f"] = cfg.eps_f;
  j["out"] = cfg.out_dir;
  j["workers"] = cfg.workers;
  j["trajectory"] = {{"from", {cfg.trajectory.from[0], cfg.trajectory.from[1]}},
                     {"to", {cfg.trajectory.to[0], cfg.trajectory.to[1]}},
                     {"points", cfg.trajectory.points}};
  j["grid"] = {{"x1_min", cfg.grid.x1_min}, {"x1_max", cfg.grid.x1_max}, {"n1", cfg.grid.n1},
               {"x2_min", cfg.grid.x2_min}, {"x2_max", cfg.grid.x2_max}, {"n2", cfg.grid.n2}};
  j["quad"] = {{"q_min", cfg.quad.q_min}, {"q_max", cfg.quad.q_max}, {"nq", cfg.quad.nq},
               {"p_min", cfg.quad.p_min}, {"p_max", cfg.quad.p_max}, {"np", cfg.quad.np}};
  j["classify"] = {{"x1", cfg.classify.location[0]},
                   {"x2", cfg.classify.location[1]},
                   {"dir1", cfg.classify.direction[0]},
                   {"dir2", cfg.classify.direction[1]},
                   {"na_list", cfg.classify.na_list},
                   {"half_steps", cfg.classify.half_steps},
                   {"slope_stable", cfg.classify.slope_stable},
                   {"slope_unstable", cfg.classify.slope_unstable}};
  j["wigner"] = {{"mode", cfg.wigner_mode == 0 ? "both" : std::to_string(cfg.wigner_mode)}};
  return j;
}

inline nlohmann::json truncation_entry(const GroundState& g) {
  return {{"x1", g.params.x[0]},          {"x2", g.params.x[1]},
          {"sector", g.sector.name()},    {"k1max", g.truncation.kcaps[0]},
          {"k2max", g.truncation.kcaps[1]}, {"dim", g.truncation.dim},
          {"infidelity", g.truncation.infidelity}};
}

inline std::vector<ParamPoint> trajectory_points(const TrajectorySpec& t) {
  std::vector<ParamPoint> pts;
  pts.reserve(static_cast<std::size_t>(std::max(t.points, 0)));
  for (int i = 0; i < t.points; ++i) {
    const double s = t.points > 1 ? static_cast<double>(i) / (t.points - 1) : 0.0;
    pts.push_back({t.from[0] + s * (t.to[0] - t.from[0]), t.from[1] + s * (t.to[1] - t.from[1])});
  }
  return pts;
}

/// Solves all trajectory points in parallel; failures become empty slots plus
/// a failed-cell record instead of aborting the whole sweep.
inline std::vector<std::shared_ptr<const GroundState>> solve_cells(
    const ModelParams& base, const std::vector<ParamPoint>& pts, double tol,
    GroundStateCache& cache, int workers, std::vector<std::string>& failures,
    const char* what) {
  std::vector<std::shared_ptr<const GroundState>> states(pts.size());
  std::mutex fail_mutex;
  std::vector<std::pair<std::size_t, std::string>> local;
  parallel_for(
      pts.size(),
      [&](std::size_t i) {
        try {
          states[i] = cache.get(base.with_x({pts[i][0], pts[i][1]}), tol);
        } catch (const std::exception& e) {
          std::scoped_lock lock(fail_mutex);
          local.emplace_back(i, e.what());
        }
      },
      static_cast<unsigned>(workers));
  std::sort(local.begin(), local.end());
  for (const auto& [i, msg] : local) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s point %zu (%.6g, %.6g): %s", what, i, pts[i][0], pts[i][1],
                  msg.c_str());
    failures.push_back(buf);
  }
  return states;
}

}  // namespace detail

inline ResultManifest run_sweep(const RunConfig& cfg, Analysis analysis) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultManifest m;
  m.analysis = analysis_name(analysis);
  m.generated_at = detail::iso_utc_now();
  m.config_echo = detail::config_to_json(cfg);
  m.workers = static_cast<int>(resolve_workers(static_cast<unsigned>(cfg.workers)));
  const std::filesystem::path dir = cfg.out_dir;
  GroundStateCache cache;

  auto add_csv = [&](const std::string& name, const std::string& contents) {
    m.files.push_back(detail::write_file_atomic(dir, name, contents));
  };

  switch (analysis) {
    case Analysis::Ground: {
      auto g = global_ground_state(cfg.params, cfg.tol);
      std::string csv = "x1,x2,sector,energy,dim,k1max,k2max,infidelity,degenerate\n";
      csv += detail::fmt_g17(g.params.x[0]) + "," + detail::fmt_g17(g.params.x[1]) + "," +
             g.sector.name() + "," + detail::fmt_g17(g.energy) + "," +
             std::to_string(g.basis->size()) + "," + std::to_string(g.truncation.kcaps[0]) + "," +
             std::to_string(g.truncation.kcaps[1]) + "," +
             detail::fmt_g17(g.truncation.infidelity) + "," + (g.degenerate ? "1" : "0") + "\n";
      add_csv("ground.csv", csv);
      m.truncation.push_back(detail::truncation_entry(g));
      break;
    }

    case Analysis::Sweep: {
      const auto pts = detail::trajectory_points(cfg.trajectory);
      auto states =
          detail::solve_cells(cfg.params, pts, cfg.tol, cache, m.workers, m.failed_cells, "sweep");
      if (!pts.empty()) {
        std::string csv = "index,x1,x2,sector,energy,dim,k1max,k2max,fidelity_prev,bures_prev\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (!states[i]) continue;
          const auto& g = *states[i];
          csv += std::to_string(i) + "," + detail::fmt_g17(pts[i][0]) + "," +
                 detail::fmt_g17(pts[i][1]) + "," + g.sector.name() + "," +
                 detail::fmt_g17(g.energy) + "," + std::to_string(g.basis->size()) + "," +
                 std::to_string(g.truncation.kcaps[0]) + "," +
                 std::to_string(g.truncation.kcaps[1]);
          if (i > 0 && states[i - 1]) {
            const double F = fidelity(*states[i - 1], g);
            csv += "," + detail::fmt_g17(F) + "," + detail::fmt_g17(bures_distance(F));
          } else {
            csv += ",,";
          }
          csv += "\n";
          m.truncation.push_back(detail::truncation_entry(g));
        }
        add_csv("sweep.csv", csv);
      }
      break;
    }

    case Analysis::Separatrix: {
      SurfaceOptions opts;
      opts.eps_f = cfg.eps_f;
      opts.workers = static_cast<unsigned>(m.workers);
      auto pts = minimum_fidelity_surface(cfg.params, cfg.grid, cfg.delta, cfg.tol, &cache, opts);
      std::string csv = "x1,x2,f_min,dir1,dir2,chi,type,sector_change,sector\n";
      for (const auto& sp : pts) {
        csv += detail::fmt_g17(sp.location[0]) + "," + detail::fmt_g17(sp.location[1]) + "," +
               detail::fmt_g17(sp.f_min) + "," + detail::fmt_g17(sp.direction[0]) + "," +
               detail::fmt_g17(sp.direction[1]) + "," + detail::fmt_g17(sp.chi) + "," +
               transition_type_name(sp.type) + "," + (sp.sector_change ? "1" : "0") + "," +
               sp.sector.name() + "\n";
      }
      add_csv("separatrix.csv", csv);
      m.truncation.push_back(
          {{"cells", cfg.grid.n1 * cfg.grid.n2}, {"detected", pts.size()}, {"cache", cache.size()}});
      break;
    }

    case Analysis::Wigner: {
      auto pts = detail::trajectory_points(cfg.trajectory);
      if (pts.empty()) pts.push_back({cfg.params.x[0], cfg.params.x[1]});
      auto states = detail::solve_cells(cfg.params, pts, cfg.tol, cache, m.workers,
                                        m.failed_cells, "wigner");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!states[i]) continue;
        const auto& g = *states[i];
        m.truncation.push_back(detail::truncation_entry(g));
        for (int mode = 0; mode < 2; ++mode) {
          if (cfg.wigner_mode != 0 && cfg.wigner_mode != mode + 1) continue;
          char stem[64];
          std::snprintf(stem, sizeof stem, "wigner_mode%d_frame%04zu", mode + 1, i);
          try {
            const auto rdm = reduce_to_mode(g, mode);
            const auto field = wigner_field(rdm, cfg.quad);
            std::string csv;
            for (int jp = 0; jp < field.grid.np; ++jp) {
              for (int iq = 0; iq < field.grid.nq; ++iq) {
                if (iq) csv += ",";
                csv += detail::fmt_g17(field.w(jp, iq));
              }
              csv += "\n";
            }
            add_csv(std::string(stem) + ".csv", csv);
            nlohmann::json meta;
            meta["frame"] = i;
            meta["mode"] = mode + 1;
            meta["pair"] = {field.pair_label[0], field.pair_label[1]};
            meta["x1"] = pts[i][0];
            meta["x2"] = pts[i][1];
            meta["sector"] = g.sector.name();
            meta["energy"] = g.energy;
            meta["grid"] = {{"q_min", field.grid.q_min}, {"q_max", field.grid.q_max},
                            {"nq", field.grid.nq},       {"p_min", field.grid.p_min},
                            {"p_max", field.grid.p_max}, {"np", field.grid.np}};
            meta["rows"] = "p index";
            meta["columns"] = "q index";
            meta["integral"] = field.integral;
            meta["max_imag"] = field.max_imag;
            meta["normalization_warning"] = field.normalization_warning;
            meta["negativity_volume"] = negativity_volume(field);
            meta["mean_photon"] = mean_photon(g, mode);
            meta["params"] = detail::params_to_json(g.params);
            add_csv(std::string(stem) + ".meta.json", meta.dump(2) + "\n");
          } catch (const std::exception& e) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "wigner frame %zu mode %d: %s", i, mode + 1, e.what());
            m.failed_cells.push_back(buf);
          }
        }
      }
      break;
    }

    case Analysis::Entropy: {
      const auto pts = detail::trajectory_points(cfg.trajectory);
      auto states = detail::solve_cells(cfg.params, pts, cfg.tol, cache, m.workers,
                                        m.failed_cells, "entropy");
      if (!pts.empty()) {
        std::string csv = "x1,x2,s_nu1,s_nu2,s_nu_m\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
          if (!states[i]) continue;
          const auto e = linear_entropies(*states[i]);
          csv += detail::fmt_g17(pts[i][0]) + "," + detail::fmt_g17(pts[i][1]) + "," +
                 detail::fmt_g17(e.s_nu1) + "," + detail::fmt_g17(e.s_nu2) + "," +
                 detail::fmt_g17(e.s_nu_m) + "\n";
          m.truncation.push_back(detail::truncation_entry(*states[i]));
        }
        add_csv("entropy.csv", csv);
      }
      break;
    }

    case Analysis::Variational: {
      const int n1 = cfg.grid.n1, n2 = cfg.grid.n2;
      std::vector<VariationalResult> results(static_cast<std::size_t>(n1) * n2);
      parallel_for(
          results.size(),
          [&](std::size_t idx) {
            const int i = static_cast<int>(idx) / n2, j = static_cast<int>(idx) % n2;
            results[idx] = minimize_variational(cfg.params.with_x(cfg.grid.at(i, j)));
          },
          static_cast<unsigned>(m.workers));
      std::string csv = "x1,x2,energy,region,converged,evaluations\n";
      for (std::size_t idx = 0; idx < results.size(); ++idx) {
        const int i = static_cast<int>(idx) / n2, j = static_cast<int>(idx) % n2;
        const auto node = cfg.grid.at(i, j);
        const auto& r = results[idx];
        csv += detail::fmt_g17(node[0]) + "," + detail::fmt_g17(node[1]) + "," +
               detail::fmt_g17(r.energy) + "," + r.region.name(cfg.params.config) + "," +
               (r.converged ? "1" : "0") + "," + std::to_string(r.evaluations) + "\n";
      }
      add_csv("variational.csv", csv);
      break;
    }

    case Analysis::Classify: {
      ClassifyOptions opts;
      opts.na_list = cfg.classify.na_list;
      opts.half_steps = cfg.classify.half_steps;
      opts.eps_f = cfg.eps_f;
      opts.slope_stable = cfg.classify.slope_stable;
      opts.slope_unstable = cfg.classify.slope_unstable;
      opts.workers = static_cast<unsigned>(m.workers);
      auto res = classify_transition(cfg.params, cfg.classify.location, cfg.classify.direction,
                                     cfg.delta, cfg.tol, opts, &cache);
      std::string csv = "Na,f_min\n";
      for (std::size_t i = 0; i < res.na_list.size(); ++i)
        csv += std::to_string(res.na_list[i]) + "," + detail::fmt_g17(res.f_min[i]) + "\n";
      add_csv("classify.csv", csv);
      nlohmann::json meta;
      meta["location"] = {cfg.classify.location[0], cfg.classify.location[1]};
      meta["direction"] = {cfg.classify.direction[0], cfg.classify.direction[1]};
      meta["delta"] = cfg.delta;
      meta["type"] = transition_type_name(res.type);
      meta["slope"] = res.slope;
      meta["partial"] = res.partial;
      meta["na_list"] = res.na_list;
      meta["slope_stable"] = cfg.classify.slope_stable;
      meta["slope_unstable"] = cfg.classify.slope_unstable;
      add_csv("classify.meta.json", meta.dump(2) + "\n");
      break;
    }
  }

  m.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

/// Writes manifest.json for a finished run; the manifest lists every other
/// output file but not itself.
inline void write_manifest(const ResultManifest& m, const std::string& out_dir) {
  detail::write_file_atomic(out_dir, "manifest.json", m.to_json().dump(2) + "\n");
}

}  // namespace dicke
