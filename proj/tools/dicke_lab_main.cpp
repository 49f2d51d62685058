// dicke-lab: command line front end for the dicke:: library.
//
// Usage:  dicke-lab <analysis> --config FILE [--workers N] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
// Worker precedence: --workers flag, then DICKE_WORKERS, then the config file.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dicke/dicke.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dicke::ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw dicke::ConfigError("error reading config file '" + path + "'");
  return ss.str();
}

std::optional<int> workers_from_env() {
  const char* env = std::getenv("DICKE_WORKERS");
  if (!env || *env == '\0') return std::nullopt;
  char* end = nullptr;
  unsigned long v = std::strtoul(env, &end, 10);
  if (end == nullptr || *end != '\0' || v == 0 || v > 1024) return std::nullopt;
  return static_cast<int>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale quantum phase diagrams of a three-level two-mode Dicke model"};
  app.set_version_flag("--version", std::string(dicke::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  int workers_flag = 0;
  std::string out_dir;
  auto* opt_config = app.add_option("-c,--config", config_path, "run configuration file (text or JSON)");
  auto* opt_workers = app.add_option("-w,--workers", workers_flag, "worker thread count (overrides DICKE_WORKERS and the config)");
  auto* opt_out = app.add_option("-o,--out", out_dir, "output directory (overrides the config)");
  opt_config->check(CLI::ExistingFile);
  opt_workers->check(CLI::PositiveNumber);

  struct SubDesc {
    const char* name;
    const char* help;
  };
  const SubDesc subs[] = {
      {"ground", "single ground-state solve at the configured couplings"},
      {"sweep", "ground states along a coupling-space trajectory"},
      {"separatrix", "minimum-fidelity surface over a coupling grid"},
      {"wigner", "Wigner functions of the reduced mode states along a trajectory"},
      {"entropy", "linear entanglement entropies along a trajectory"},
      {"variational", "coherent product-state energy surface over a grid"},
      {"classify", "finite-size transition classification at one point"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  auto* chosen = app.get_subcommands().front();
  std::optional<dicke::Analysis> from_cli = dicke::parse_analysis(chosen->get_name());

  try {
    if (config_path.empty()) throw dicke::ConfigError("--config is required");
    dicke::RunConfig cfg = dicke::parse_config(read_file(config_path));
    dicke::Analysis analysis = dicke::resolve_analysis(cfg, from_cli);

    if (opt_workers->count() > 0) {
      cfg.workers = workers_flag;
    } else if (auto env = workers_from_env()) {
      cfg.workers = *env;
    }
    if (opt_out->count() > 0) cfg.out_dir = out_dir;

    dicke::ResultManifest manifest = dicke::run_sweep(cfg, analysis);
    dicke::write_manifest(manifest, cfg.out_dir);

    std::cout << "analysis: " << manifest.analysis << "\n";
    std::cout << "workers:  " << manifest.workers << "\n";
    for (const auto& f : manifest.files)
      std::cout << "wrote " << cfg.out_dir << "/" << f.name << " (" << f.bytes << " bytes)\n";
    std::cout << "wrote " << cfg.out_dir << "/manifest.json\n";
    std::cout << "elapsed: " << manifest.timing_seconds << " s\n";

    if (!manifest.ok()) {
      std::cerr << "error: " << manifest.failed_cells.size()
                << " cell(s) failed to solve; details in manifest.json\n";
      return 3;
    }
    return 0;
  } catch (const dicke::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
