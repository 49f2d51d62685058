#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dicke/model.hpp"

namespace dicke {

/// Named parameter sets for the three configurations. The *-fig3 presets are
/// the resonant finite-system sets (Xi: Omega12=1/4, Omega23=3/4, omega2=1/4;
/// Lambda: Omega13=1, Omega23=9/10, omega2=1/10; V: Omega12=4/5, Omega13=1,
/// omega2=4/5), N_a=1. The *-fig2 presets carry the variational-study level
/// spacings (Xi: omega2=1/3, Lambda: 1/10, V: 8/10); the variational energy
/// minimized over the field amplitudes does not depend on the mode
/// frequencies, so they reuse the resonant Omega values.
inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "xi-fig3", "lambda-fig3", "v-fig3", "xi-fig2", "lambda-fig2", "v-fig2",
  };
  return names;
}

inline std::optional<ModelParams> find_preset(std::string_view name, int Na = 1) {
  if (name == "xi-fig3") return ModelParams::make(ConfigKind::Xi, 0.25, {0.25, 0.75}, {0, 0}, Na);
  if (name == "lambda-fig3")
    return ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {0, 0}, Na);
  if (name == "v-fig3") return ModelParams::make(ConfigKind::V, 0.8, {0.8, 1.0}, {0, 0}, Na);
  if (name == "xi-fig2")
    return ModelParams::make(ConfigKind::Xi, 1.0 / 3.0, {0.25, 0.75}, {0, 0}, Na);
  if (name == "lambda-fig2")
    return ModelParams::make(ConfigKind::Lambda, 0.1, {1.0, 0.9}, {0, 0}, Na);
  if (name == "v-fig2") return ModelParams::make(ConfigKind::V, 0.8, {0.8, 1.0}, {0, 0}, Na);
  return std::nullopt;
}

}  // namespace dicke
