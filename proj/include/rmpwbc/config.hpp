#pragma once

// YAML configuration for the model, controller, simulator and trial protocol.
// Every key is optional and falls back to the built-in default; unknown keys
// and malformed values raise ConfigError carrying the 1-based line number.
//
//   model:      gravity, bodies[], frames[], capsules[], actuated[]
//   controller: strategy, gait, tvr, srb, regions, collision, apf, gains, qp, ...
//   sim:        dt, max_speed, contact {stiffness, damping, mu}
//   trial:      warmup_cycles, window, initial_jitter, min_base_height, ...

#include <string>

#include "rmpwbc/trial.hpp"

namespace rmpwbc::config {

sim::TrialConfig load_trial_config(const std::string& path);
sim::TrialConfig parse_trial_config(const std::string& yaml_text);

// Full configuration as YAML; parse_trial_config(emit_trial_config(c)) reproduces c.
std::string emit_trial_config(const sim::TrialConfig& cfg);

}  // namespace rmpwbc::config
