#pragma once

// Playback-rate adaptation: one step of +/-step per punchline, clamped to
// [min_rate, max_rate] and snapped to the step grid.

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "pace/core.hpp"
#include "pace/expression.hpp"

namespace pace::controller {

struct ControllerConfig {
  double step = 0.1;
  double min_rate = 0.6;
  double max_rate = 1.0;
  double initial_rate = 1.0;

  bool operator==(const ControllerConfig&) const = default;
};

void validate(const ControllerConfig& cfg);

// Nearest grid point min_rate + k*step, k in [0, steps], as a canonical double.
double snap(double rate, const ControllerConfig& cfg);
bool on_grid(double rate, const ControllerConfig& cfg);

PlaybackState initial_state(const ControllerConfig& cfg);

struct StepResult {
  PlaybackState state;
  std::optional<SpeedCommand> command;  // present iff the rate changed
};

// Throws Error{off_grid} when state.rate is not a grid point. The command's t
// is left at 0; run() and the session stamp it.
StepResult step(const PlaybackState& state, bool laughed, const ControllerConfig& cfg);

struct RunResult {
  std::vector<SpeedCommand> commands;
  PlaybackState final_state;
};

// Left fold of step from initial_rate; command t = triggering segment end.
RunResult run(const std::vector<expression::PunchlineResponse>& responses,
              const ControllerConfig& cfg);

void to_json(nlohmann::json& j, const ControllerConfig& c);
void from_json(const nlohmann::json& j, ControllerConfig& c);

}  // namespace pace::controller
