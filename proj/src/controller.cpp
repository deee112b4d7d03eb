#include "pace/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pace::controller {

namespace {

constexpr double kGridTolerance = 1e-6;

long long grid_steps(const ControllerConfig& cfg) {
  return std::llround((cfg.max_rate - cfg.min_rate) / cfg.step);
}

// Rounds to 1e-6 so 0.6 + 3 * 0.1 lands on the same double as the literal 0.9.
double canonical(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

void validate(const ControllerConfig& cfg) {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::invalid_argument, what); };
  if (!(cfg.step > 0.0)) bad("step must be > 0");
  if (!(cfg.min_rate > 0.0)) bad("min_rate must be > 0");
  if (!(cfg.min_rate <= cfg.initial_rate && cfg.initial_rate <= cfg.max_rate)) {
    bad("rates must satisfy min_rate <= initial_rate <= max_rate");
  }
  const double steps = (cfg.max_rate - cfg.min_rate) / cfg.step;
  if (std::abs(steps - std::round(steps)) > kGridTolerance) {
    bad("max_rate - min_rate must be a multiple of step");
  }
  if (!on_grid(cfg.initial_rate, cfg)) bad("initial_rate must lie on the step grid");
}

double snap(double rate, const ControllerConfig& cfg) {
  const long long k = std::clamp(std::llround((rate - cfg.min_rate) / cfg.step), 0LL, grid_steps(cfg));
  return canonical(cfg.min_rate + static_cast<double>(k) * cfg.step);
}

bool on_grid(double rate, const ControllerConfig& cfg) {
  if (!std::isfinite(rate)) return false;
  if (rate < cfg.min_rate - kGridTolerance || rate > cfg.max_rate + kGridTolerance) return false;
  const double k = (rate - cfg.min_rate) / cfg.step;
  return std::abs(k - std::round(k)) * cfg.step < kGridTolerance;
}

PlaybackState initial_state(const ControllerConfig& cfg) {
  return PlaybackState{snap(cfg.initial_rate, cfg), 0};
}

StepResult step(const PlaybackState& state, bool laughed, const ControllerConfig& cfg) {
  if (!on_grid(state.rate, cfg)) {
    throw Error(ErrorCode::off_grid,
                "playback rate " + std::to_string(state.rate) + " is not on the controller grid");
  }
  const double current = snap(state.rate, cfg);
  const double proposed = current + (laughed ? cfg.step : -cfg.step);
  const double next = snap(std::clamp(proposed, cfg.min_rate, cfg.max_rate), cfg);

  StepResult out;
  out.state = PlaybackState{next, state.punchlines_seen + 1};
  if (next != current) {
    out.command = SpeedCommand{0.0, next, laughed ? Cause::laugh : Cause::no_laugh};
  }
  return out;
}

RunResult run(const std::vector<expression::PunchlineResponse>& responses,
              const ControllerConfig& cfg) {
  validate(cfg);
  RunResult out;
  out.final_state = initial_state(cfg);
  for (const auto& r : responses) {
    auto s = step(out.final_state, r.laughed, cfg);
    out.final_state = s.state;
    if (s.command) {
      s.command->t = r.segment.end;
      out.commands.push_back(*s.command);
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const ControllerConfig& c) {
  j = nlohmann::json{{"step", c.step},
                     {"min_rate", c.min_rate},
                     {"max_rate", c.max_rate},
                     {"initial_rate", c.initial_rate}};
}

void from_json(const nlohmann::json& j, ControllerConfig& c) {
  c.step = j.at("step").get<double>();
  c.min_rate = j.at("min_rate").get<double>();
  c.max_rate = j.at("max_rate").get<double>();
  c.initial_rate = j.at("initial_rate").get<double>();
}

}  // namespace pace::controller
