#pragma once

// Viewing sessions: the simulated learner loop, the live message handler
// behind `pace serve`, and deterministic replay of recorded logs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pace/controller.hpp"
#include "pace/core.hpp"
#include "pace/expression.hpp"

namespace pace::session {

inline constexpr int kLogVersion = 1;

struct SessionConfig {
  Timeline timeline;
  controller::ControllerConfig controller;
  expression::LaughParams laugh;
  double calibration_duration = expression::kDefaultCalibration;
  std::string session_id = "session";

  bool operator==(const SessionConfig&) const = default;
};

void validate(const SessionConfig& cfg);

enum class LearnerKind { always, never, threshold, logistic };

struct LearnerModel {
  LearnerKind kind = LearnerKind::never;
  double threshold_rate = 0.8;  // threshold: laughs iff rate <= threshold_rate
  double slope = 20.0;          // logistic: p = 1 / (1 + exp(slope * (rate - midpoint)))
  double midpoint_rate = 0.8;
  std::uint64_t seed = 1;
};

// "always", "never", "threshold:0.8", "logistic:SLOPE,MIDPOINT[,SEED]".
LearnerModel parse_learner(std::string_view text);

struct SessionLog {
  SessionConfig config;
  std::vector<SessionEvent> events;
  PlaybackState final_state;
  double viewing_time = 0.0;
};

// Nine clips of 60-90 s totalling 600 s, one laugh-track punchline each.
Timeline demo_timeline();

// One decision per punchline from the AU frames and markers seen so far.
// simulate, LiveSession and replay all decide through this class.
class DecisionEngine {
 public:
  explicit DecisionEngine(SessionConfig cfg);

  enum class AuStatus { accepted, clamped, out_of_order };
  AuStatus add_au(AUFrame frame);
  void add_marker(double t);

  struct Decision {
    std::size_t index = 0;
    expression::PunchlineResponse response;
    double rate_before = 1.0;
    PlaybackState state;
    std::optional<SpeedCommand> command;
  };
  Decision decide(std::size_t index);

  const PlaybackState& state() const { return state_; }
  const SessionConfig& config() const { return cfg_; }
  const AUSeries& series() const { return series_; }

 private:
  std::optional<expression::Baseline> baseline();

  SessionConfig cfg_;
  AUSeries series_;
  std::vector<expression::LaughEvent> markers_;
  std::optional<expression::Baseline> calibrated_;
  PlaybackState state_;
};

nlohmann::json decision_payload(const DecisionEngine::Decision& d);
nlohmann::json command_payload(const DecisionEngine::Decision& d);

SessionLog simulate(const SessionConfig& cfg, const LearnerModel& learner);

// --- live sessions --------------------------------------------------------

struct Peer {
  std::string role = "unknown";  // "sensor" | "player" once hello arrives
};

struct Outbound {
  enum class Target { sender, players };
  Target target = Target::sender;
  nlohmann::json message;
};

class LiveSession {
 public:
  using Clock = std::function<double()>;
  using Sink = std::function<void(const SessionEvent&)>;

  explicit LiveSession(SessionConfig cfg, Clock clock = {}, Sink sink = {});

  std::vector<Outbound> handle_message(std::string_view text, Peer& peer);

  // Appends session_end and returns the finished log. Idempotent.
  const SessionLog& finish();

  const SessionLog& log() const { return log_; }
  const PlaybackState& state() const { return engine_.state(); }
  double media_clock() const { return clock_t_; }
  double viewing_time() const { return viewing_time_; }

 private:
  void emit(EventKind kind, nlohmann::json payload);
  std::vector<Outbound> error(std::string_view code, std::string detail);
  std::vector<Outbound> on_tick(double t);
  void advance_to(double t);
  nlohmann::json state_message() const;

  DecisionEngine engine_;
  Clock clock_;
  Sink sink_;
  SessionLog log_;
  double last_wall_ = 0.0;
  double clock_t_ = 0.0;
  double viewing_time_ = 0.0;
  std::size_t next_open_ = 0;
  std::size_t next_close_ = 0;
  bool finished_ = false;
};

// --- replay -------------------------------------------------------------

// Re-derives every decision and speed command from the logged AU frames,
// markers and config. Input events are kept; derived decision and command
// events replace the logged ones.
SessionLog replay(const SessionLog& log);

struct ReplayReport {
  bool identical = true;
  std::size_t compared = 0;
  std::optional<std::size_t> first_divergence;  // index into log.events
  std::string detail;
  std::vector<SpeedCommand> commands;  // re-derived
};

ReplayReport verify_replay(const SessionLog& log);

std::vector<SpeedCommand> commands_in(const std::vector<SessionEvent>& events);

// --- persistence --------------------------------------------------------

void write_session_log(std::ostream& out, const SessionLog& log);
void save_session_log(const std::filesystem::path& path, const SessionLog& log);
SessionLog read_session_log(std::istream& in);
SessionLog load_session_log(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const SessionConfig& c);
void from_json(const nlohmann::json& j, SessionConfig& c);

}  // namespace pace::session
