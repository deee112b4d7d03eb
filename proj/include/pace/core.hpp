#pragma once

// Shared domain types. Media time (seconds into the clip at 1.0x) is the
// clock for everything except SessionEvent::wall_time.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pace/error.hpp"

namespace pace {

inline constexpr double kAuMin = 0.0;
inline constexpr double kAuMax = 5.0;

struct AUFrame {
  double t = 0.0;
  double au14 = 0.0;
  std::map<std::string, double> aux;  // other AU codes, e.g. "au06"

  bool operator==(const AUFrame&) const = default;
};

struct AUSeries {
  std::vector<AUFrame> frames;
  std::optional<double> sample_rate_hint;

  bool empty() const { return frames.empty(); }
  bool operator==(const AUSeries&) const = default;
};

struct PunchlineSegment {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool operator==(const PunchlineSegment&) const = default;
};

struct Timeline {
  double media_duration = 0.0;
  std::vector<PunchlineSegment> segments;

  bool operator==(const Timeline&) const = default;
};

struct PlaybackState {
  double rate = 1.0;
  std::int64_t punchlines_seen = 0;

  bool operator==(const PlaybackState&) const = default;
};

enum class Cause { laugh, no_laugh, init };

struct SpeedCommand {
  double t = 0.0;
  double rate = 1.0;
  Cause cause = Cause::init;

  bool operator==(const SpeedCommand&) const = default;
};

enum class EventKind {
  session_start,
  au_frame,
  laugh_event,
  tick,
  hello,
  punchline_open,
  punchline_close,
  decision,
  speed_command,
  warning,
  protocol_error,
  session_end,
};

struct SessionEvent {
  double wall_time = 0.0;  // seconds; the only wall-clock value in the system
  EventKind kind = EventKind::warning;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const SessionEvent&) const = default;
};

std::string_view to_string(Cause cause);
Cause cause_from_string(std::string_view s);
std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

// True for the five rates {0.6, 0.7, 0.8, 0.9, 1.0} (within 1e-9).
bool is_playback_grid_rate(double rate);

// Returns the timeline unchanged if every segment satisfies 0 <= start < end,
// segments are sorted by start, do not overlap, and end within the media.
// Touching segments (a.end == b.start) are allowed.
const Timeline& validate_timeline(const Timeline& timeline);

// Clamps an AU intensity into [0, 5]. `clamped` reports whether it moved.
double clamp_au(double value, bool* clamped = nullptr);

// --- JSON ---------------------------------------------------------------

void to_json(nlohmann::json& j, const AUFrame& f);
void from_json(const nlohmann::json& j, AUFrame& f);
void to_json(nlohmann::json& j, const AUSeries& s);
void from_json(const nlohmann::json& j, AUSeries& s);
void to_json(nlohmann::json& j, const PunchlineSegment& s);
void from_json(const nlohmann::json& j, PunchlineSegment& s);
void to_json(nlohmann::json& j, const Timeline& t);
void from_json(const nlohmann::json& j, Timeline& t);
void to_json(nlohmann::json& j, const PlaybackState& s);
void from_json(const nlohmann::json& j, PlaybackState& s);
void to_json(nlohmann::json& j, const SpeedCommand& c);
void from_json(const nlohmann::json& j, SpeedCommand& c);
void to_json(nlohmann::json& j, const SessionEvent& e);
void from_json(const nlohmann::json& j, SessionEvent& e);

Timeline parse_timeline(std::string_view text);
Timeline load_timeline(const std::filesystem::path& path);
void save_timeline(const std::filesystem::path& path, const Timeline& timeline);

// --- AU CSV -------------------------------------------------------------

struct AuIngest {
  AUSeries series;
  std::vector<std::string> warnings;  // one per clamped value
};

// Header `t,au14[,auNN...]`. Rows must have strictly increasing t.
AuIngest read_au_csv(std::istream& in);
AuIngest load_au_csv(const std::filesystem::path& path);
void write_au_csv(std::ostream& out, const AUSeries& series);

// --- Session log (JSON Lines) ---------------------------------------------

std::string event_to_line(const SessionEvent& e);
SessionEvent event_from_line(std::string_view line);
void write_events(std::ostream& out, const std::vector<SessionEvent>& events);
std::vector<SessionEvent> read_events(std::istream& in);

std::string read_file(const std::filesystem::path& path);

}  // namespace pace
