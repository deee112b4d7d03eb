#pragma once

// Per-punchline laugh decisions from AU14 (buccinator / smile) intensity.

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "pace/core.hpp"

namespace pace::expression {

inline constexpr double kDefaultSigmaFloor = 0.05;
inline constexpr double kDefaultCalibration = 30.0;
// A window whose AU frames cover less than this fraction is a sensor dropout.
inline constexpr double kMinWindowCoverage = 0.5;

struct Baseline {
  double mu = 0.0;
  double sigma = kDefaultSigmaFloor;

  bool operator==(const Baseline&) const = default;
};

struct LaughParams {
  double k_sigma = 3.0;
  double min_hold = 0.2;
  double lead = 0.5;
  double lag = 1.0;

  bool operator==(const LaughParams&) const = default;
};

void validate(const LaughParams& params);

struct LaughEvent {
  double start = 0.0;
  double end = 0.0;
  double peak_au14 = 0.0;  // +inf for manual markers

  bool is_manual() const;
  bool operator==(const LaughEvent&) const = default;
};

struct PunchlineResponse {
  PunchlineSegment segment;
  bool laughed = false;
  std::optional<LaughEvent> evidence;
  bool dropout = false;  // AU coverage of the window was below kMinWindowCoverage

  bool operator==(const PunchlineResponse&) const = default;
};

// Seconds between AU frames: 1 / sample_rate_hint when given, otherwise the
// median spacing. Zero for fewer than two frames and no hint.
double frame_period(const AUSeries& series);

// Mean and population SD of au14 over [t0, t0 + duration), t0 = first frame.
// Throws insufficient_data if the series spans less than `duration`.
Baseline calibrate_baseline(const AUSeries& series, double duration = kDefaultCalibration,
                            double sigma_floor = kDefaultSigmaFloor);

double laugh_threshold(const Baseline& baseline, const LaughParams& params);

// Maximal runs of frames with au14 > threshold lasting at least min_hold.
// A gap wider than two frame periods ends a run.
std::vector<LaughEvent> detect_laugh_events(const AUSeries& series, const Baseline& baseline,
                                            const LaughParams& params);

LaughEvent manual_marker(double t);

PunchlineSegment response_window(const PunchlineSegment& segment, const LaughParams& params);

// One response per segment, in timeline order. A segment counts as laughed
// when any event touches [start - lead, end + lag]; the evidence is the
// touching event with the highest peak.
std::vector<PunchlineResponse> decide_punchline_response(const Timeline& timeline,
                                                         const std::vector<LaughEvent>& events,
                                                         const LaughParams& params);

// Fraction of [window.start, window.end) covered by AU frames.
double window_coverage(const AUSeries& series, const PunchlineSegment& window);

// Forces laughed = false on responses whose window lost more than half of its
// AU frames, unless the evidence is a manual marker.
void apply_dropout_rule(std::vector<PunchlineResponse>& responses, const AUSeries& series,
                        const LaughParams& params);

// au14 values of frames inside each segment's response window, split by the
// per-segment label (true = understood).
struct LabeledSamples {
  std::vector<double> understood;
  std::vector<double> not_understood;
};
LabeledSamples window_samples(const AUSeries& series, const Timeline& timeline,
                              const std::vector<bool>& understood, const LaughParams& params);

void to_json(nlohmann::json& j, const Baseline& b);
void from_json(const nlohmann::json& j, Baseline& b);
void to_json(nlohmann::json& j, const LaughParams& p);
void from_json(const nlohmann::json& j, LaughParams& p);
void to_json(nlohmann::json& j, const LaughEvent& e);
void from_json(const nlohmann::json& j, LaughEvent& e);
void to_json(nlohmann::json& j, const PunchlineResponse& r);
void from_json(const nlohmann::json& j, PunchlineResponse& r);

}  // namespace pace::expression
