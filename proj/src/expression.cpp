#include "pace/expression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pace::expression {

namespace {

constexpr double kCoverageSlack = 1e-6;

}  // namespace

bool LaughEvent::is_manual() const { return std::isinf(peak_au14) && peak_au14 > 0; }

void validate(const LaughParams& params) {
  if (!(params.k_sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "k_sigma must be > 0");
  if (!(params.min_hold > 0.0)) throw Error(ErrorCode::invalid_argument, "min_hold must be > 0");
  if (params.lead < 0.0 || params.lag < 0.0) {
    throw Error(ErrorCode::invalid_argument, "lead and lag must be >= 0");
  }
}

double frame_period(const AUSeries& series) {
  if (series.sample_rate_hint && *series.sample_rate_hint > 0.0) {
    return 1.0 / *series.sample_rate_hint;
  }
  const auto& f = series.frames;
  if (f.size() < 2) return 0.0;
  std::vector<double> gaps;
  gaps.reserve(f.size() - 1);
  for (std::size_t i = 1; i < f.size(); ++i) gaps.push_back(f[i].t - f[i - 1].t);
  auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return *mid;
}

Baseline calibrate_baseline(const AUSeries& series, double duration, double sigma_floor) {
  if (series.empty()) throw Error(ErrorCode::insufficient_data, "no AU frames to calibrate on");
  const double t0 = series.frames.front().t;
  const double span = series.frames.back().t - t0 + frame_period(series);
  if (span + kCoverageSlack < duration) {
    throw Error(ErrorCode::insufficient_data, "AU series spans " + std::to_string(span) +
                                                  " s, calibration needs " +
                                                  std::to_string(duration) + " s");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : series.frames) {
    if (f.t >= t0 + duration) break;
    sum += f.au14;
    ++n;
  }
  const double mu = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = series.frames[i].au14 - mu;
    ss += d * d;
  }
  const double sigma = std::sqrt(ss / static_cast<double>(n));
  return Baseline{mu, std::max(sigma, sigma_floor)};
}

double laugh_threshold(const Baseline& baseline, const LaughParams& params) {
  return baseline.mu + params.k_sigma * baseline.sigma;
}

std::vector<LaughEvent> detect_laugh_events(const AUSeries& series, const Baseline& baseline,
                                            const LaughParams& params) {
  validate(params);
  const double threshold = laugh_threshold(baseline, params);
  const double dt = frame_period(series);
  const double max_gap = dt > 0.0 ? 2.0 * dt : std::numeric_limits<double>::infinity();

  std::vector<LaughEvent> events;
  std::optional<LaughEvent> run;
  double last_t = 0.0;
  auto finish = [&] {
    if (run) {
      run->end = last_t + dt;
      if (run->end - run->start + kCoverageSlack >= params.min_hold && run->start < run->end) {
        events.push_back(*run);
      }
      run.reset();
    }
  };
  for (const auto& f : series.frames) {
    if (run && f.t - last_t > max_gap) finish();
    if (f.au14 > threshold) {
      if (!run) run = LaughEvent{f.t, f.t, f.au14};
      run->peak_au14 = std::max(run->peak_au14, f.au14);
      last_t = f.t;
    } else {
      finish();
    }
  }
  finish();
  return events;
}

LaughEvent manual_marker(double t) {
  return LaughEvent{t, t, std::numeric_limits<double>::infinity()};
}

PunchlineSegment response_window(const PunchlineSegment& segment, const LaughParams& params) {
  return PunchlineSegment{segment.start - params.lead, segment.end + params.lag};
}

std::vector<PunchlineResponse> decide_punchline_response(const Timeline& timeline,
                                                         const std::vector<LaughEvent>& events,
                                                         const LaughParams& params) {
  std::vector<PunchlineResponse> out;
  out.reserve(timeline.segments.size());
  for (const auto& seg : timeline.segments) {
    const auto win = response_window(seg, params);
    PunchlineResponse r{seg, false, std::nullopt, false};
    for (const auto& e : events) {
      if (e.start > win.end || e.end < win.start) continue;
      if (!r.evidence || e.peak_au14 > r.evidence->peak_au14) r.evidence = e;
    }
    r.laughed = r.evidence.has_value();
    out.push_back(std::move(r));
  }
  return out;
}

double window_coverage(const AUSeries& series, const PunchlineSegment& window) {
  const double len = window.length();
  if (!(len > 0.0)) return 1.0;
  const double dt = frame_period(series);
  auto lo = std::lower_bound(series.frames.begin(), series.frames.end(), window.start,
                             [](const AUFrame& f, double t) { return f.t < t; });
  auto hi = std::lower_bound(lo, series.frames.end(), window.end,
                             [](const AUFrame& f, double t) { return f.t < t; });
  const auto n = static_cast<double>(std::distance(lo, hi));
  return std::min(1.0, n * dt / len);
}

void apply_dropout_rule(std::vector<PunchlineResponse>& responses, const AUSeries& series,
                        const LaughParams& params) {
  for (auto& r : responses) {
    if (r.evidence && r.evidence->is_manual()) continue;
    auto win = response_window(r.segment, params);
    win.start = std::max(0.0, win.start);
    if (window_coverage(series, win) < kMinWindowCoverage) {
      r.laughed = false;
      r.evidence.reset();
      r.dropout = true;
    }
  }
}

LabeledSamples window_samples(const AUSeries& series, const Timeline& timeline,
                              const std::vector<bool>& understood, const LaughParams& params) {
  if (understood.size() != timeline.segments.size()) {
    throw Error(ErrorCode::length_mismatch, "one label per segment required");
  }
  LabeledSamples out;
  for (std::size_t i = 0; i < timeline.segments.size(); ++i) {
    const auto win = response_window(timeline.segments[i], params);
    auto& dst = understood[i] ? out.understood : out.not_understood;
    for (const auto& f : series.frames) {
      if (f.t >= win.start && f.t <= win.end) dst.push_back(f.au14);
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const Baseline& b) {
  j = nlohmann::json{{"mu", b.mu}, {"sigma", b.sigma}};
}

void from_json(const nlohmann::json& j, Baseline& b) {
  b.mu = j.at("mu").get<double>();
  b.sigma = j.at("sigma").get<double>();
}

void to_json(nlohmann::json& j, const LaughParams& p) {
  j = nlohmann::json{
      {"k_sigma", p.k_sigma}, {"min_hold", p.min_hold}, {"lead", p.lead}, {"lag", p.lag}};
}

void from_json(const nlohmann::json& j, LaughParams& p) {
  p.k_sigma = j.at("k_sigma").get<double>();
  p.min_hold = j.at("min_hold").get<double>();
  p.lead = j.at("lead").get<double>();
  p.lag = j.at("lag").get<double>();
}

// JSON has no infinity; manual markers carry "peak_au14": "inf".
void to_json(nlohmann::json& j, const LaughEvent& e) {
  j = nlohmann::json{{"start", e.start}, {"end", e.end}};
  if (e.is_manual()) {
    j["peak_au14"] = "inf";
  } else {
    j["peak_au14"] = e.peak_au14;
  }
}

void from_json(const nlohmann::json& j, LaughEvent& e) {
  e.start = j.at("start").get<double>();
  e.end = j.at("end").get<double>();
  const auto& peak = j.at("peak_au14");
  if (peak.is_string()) {
    if (peak.get<std::string>() != "inf") {
      throw Error(ErrorCode::parse, "peak_au14 must be a number or \"inf\"");
    }
    e.peak_au14 = std::numeric_limits<double>::infinity();
  } else {
    e.peak_au14 = peak.get<double>();
  }
}

void to_json(nlohmann::json& j, const PunchlineResponse& r) {
  j = nlohmann::json{{"segment", r.segment}, {"laughed", r.laughed}, {"dropout", r.dropout}};
  j["evidence"] = r.evidence ? nlohmann::json(*r.evidence) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, PunchlineResponse& r) {
  r.segment = j.at("segment").get<PunchlineSegment>();
  r.laughed = j.at("laughed").get<bool>();
  r.dropout = j.value("dropout", false);
  r.evidence.reset();
  if (j.contains("evidence") && !j["evidence"].is_null()) {
    r.evidence = j["evidence"].get<LaughEvent>();
  }
}

}  // namespace pace::expression
