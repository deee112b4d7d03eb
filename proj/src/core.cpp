#include "pace/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pace {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::overlap: return "overlap";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::unsorted: return "unsorted";
    case ErrorCode::unsupported_format: return "unsupported_format";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::too_short: return "too_short";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::empty_sample: return "empty_sample";
    case ErrorCode::degenerate_effect: return "degenerate_effect";
    case ErrorCode::zero_variance: return "zero_variance";
    case ErrorCode::off_grid: return "off_grid";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::unsupported_version: return "unsupported_version";
  }
  return "unknown";
}

namespace {

constexpr std::array<std::pair<Cause, std::string_view>, 3> kCauseNames{{
    {Cause::laugh, "laugh"},
    {Cause::no_laugh, "no_laugh"},
    {Cause::init, "init"},
}};

constexpr std::array<std::pair<EventKind, std::string_view>, 12> kKindNames{{
    {EventKind::session_start, "session_start"},
    {EventKind::au_frame, "au_frame"},
    {EventKind::laugh_event, "laugh_event"},
    {EventKind::tick, "tick"},
    {EventKind::hello, "hello"},
    {EventKind::punchline_open, "punchline_open"},
    {EventKind::punchline_close, "punchline_close"},
    {EventKind::decision, "decision"},
    {EventKind::speed_command, "speed_command"},
    {EventKind::warning, "warning"},
    {EventKind::protocol_error, "protocol_error"},
    {EventKind::session_end, "session_end"},
}};

std::string describe(const PunchlineSegment& s) {
  std::ostringstream os;
  os << '(' << s.start << ", " << s.end << ')';
  return os.str();
}

double finite_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw Error(ErrorCode::parse, std::string("field '") + key + "' must be a number");
  }
  double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::parse, std::string("field '") + key + "' must be finite");
  }
  return d;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    // trim surrounding blanks and a stray CR
    auto b = cell.find_first_not_of(" \t\r");
    auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, std::size_t row) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != cell.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::parse,
                "row " + std::to_string(row) + ": '" + cell + "' is not a finite number");
  }
  return v;
}

}  // namespace

std::string_view to_string(Cause cause) {
  for (const auto& [c, name] : kCauseNames) {
    if (c == cause) return name;
  }
  return "init";
}

Cause cause_from_string(std::string_view s) {
  for (const auto& [c, name] : kCauseNames) {
    if (name == s) return c;
  }
  throw Error(ErrorCode::parse, "unknown cause '" + std::string(s) + "'");
}

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "warning";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kKindNames) {
    if (name == s) return k;
  }
  throw Error(ErrorCode::parse, "unknown event kind '" + std::string(s) + "'");
}

bool is_playback_grid_rate(double rate) {
  for (int tenths = 6; tenths <= 10; ++tenths) {
    if (std::abs(rate - tenths / 10.0) < 1e-9) return true;
  }
  return false;
}

const Timeline& validate_timeline(const Timeline& timeline) {
  if (!std::isfinite(timeline.media_duration) || timeline.media_duration < 0.0) {
    throw Error(ErrorCode::out_of_bounds, "media_duration must be finite and >= 0");
  }
  const auto& segs = timeline.segments;
  for (const auto& s : segs) {
    if (!std::isfinite(s.start) || !std::isfinite(s.end) || s.start < 0.0 || s.start >= s.end) {
      throw Error(ErrorCode::out_of_bounds,
                  "segment " + describe(s) + " violates 0 <= start < end");
    }
  }
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].start < segs[i - 1].start) {
      throw Error(ErrorCode::unsorted, "segment " + describe(segs[i]) + " starts before " +
                                           describe(segs[i - 1]));
    }
  }
  for (std::size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].start < segs[i - 1].end) {
      throw Error(ErrorCode::overlap,
                  "segments " + describe(segs[i - 1]) + " and " + describe(segs[i]) + " overlap");
    }
  }
  for (const auto& s : segs) {
    if (s.end > timeline.media_duration) {
      throw Error(ErrorCode::out_of_bounds, "segment " + describe(s) +
                                                " ends after media_duration " +
                                                std::to_string(timeline.media_duration));
    }
  }
  return timeline;
}

double clamp_au(double value, bool* clamped) {
  double out = std::clamp(value, kAuMin, kAuMax);
  if (clamped) *clamped = out != value;
  return out;
}

void to_json(nlohmann::json& j, const AUFrame& f) {
  j = nlohmann::json{{"t", f.t}, {"au14", f.au14}};
  for (const auto& [code, v] : f.aux) j[code] = v;
}

void from_json(const nlohmann::json& j, AUFrame& f) {
  f.t = finite_number(j, "t");
  f.au14 = finite_number(j, "au14");
  f.aux.clear();
  for (const auto& [key, v] : j.items()) {
    if (key == "t" || key == "au14") continue;
    if (v.is_number()) f.aux[key] = v.get<double>();
  }
}

void to_json(nlohmann::json& j, const AUSeries& s) {
  j = nlohmann::json{{"frames", s.frames}};
  if (s.sample_rate_hint) j["sample_rate_hint"] = *s.sample_rate_hint;
}

void from_json(const nlohmann::json& j, AUSeries& s) {
  s.frames = j.at("frames").get<std::vector<AUFrame>>();
  s.sample_rate_hint.reset();
  if (j.contains("sample_rate_hint") && !j["sample_rate_hint"].is_null()) {
    s.sample_rate_hint = j["sample_rate_hint"].get<double>();
  }
}

void to_json(nlohmann::json& j, const PunchlineSegment& s) {
  j = nlohmann::json{{"start", s.start}, {"end", s.end}};
}

void from_json(const nlohmann::json& j, PunchlineSegment& s) {
  s.start = finite_number(j, "start");
  s.end = finite_number(j, "end");
}

void to_json(nlohmann::json& j, const Timeline& t) {
  j = nlohmann::json{{"media_duration", t.media_duration}, {"segments", t.segments}};
}

void from_json(const nlohmann::json& j, Timeline& t) {
  t.media_duration = finite_number(j, "media_duration");
  t.segments = j.at("segments").get<std::vector<PunchlineSegment>>();
}

void to_json(nlohmann::json& j, const PlaybackState& s) {
  j = nlohmann::json{{"rate", s.rate}, {"punchlines_seen", s.punchlines_seen}};
}

void from_json(const nlohmann::json& j, PlaybackState& s) {
  s.rate = finite_number(j, "rate");
  s.punchlines_seen = j.at("punchlines_seen").get<std::int64_t>();
}

void to_json(nlohmann::json& j, const SpeedCommand& c) {
  j = nlohmann::json{{"t", c.t}, {"rate", c.rate}, {"cause", std::string(to_string(c.cause))}};
}

void from_json(const nlohmann::json& j, SpeedCommand& c) {
  c.t = finite_number(j, "t");
  c.rate = finite_number(j, "rate");
  c.cause = cause_from_string(j.at("cause").get<std::string>());
}

void to_json(nlohmann::json& j, const SessionEvent& e) {
  j = nlohmann::json{
      {"wall_time", e.wall_time}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}};
}

void from_json(const nlohmann::json& j, SessionEvent& e) {
  e.wall_time = finite_number(j, "wall_time");
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.payload = j.value("payload", nlohmann::json::object());
}

Timeline parse_timeline(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    return validate_timeline(j.get<Timeline>());
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse, std::string("timeline JSON: ") + ex.what());
  }
}

Timeline load_timeline(const std::filesystem::path& path) {
  return parse_timeline(read_file(path));
}

void save_timeline(const std::filesystem::path& path, const Timeline& timeline) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << nlohmann::json(timeline).dump(2) << '\n';
}

AuIngest read_au_csv(std::istream& in) {
  AuIngest result;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::parse, "AU CSV is empty");
  auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "t" || header[1] != "au14") {
    throw Error(ErrorCode::parse, "AU CSV header must start with 't,au14'");
  }
  for (std::size_t c = 2; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.size() < 3 || h.rfind("au", 0) != 0) {
      throw Error(ErrorCode::parse, "AU CSV column '" + h + "' is not an au<NN> code");
    }
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::parse, "row " + std::to_string(row) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
    }
    AUFrame f;
    f.t = parse_double(cells[0], row);
    if (f.t < 0.0) throw Error(ErrorCode::parse, "row " + std::to_string(row) + ": t < 0");
    if (!result.series.frames.empty() && f.t <= result.series.frames.back().t) {
      throw Error(ErrorCode::unsorted, "row " + std::to_string(row) + ": t not increasing");
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      bool clamped = false;
      double v = clamp_au(parse_double(cells[c], row), &clamped);
      if (clamped) {
        result.warnings.push_back("row " + std::to_string(row) + ": " + header[c] +
                                  " clamped to [0,5]");
      }
      if (c == 1) {
        f.au14 = v;
      } else {
        f.aux[header[c]] = v;
      }
    }
    result.series.frames.push_back(std::move(f));
  }
  return result;
}

AuIngest load_au_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return read_au_csv(in);
}

void write_au_csv(std::ostream& out, const AUSeries& series) {
  std::vector<std::string> codes;
  for (const auto& f : series.frames) {
    for (const auto& [code, v] : f.aux) {
      if (std::find(codes.begin(), codes.end(), code) == codes.end()) codes.push_back(code);
    }
  }
  std::sort(codes.begin(), codes.end());
  out << "t,au14";
  for (const auto& c : codes) out << ',' << c;
  out << '\n';
  auto old_precision = out.precision(17);
  for (const auto& f : series.frames) {
    out << f.t << ',' << f.au14;
    for (const auto& c : codes) {
      auto it = f.aux.find(c);
      out << ',' << (it == f.aux.end() ? 0.0 : it->second);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

std::string event_to_line(const SessionEvent& e) { return nlohmann::json(e).dump(); }

SessionEvent event_from_line(std::string_view line) {
  try {
    return nlohmann::json::parse(line).get<SessionEvent>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::parse, std::string("session log line: ") + ex.what());
  }
}

void write_events(std::ostream& out, const std::vector<SessionEvent>& events) {
  for (const auto& e : events) out << event_to_line(e) << '\n';
}

std::vector<SessionEvent> read_events(std::istream& in) {
  std::vector<SessionEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(event_from_line(line));
  }
  return events;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pace
