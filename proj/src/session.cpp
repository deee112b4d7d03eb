#include "pace/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <regex>
#include <sstream>

namespace pace::session {

namespace {

using expression::LaughEvent;
using nlohmann::json;

constexpr double kRateTolerance = 1e-9;

double system_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

// Uniform [0, 1) from the top 53 bits, identical on every standard library.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool learner_laughs(const LearnerModel& m, double rate, std::mt19937_64& rng) {
  switch (m.kind) {
    case LearnerKind::always: return true;
    case LearnerKind::never: return false;
    case LearnerKind::threshold: return rate <= m.threshold_rate + kRateTolerance;
    case LearnerKind::logistic: {
      const double p = 1.0 / (1.0 + std::exp(m.slope * (rate - m.midpoint_rate)));
      return unit_uniform(rng) < p;
    }
  }
  return false;
}

double number_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::parse, std::string("missing numeric field '") + key + "'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::parse, std::string("'") + key + "' is not finite");
  return v;
}

std::optional<int> logged_version(const std::vector<SessionEvent>& events) {
  for (const auto& e : events) {
    if (e.kind == EventKind::session_start) return e.payload.value("version", 0);
  }
  return std::nullopt;
}

void require_supported(const std::vector<SessionEvent>& events) {
  if (auto v = logged_version(events); v && *v != kLogVersion) {
    throw Error(ErrorCode::unsupported_version,
                "session log version " + std::to_string(*v) + " is not supported (expected " +
                    std::to_string(kLogVersion) + ")");
  }
}

bool is_derived(EventKind k) { return k == EventKind::decision || k == EventKind::speed_command; }

}  // namespace

void validate(const SessionConfig& cfg) {
  validate_timeline(cfg.timeline);
  controller::validate(cfg.controller);
  expression::validate(cfg.laugh);
  if (!(cfg.calibration_duration > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "calibration_duration must be > 0");
  }
}

LearnerModel parse_learner(std::string_view text) {
  LearnerModel m;
  const std::string s(text);
  if (s == "always") {
    m.kind = LearnerKind::always;
    return m;
  }
  if (s == "never") {
    m.kind = LearnerKind::never;
    return m;
  }
  static const std::regex threshold_re(R"(threshold:([0-9]*\.?[0-9]+))");
  static const std::regex logistic_re(
      R"(logistic:(-?[0-9]*\.?[0-9]+),([0-9]*\.?[0-9]+)(?:,([0-9]+))?)");
  std::smatch match;
  if (std::regex_match(s, match, threshold_re)) {
    m.kind = LearnerKind::threshold;
    m.threshold_rate = std::stod(match[1]);
    return m;
  }
  if (std::regex_match(s, match, logistic_re)) {
    m.kind = LearnerKind::logistic;
    m.slope = std::stod(match[1]);
    m.midpoint_rate = std::stod(match[2]);
    if (match[3].matched) m.seed = std::stoull(match[3]);
    return m;
  }
  throw Error(ErrorCode::invalid_argument,
              "learner must be never|always|threshold:R|logistic:SLOPE,MID[,SEED], got '" + s +
                  "'");
}

Timeline demo_timeline() {
  constexpr double kClipLengths[] = {62, 70, 64, 68, 61, 75, 66, 63, 71};
  constexpr double kLaughLengths[] = {2.5, 3.0, 2.0};
  Timeline t;
  double clip_start = 0.0;
  std::size_t i = 0;
  for (double len : kClipLengths) {
    const double start = clip_start + 0.75 * len;
    t.segments.push_back({start, start + kLaughLengths[i % 3]});
    clip_start += len;
    ++i;
  }
  t.media_duration = clip_start;
  return t;
}

// --- DecisionEngine -------------------------------------------------------

DecisionEngine::DecisionEngine(SessionConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  state_ = controller::initial_state(cfg_.controller);
}

DecisionEngine::AuStatus DecisionEngine::add_au(AUFrame frame) {
  if (!series_.frames.empty() && frame.t <= series_.frames.back().t) return AuStatus::out_of_order;
  bool any_clamped = false;
  bool clamped = false;
  frame.au14 = clamp_au(frame.au14, &clamped);
  any_clamped |= clamped;
  for (auto& [code, v] : frame.aux) {
    v = clamp_au(v, &clamped);
    any_clamped |= clamped;
  }
  series_.frames.push_back(std::move(frame));
  return any_clamped ? AuStatus::clamped : AuStatus::accepted;
}

void DecisionEngine::add_marker(double t) {
  auto marker = expression::manual_marker(t);
  auto pos = std::upper_bound(markers_.begin(), markers_.end(), marker,
                              [](const LaughEvent& a, const LaughEvent& b) { return a.start < b.start; });
  markers_.insert(pos, marker);
}

std::optional<expression::Baseline> DecisionEngine::baseline() {
  if (calibrated_) return calibrated_;
  if (series_.empty()) return std::nullopt;
  const double span = series_.frames.back().t - series_.frames.front().t +
                      expression::frame_period(series_);
  if (span + 1e-6 >= cfg_.calibration_duration) {
    calibrated_ = expression::calibrate_baseline(series_, cfg_.calibration_duration);
    return calibrated_;
  }
  // Calibration window not filled yet: provisional baseline over what exists.
  double sum = 0.0;
  for (const auto& f : series_.frames) sum += f.au14;
  const double mu = sum / static_cast<double>(series_.frames.size());
  double ss = 0.0;
  for (const auto& f : series_.frames) ss += (f.au14 - mu) * (f.au14 - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(series_.frames.size()));
  return expression::Baseline{mu, std::max(sigma, expression::kDefaultSigmaFloor)};
}

DecisionEngine::Decision DecisionEngine::decide(std::size_t index) {
  const auto& segments = cfg_.timeline.segments;
  if (index >= segments.size()) {
    throw Error(ErrorCode::out_of_bounds, "punchline index " + std::to_string(index) +
                                              " beyond " + std::to_string(segments.size()));
  }
  const auto& seg = segments[index];
  const auto window = expression::response_window(seg, cfg_.laugh);

  std::vector<LaughEvent> events;
  if (auto base = baseline()) events = expression::detect_laugh_events(series_, *base, cfg_.laugh);
  events.insert(events.end(), markers_.begin(), markers_.end());
  std::stable_sort(events.begin(), events.end(),
                   [](const LaughEvent& a, const LaughEvent& b) { return a.start < b.start; });

  auto responses = expression::decide_punchline_response(
      Timeline{cfg_.timeline.media_duration, {seg}}, events, cfg_.laugh);
  if (!series_.empty()) expression::apply_dropout_rule(responses, series_, cfg_.laugh);

  // A marker is one laugh: once a window has claimed it, later windows
  // cannot reuse it.
  std::erase_if(markers_, [&](const LaughEvent& m) {
    return m.start >= window.start && m.start <= window.end;
  });

  Decision d;
  d.index = index;
  d.response = std::move(responses.front());
  d.rate_before = state_.rate;
  auto stepped = controller::step(state_, d.response.laughed, cfg_.controller);
  state_ = stepped.state;
  d.state = state_;
  if (stepped.command) {
    stepped.command->t = seg.end;
    d.command = stepped.command;
  }
  return d;
}

json decision_payload(const DecisionEngine::Decision& d) {
  json j = d.response;
  j["punchline"] = d.index;
  j["rate_before"] = d.rate_before;
  j["rate_after"] = d.state.rate;
  j["punchlines_seen"] = d.state.punchlines_seen;
  return j;
}

json command_payload(const DecisionEngine::Decision& d) {
  json j = *d.command;
  j["punchline"] = d.index;
  return j;
}

// --- simulate -------------------------------------------------------------

SessionLog simulate(const SessionConfig& cfg, const LearnerModel& learner) {
  DecisionEngine engine(cfg);
  std::mt19937_64 rng(learner.seed);
  SessionLog log;
  log.config = cfg;

  // Wall time here is simulated viewing time: media spans divided by the
  // rate in effect, with rate changes landing at each punchline's end.
  double viewed = 0.0;
  double media = 0.0;
  auto wall_at = [&](double t) { return viewed + (t - media) / engine.state().rate; };
  auto push = [&](double wall, EventKind kind, json payload) {
    log.events.push_back(SessionEvent{wall, kind, std::move(payload)});
  };

  push(0.0, EventKind::session_start, json{{"version", kLogVersion}, {"config", cfg}});
  const auto& segments = cfg.timeline.segments;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    push(wall_at(seg.start), EventKind::punchline_open,
         json{{"punchline", i}, {"t", seg.start}, {"segment", seg}});
    if (learner_laughs(learner, engine.state().rate, rng)) {
      const double mid = 0.5 * (seg.start + seg.end);
      engine.add_marker(mid);
      push(wall_at(mid), EventKind::laugh_event,
           json{{"source", "learner"}, {"event", expression::manual_marker(mid)}});
    }
    viewed = wall_at(seg.end);
    media = seg.end;
    push(viewed, EventKind::punchline_close,
         json{{"punchline", i}, {"t", seg.end + cfg.laugh.lag}});
    const auto d = engine.decide(i);
    push(viewed, EventKind::decision, decision_payload(d));
    if (d.command) push(viewed, EventKind::speed_command, command_payload(d));
  }
  viewed = wall_at(cfg.timeline.media_duration);

  log.final_state = engine.state();
  log.viewing_time = viewed;
  push(viewed, EventKind::session_end,
       json{{"final_state", log.final_state}, {"viewing_time", log.viewing_time}});
  return log;
}

// --- LiveSession ------------------------------------------------------------

LiveSession::LiveSession(SessionConfig cfg, Clock clock, Sink sink)
    : engine_(cfg), clock_(std::move(clock)), sink_(std::move(sink)) {
  log_.config = std::move(cfg);
  log_.final_state = engine_.state();
  emit(EventKind::session_start, json{{"version", kLogVersion}, {"config", log_.config}});
}

void LiveSession::emit(EventKind kind, json payload) {
  const double now = clock_ ? clock_() : system_seconds();
  last_wall_ = std::max(last_wall_, now);
  log_.events.push_back(SessionEvent{last_wall_, kind, std::move(payload)});
  if (sink_) sink_(log_.events.back());
}

std::vector<Outbound> LiveSession::error(std::string_view code, std::string detail) {
  emit(EventKind::protocol_error, json{{"code", code}, {"detail", std::move(detail)}});
  return {Outbound{Outbound::Target::sender, json{{"type", "error"}, {"code", code}}}};
}

json LiveSession::state_message() const {
  return json{{"type", "state"},
              {"rate", engine_.state().rate},
              {"punchlines_seen", engine_.state().punchlines_seen}};
}

void LiveSession::advance_to(double t) {
  viewing_time_ += (t - clock_t_) / engine_.state().rate;
  clock_t_ = t;
}

std::vector<Outbound> LiveSession::on_tick(double t) {
  std::vector<Outbound> out;
  const auto& segments = log_.config.timeline.segments;
  const double lag = log_.config.laugh.lag;
  constexpr double kNever = std::numeric_limits<double>::infinity();
  while (true) {
    const double open_at = next_open_ < segments.size() ? segments[next_open_].start : kNever;
    const double close_at =
        next_close_ < next_open_ ? segments[next_close_].end + lag : kNever;
    const double boundary = std::min(open_at, close_at);
    if (boundary > t) break;
    advance_to(boundary);
    if (close_at <= open_at) {
      const std::size_t i = next_close_++;
      emit(EventKind::punchline_close, json{{"punchline", i}, {"t", t}});
      const auto d = engine_.decide(i);
      emit(EventKind::decision, decision_payload(d));
      if (d.command) {
        emit(EventKind::speed_command, command_payload(d));
        out.push_back(Outbound{Outbound::Target::players,
                               json{{"type", "speed"},
                                    {"rate", d.command->rate},
                                    {"t", d.command->t},
                                    {"cause", to_string(d.command->cause)}}});
      }
      out.push_back(Outbound{Outbound::Target::players, state_message()});
    } else {
      const std::size_t i = next_open_++;
      emit(EventKind::punchline_open,
           json{{"punchline", i}, {"t", t}, {"segment", segments[i]}});
    }
  }
  advance_to(t);
  return out;
}

std::vector<Outbound> LiveSession::handle_message(std::string_view text, Peer& peer) {
  if (finished_) return error("session_closed", "session already finished");
  json msg = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (msg.is_discarded() || !msg.is_object()) {
    return error("bad_message", "not a JSON object");
  }
  auto type_it = msg.find("type");
  if (type_it == msg.end() || !type_it->is_string()) {
    return error("bad_message", "missing string field 'type'");
  }
  const std::string type = type_it->get<std::string>();

  try {
    if (type == "hello") {
      const std::string role = msg.value("role", std::string{});
      if (role != "sensor" && role != "player") {
        return error("bad_message", "hello.role must be sensor or player");
      }
      peer.role = role;
      emit(EventKind::hello, json{{"role", role}});
      return {Outbound{Outbound::Target::sender, state_message()}};
    }
    if (type == "au") {
      AUFrame frame;
      frame.t = number_field(msg, "t");
      frame.au14 = number_field(msg, "au14");
      if (frame.t < 0.0) return error("bad_message", "au.t must be >= 0");
      static const std::regex au_code(R"(au[0-9]+)");
      for (const auto& [key, v] : msg.items()) {
        if (key != "au14" && v.is_number() && std::regex_match(key, au_code)) {
          frame.aux[key] = v.get<double>();
        }
      }
      switch (engine_.add_au(frame)) {
        case DecisionEngine::AuStatus::out_of_order:
          emit(EventKind::warning, json{{"reason", "au_out_of_order"}, {"t", frame.t}});
          return {};
        case DecisionEngine::AuStatus::clamped:
          emit(EventKind::warning, json{{"reason", "au_clamped"}, {"t", frame.t}});
          break;
        case DecisionEngine::AuStatus::accepted:
          break;
      }
      emit(EventKind::au_frame, engine_.series().frames.back());
      return {};
    }
    if (type == "marker") {
      const double t = number_field(msg, "t");
      if (t < 0.0) return error("bad_message", "marker.t must be >= 0");
      engine_.add_marker(t);
      emit(EventKind::laugh_event,
           json{{"source", "marker"}, {"event", expression::manual_marker(t)}});
      return {};
    }
    if (type == "tick") {
      const double t = number_field(msg, "t");
      if (t < 0.0) return error("bad_message", "tick.t must be >= 0");
      if (t < clock_t_) {
        emit(EventKind::warning,
             json{{"reason", "clock_backwards"}, {"t", t}, {"media_clock", clock_t_}});
        return {};
      }
      emit(EventKind::tick, json{{"t", t}});
      return on_tick(t);
    }
  } catch (const Error& ex) {
    return error("bad_message", ex.what());
  }
  return error("unknown_type", "unknown message type '" + type + "'");
}

const SessionLog& LiveSession::finish() {
  if (!finished_) {
    finished_ = true;
    log_.final_state = engine_.state();
    log_.viewing_time = viewing_time_;
    emit(EventKind::session_end, json{{"final_state", log_.final_state},
                                      {"viewing_time", viewing_time_},
                                      {"media_clock", clock_t_}});
  }
  return log_;
}

// --- replay -----------------------------------------------------------------

SessionLog replay(const SessionLog& log) {
  require_supported(log.events);
  DecisionEngine engine(log.config);
  SessionLog out;
  out.config = log.config;
  out.viewing_time = log.viewing_time;
  for (const auto& e : log.events) {
    if (is_derived(e.kind)) continue;
    out.events.push_back(e);
    switch (e.kind) {
      case EventKind::au_frame:
        engine.add_au(e.payload.get<AUFrame>());
        break;
      case EventKind::laugh_event:
        engine.add_marker(e.payload.at("event").at("start").get<double>());
        break;
      case EventKind::punchline_close: {
        const auto d = engine.decide(e.payload.at("punchline").get<std::size_t>());
        out.events.push_back(SessionEvent{e.wall_time, EventKind::decision, decision_payload(d)});
        if (d.command) {
          out.events.push_back(
              SessionEvent{e.wall_time, EventKind::speed_command, command_payload(d)});
        }
        break;
      }
      default:
        break;
    }
  }
  out.final_state = engine.state();
  return out;
}

ReplayReport verify_replay(const SessionLog& log) {
  const SessionLog derived = replay(log);
  std::vector<std::size_t> original_idx;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    if (is_derived(log.events[i].kind)) original_idx.push_back(i);
  }
  std::vector<const SessionEvent*> rederived;
  for (const auto& e : derived.events) {
    if (is_derived(e.kind)) rederived.push_back(&e);
  }

  ReplayReport report;
  report.commands = commands_in(derived.events);
  const std::size_t common = std::min(original_idx.size(), rederived.size());
  for (std::size_t k = 0; k < common; ++k) {
    const auto& a = log.events[original_idx[k]];
    const auto& b = *rederived[k];
    ++report.compared;
    if (a.kind != b.kind || a.payload != b.payload) {
      report.identical = false;
      report.first_divergence = original_idx[k];
      report.detail = "event " + std::to_string(original_idx[k]) + " (" +
                      std::string(to_string(a.kind)) + "): logged " + a.payload.dump() +
                      ", replay gives " + std::string(to_string(b.kind)) + " " +
                      b.payload.dump();
      return report;
    }
  }
  if (original_idx.size() != rederived.size()) {
    report.identical = false;
    if (original_idx.size() > common) {
      report.first_divergence = original_idx[common];
      report.detail = "event " + std::to_string(original_idx[common]) +
                      " has no counterpart in the replay";
    } else {
      report.first_divergence = log.events.size();
      report.detail = "replay derives " + std::to_string(rederived.size() - common) +
                      " extra decision/command events";
    }
  }
  return report;
}

std::vector<SpeedCommand> commands_in(const std::vector<SessionEvent>& events) {
  std::vector<SpeedCommand> out;
  for (const auto& e : events) {
    if (e.kind == EventKind::speed_command) out.push_back(e.payload.get<SpeedCommand>());
  }
  return out;
}

// --- persistence ------------------------------------------------------------

void write_session_log(std::ostream& out, const SessionLog& log) { write_events(out, log.events); }

void save_session_log(const std::filesystem::path& path, const SessionLog& log) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  write_session_log(out, log);
}

SessionLog read_session_log(std::istream& in) {
  SessionLog log;
  log.events = read_events(in);
  require_supported(log.events);
  bool have_config = false;
  for (const auto& e : log.events) {
    if (e.kind == EventKind::session_start) {
      log.config = e.payload.at("config").get<SessionConfig>();
      have_config = true;
    } else if (e.kind == EventKind::decision) {
      log.final_state.rate = e.payload.at("rate_after").get<double>();
      log.final_state.punchlines_seen = e.payload.at("punchlines_seen").get<std::int64_t>();
    } else if (e.kind == EventKind::session_end) {
      log.final_state = e.payload.at("final_state").get<PlaybackState>();
      log.viewing_time = e.payload.at("viewing_time").get<double>();
    }
  }
  if (!have_config) throw Error(ErrorCode::parse, "session log has no session_start event");
  return log;
}

SessionLog load_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return read_session_log(in);
}

void to_json(json& j, const SessionConfig& c) {
  j = json{{"timeline", c.timeline},
           {"controller", c.controller},
           {"laugh", c.laugh},
           {"calibration_duration", c.calibration_duration},
           {"session_id", c.session_id}};
}

void from_json(const json& j, SessionConfig& c) {
  c.timeline = j.at("timeline").get<Timeline>();
  c.controller = j.at("controller").get<controller::ControllerConfig>();
  c.laugh = j.at("laugh").get<expression::LaughParams>();
  c.calibration_duration = j.at("calibration_duration").get<double>();
  c.session_id = j.at("session_id").get<std::string>();
}

}  // namespace pace::session
