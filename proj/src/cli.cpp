#include "pace/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pace/audio.hpp"
#include "pace/evalkit.hpp"
#include "pace/laughtrack.hpp"
#include "pace/server.hpp"
#include "pace/session.hpp"
#include "pace/stats.hpp"
#include "pace/timestretch.hpp"

namespace pace::cli {

namespace {

using nlohmann::json;

void configure_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_st("pace"));
    done = true;
  }
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("PACE_LOG")) {
    const std::string v(env);
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  spdlog::set_level(level);
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      auto b = cell.find_first_not_of(" \t");
      auto e = cell.find_last_not_of(" \t");
      cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::optional<double> to_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Numeric rows; a first row that is not numeric is taken as a header.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  auto rows = read_csv_rows(path);
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> values;
    bool numeric = true;
    for (const auto& cell : rows[r]) {
      auto v = to_number(cell);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (!numeric) {
      if (r == 0) continue;
      throw Error(ErrorCode::parse, path + ": row " + std::to_string(r + 1) + " is not numeric");
    }
    out.push_back(std::move(values));
  }
  return out;
}

std::vector<double> read_column(const std::string& path) {
  std::vector<double> out;
  for (const auto& row : read_numeric_csv(path)) out.push_back(row.front());
  if (out.empty()) throw Error(ErrorCode::parse, path + " holds no values");
  return out;
}

json summary(const std::vector<double>& scores) {
  json j;
  j["n"] = scores.size();
  j["scores"] = scores;
  j["mean"] = stats::mean(scores);
  j["sd"] = scores.size() > 1 ? json(std::sqrt(stats::variance(scores))) : json(nullptr);
  return j;
}

int run_detect(const std::string& audio_path, const std::string& out_path,
               const laughtrack::DetectorConfig& cfg, std::ostream& out) {
  const auto audio = audio::load_wav(audio_path);
  const auto timeline = laughtrack::detect_punchlines(audio, cfg);
  save_timeline(out_path, timeline);
  out << json{{"segments", timeline.segments.size()}, {"out", out_path}}.dump() << '\n';
  return kExitOk;
}

int run_stretch(const std::string& in_path, const std::string& out_path, double rate,
                const timestretch::WsolaParams& params, bool unbounded) {
  const auto audio = audio::load_wav(in_path);
  const auto stretched = unbounded ? timestretch::stretch_unbounded(audio, rate, params)
                                   : timestretch::stretch(audio, rate, params);
  audio::save_wav(out_path, stretched);
  spdlog::info("wrote {} samples to {}", stretched.samples.size(), out_path);
  return kExitOk;
}

session::SessionConfig session_config(const std::string& timeline_path,
                                      const std::string& session_id) {
  session::SessionConfig cfg;
  cfg.timeline = load_timeline(timeline_path);
  cfg.session_id = session_id;
  return cfg;
}

int run_simulate(const std::string& timeline_path, const std::string& learner,
                 const std::string& out_path, const std::string& session_id, std::ostream& out) {
  const auto log = session::simulate(session_config(timeline_path, session_id),
                                     session::parse_learner(learner));
  session::save_session_log(out_path, log);
  out << json{{"final_rate", log.final_state.rate},
              {"punchlines_seen", log.final_state.punchlines_seen},
              {"viewing_time", log.viewing_time},
              {"commands", session::commands_in(log.events).size()},
              {"out", out_path}}
             .dump()
      << '\n';
  return kExitOk;
}

int run_replay(const std::string& path, std::ostream& out) {
  const auto log = session::load_session_log(path);
  const auto report = session::verify_replay(log);
  json j{{"identical", report.identical},
         {"compared", report.compared},
         {"commands", report.commands}};
  if (report.first_divergence) {
    j["first_divergence"] = *report.first_divergence;
    j["detail"] = report.detail;
  }
  out << j.dump() << '\n';
  return report.identical ? kExitOk : kExitRuntime;
}

int run_analyze(const std::string& a_path, const std::string& b_path,
                stats::Alternative alternative, std::ostream& out) {
  const auto a = read_column(a_path);
  const auto b = read_column(b_path);
  const auto mw = stats::mann_whitney_u(a, b, alternative);
  json j{{"U", mw.statistic},
         {"p", mw.p_value},
         {"method", stats::to_string(mw.method)},
         {"alternative", stats::to_string(alternative)},
         {"n1", mw.n1},
         {"n2", mw.n2}};
  try {
    j["g"] = stats::hedges_g(a, b);
  } catch (const Error& ex) {
    j["g"] = nullptr;
    j["g_error"] = ex.what();
  }
  out << j.dump() << '\n';
  return kExitOk;
}

int run_score_sus(const std::string& path, std::ostream& out) {
  std::vector<double> scores;
  for (const auto& row : read_numeric_csv(path)) {
    if (row.size() != 10) {
      throw Error(ErrorCode::parse, "SUS rows need 10 items, got " + std::to_string(row.size()));
    }
    evalkit::SusResponse r;
    for (std::size_t i = 0; i < 10; ++i) {
      if (row[i] != std::floor(row[i])) throw Error(ErrorCode::parse, "SUS items are integers");
      r.items[i] = static_cast<int>(row[i]);
    }
    scores.push_back(evalkit::score_sus(r));
  }
  if (scores.empty()) throw Error(ErrorCode::parse, path + " holds no respondents");
  auto j = summary(scores);
  j["instrument"] = "sus";
  j["band"] = evalkit::sus_band(j["mean"].get<double>());
  out << j.dump() << '\n';
  return kExitOk;
}

int run_score_tlx(const std::string& path, bool weighted, std::ostream& out) {
  std::vector<double> scores;
  const std::size_t width = weighted ? 12 : 6;
  for (const auto& row : read_numeric_csv(path)) {
    if (row.size() != width) {
      throw Error(ErrorCode::parse, "TLX rows need " + std::to_string(width) + " values, got " +
                                        std::to_string(row.size()));
    }
    evalkit::TlxResponse r;
    for (std::size_t i = 0; i < 6; ++i) r.subscales[i] = row[i];
    if (weighted) {
      std::array<int, 6> w{};
      for (std::size_t i = 0; i < 6; ++i) w[i] = static_cast<int>(row[6 + i]);
      r.weights = w;
    }
    scores.push_back(evalkit::score_tlx(r));
  }
  if (scores.empty()) throw Error(ErrorCode::parse, path + " holds no respondents");
  auto j = summary(scores);
  j["instrument"] = weighted ? "tlx_weighted" : "tlx_raw";
  out << j.dump() << '\n';
  return kExitOk;
}

int run_allocate(const std::string& path, std::size_t k, std::ostream& out) {
  const auto scores = read_column(path);
  const auto g = evalkit::allocate_groups(scores, k);
  json groups = json::array();
  for (std::size_t i = 0; i < g.groups.size(); ++i) {
    json members = json::array();
    for (auto idx : g.groups[i]) members.push_back(json{{"index", idx}, {"score", scores[idx]}});
    groups.push_back(json{{"members", members}, {"mean", g.group_means[i]}});
  }
  out << json{{"k", k}, {"groups", groups}, {"mean_spread", g.mean_spread()}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();

  CLI::App app{"pace: laughter-paced playback engine and evaluation toolkit", "pace"};
  app.require_subcommand(1);

  // detect
  auto* detect = app.add_subcommand("detect", "Segment laugh-track punchlines from a WAV file");
  std::string detect_audio, detect_out;
  laughtrack::DetectorConfig detector;
  detect->add_option("--audio", detect_audio, "Input WAV (PCM16)")->required();
  detect->add_option("--out", detect_out, "Output timeline JSON")->required();
  detect->add_option("--on", detector.on_threshold, "Score to open a segment")->capture_default_str();
  detect->add_option("--off", detector.off_threshold, "Score to close a segment")->capture_default_str();
  detect->add_option("--min-dur", detector.min_duration, "Shortest kept segment, s")->capture_default_str();
  detect->add_option("--merge-gap", detector.merge_gap, "Gaps shorter than this merge, s")->capture_default_str();

  // stretch
  auto* stretch = app.add_subcommand("stretch", "Change playback rate without changing pitch");
  std::string stretch_in, stretch_out;
  double stretch_rate = 1.0;
  bool stretch_unbounded = false;
  timestretch::WsolaParams wsola;
  stretch->add_option("--in", stretch_in, "Input WAV")->required();
  stretch->add_option("--out", stretch_out, "Output WAV (PCM16)")->required();
  stretch->add_option("--rate", stretch_rate, "Playback rate in [0.6, 1.0]")->required();
  stretch->add_option("--window", wsola.window, "Grain length, s")->capture_default_str();
  stretch->add_option("--overlap", wsola.overlap, "Grain overlap fraction")->capture_default_str();
  stretch->add_option("--search", wsola.search_radius, "Search radius, s")->capture_default_str();
  stretch->add_flag("--unbounded", stretch_unbounded, "Allow rates outside [0.6, 1.0]");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a simulated learner through a timeline");
  std::string sim_timeline, sim_learner, sim_out, sim_id = "simulated";
  simulate->add_option("--timeline", sim_timeline, "Timeline JSON")->required();
  simulate->add_option("--learner", sim_learner,
                       "never | always | threshold:RATE | logistic:SLOPE,MID[,SEED]")
      ->required();
  simulate->add_option("--out", sim_out, "Session log (JSON Lines)")->required();
  simulate->add_option("--session-id", sim_id, "Session id")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Host a live session over WebSocket");
  server::ServerOptions serve_opts;
  std::string serve_timeline, serve_log_dir, serve_id;
  serve->add_option("--port", serve_opts.port, "TCP port")->required();
  serve->add_option("--timeline", serve_timeline, "Timeline JSON")->required();
  serve->add_option("--log-dir", serve_log_dir, "Directory for <session_id>.jsonl");
  serve->add_option("--address", serve_opts.address, "Bind address")->capture_default_str();
  serve->add_option("--session-id", serve_id, "Session id (default: session-<unix time>)");

  // replay
  auto* replay = app.add_subcommand("replay", "Re-derive a session log and check determinism");
  std::string replay_path;
  replay->add_option("log", replay_path, "Session log (JSON Lines)")->required();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Mann-Whitney U and Hedges' g for two samples");
  std::string analyze_a, analyze_b;
  bool a_less = false, a_greater = false;
  analyze->add_option("--a", analyze_a, "CSV, one value per row")->required();
  analyze->add_option("--b", analyze_b, "CSV, one value per row")->required();
  auto* less_flag = analyze->add_flag("--a-less", a_less, "One-sided: a tends smaller");
  auto* greater_flag = analyze->add_flag("--a-greater", a_greater, "One-sided: a tends larger");
  less_flag->excludes(greater_flag);

  // score
  auto* score = app.add_subcommand("score", "Score questionnaires");
  score->require_subcommand(1);
  auto* sus = score->add_subcommand("sus", "System Usability Scale, 10 items per row");
  std::string sus_path;
  sus->add_option("responses", sus_path, "CSV, one respondent per row")->required();
  auto* tlx = score->add_subcommand("tlx", "NASA-TLX, 6 subscales (+6 weights) per row");
  std::string tlx_path;
  bool tlx_weighted = false;
  tlx->add_option("responses", tlx_path, "CSV, one respondent per row")->required();
  tlx->add_flag("--weighted", tlx_weighted, "Rows carry 6 pairwise-comparison weights");

  // allocate
  auto* allocate = app.add_subcommand("allocate", "Balance participants into k groups");
  std::string allocate_path;
  std::size_t allocate_k = 0;
  allocate->add_option("scores", allocate_path, "CSV, one score per row")->required();
  allocate->add_option("--k", allocate_k, "Number of groups")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*detect) return run_detect(detect_audio, detect_out, detector, out);
    if (*stretch) return run_stretch(stretch_in, stretch_out, stretch_rate, wsola, stretch_unbounded);
    if (*simulate) return run_simulate(sim_timeline, sim_learner, sim_out, sim_id, out);
    if (*serve) {
      if (serve_id.empty()) {
        serve_id = "session-" + std::to_string(std::chrono::duration_cast<std::chrono::seconds>(
                                                    std::chrono::system_clock::now().time_since_epoch())
                                                    .count());
      }
      if (!serve_log_dir.empty()) serve_opts.log_dir = serve_log_dir;
      serve_opts.on_listen = [&](unsigned short port) {
        out << json{{"listening", serve_opts.address}, {"port", port}, {"session_id", serve_id}}.dump()
            << std::endl;
      };
      server::serve_forever(session_config(serve_timeline, serve_id), serve_opts);
      return kExitOk;
    }
    if (*replay) return run_replay(replay_path, out);
    if (*analyze) {
      auto alt = a_less ? stats::Alternative::a_less
                        : (a_greater ? stats::Alternative::a_greater : stats::Alternative::two_sided);
      return run_analyze(analyze_a, analyze_b, alt, out);
    }
    if (*sus) return run_score_sus(sus_path, out);
    if (*tlx) return run_score_tlx(tlx_path, tlx_weighted, out);
    if (*allocate) return run_allocate(allocate_path, allocate_k, out);
  } catch (const Error& ex) {
    err << "pace: " << ex.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& ex) {
    err << "pace: " << ex.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace pace::cli
