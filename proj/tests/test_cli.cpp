#include <doctest.h>

#include <fstream>
#include <sstream>

#include "pace/audio.hpp"
#include "pace/cli.hpp"
#include "pace/session.hpp"
#include "support.hpp"

using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run pace_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pace");
  std::ostringstream out, err;
  const int code = pace::cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("missing audio file is a runtime error naming the file") {
  testing::TempDir dir;
  const auto r = pace_cli({"detect", "--audio", "missing.wav", "--out", (dir / "t.json").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("missing.wav") != std::string::npos);
}

TEST_CASE("score sus on the all-3s respondent") {
  const auto r = pace_cli({"score", "sus", PACE_FIXTURES "/all3.csv"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j.at("mean") == 50.0);
  CHECK(j.at("scores") == json::array({50.0}));
  CHECK(r.out.find("50.0") != std::string::npos);
}

TEST_CASE("simulate never ends at 0.6") {
  testing::TempDir dir;
  const auto log_path = dir / "log.jsonl";
  const auto r = pace_cli({"simulate", "--timeline", PACE_DATA "/demo_timeline.json", "--learner",
                           "never", "--out", log_path.string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("final_rate").get<double>() == doctest::Approx(0.6));
  const auto log = pace::session::load_session_log(log_path);
  CHECK(log.final_state.rate == doctest::Approx(0.6));

  const auto rep = pace_cli({"replay", log_path.string()});
  CHECK(rep.code == 0);
  CHECK(json::parse(rep.out).at("identical") == true);
}

TEST_CASE("replay exits 1 on a tampered log") {
  testing::TempDir dir;
  auto log = pace::session::simulate(
      pace::session::SessionConfig{pace::session::demo_timeline(), {}, {}, 30.0, "x"},
      pace::session::parse_learner("never"));
  for (auto& e : log.events) {
    if (e.kind == pace::EventKind::decision) {
      e.payload["rate_after"] = 1.0;
      break;
    }
  }
  pace::session::save_session_log(dir / "bad.jsonl", log);
  const auto r = pace_cli({"replay", (dir / "bad.jsonl").string()});
  CHECK(r.code == 1);
  CHECK(json::parse(r.out).at("identical") == false);
}

TEST_CASE("every subcommand has help") {
  for (std::vector<std::string> args :
       {std::vector<std::string>{"--help"}, {"detect", "--help"}, {"stretch", "--help"},
        {"simulate", "--help"}, {"serve", "--help"}, {"replay", "--help"}, {"analyze", "--help"},
        {"score", "--help"}, {"score", "sus", "--help"}, {"score", "tlx", "--help"},
        {"allocate", "--help"}}) {
    const auto r = pace_cli(args);
    INFO(args.front());
    CHECK(r.code == 0);
    CHECK_FALSE(r.out.empty());
  }
}

TEST_CASE("usage errors exit 2") {
  CHECK(pace_cli({}).code == 2);
  CHECK(pace_cli({"frobnicate"}).code == 2);
  CHECK(pace_cli({"detect", "--audio", "a.wav"}).code == 2);
  CHECK(pace_cli({"score", "sus", "x.csv", "--bogus"}).code == 2);
  CHECK(pace_cli({"analyze", "--a", "a", "--b", "b", "--a-less", "--a-greater"}).code == 2);
}

TEST_CASE("analyze prints JSON") {
  testing::TempDir dir;
  write_text(dir / "a.csv", "value\n1\n2\n3\n");
  write_text(dir / "b.csv", "4\n5\n6\n");
  auto r = pace_cli({"analyze", "--a", (dir / "a.csv").string(), "--b", (dir / "b.csv").string()});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j.at("U") == 0.0);
  CHECK(j.at("p").get<double>() == doctest::Approx(0.1));
  CHECK(j.at("method") == "exact");
  CHECK(j.at("g").get<double>() < 0);

  r = pace_cli({"analyze", "--a", (dir / "a.csv").string(), "--b", (dir / "b.csv").string(),
                "--a-less"});
  j = json::parse(r.out);
  CHECK(j.at("p").get<double>() == doctest::Approx(0.05));
  CHECK(j.at("alternative") == "a_less");
}

TEST_CASE("score tlx and allocate") {
  testing::TempDir dir;
  write_text(dir / "tlx.csv", "60,20,40,30,50,10\n0,0,0,0,0,0\n");
  auto r = pace_cli({"score", "tlx", (dir / "tlx.csv").string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("scores") == json::array({35.0, 0.0}));

  write_text(dir / "tlxw.csv", "40,40,40,40,40,40,5,4,3,2,1,0\n");
  r = pace_cli({"score", "tlx", (dir / "tlxw.csv").string(), "--weighted"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("mean") == 40.0);

  r = pace_cli({"score", "tlx", (dir / "tlx.csv").string(), "--weighted"});
  CHECK(r.code == 1);

  write_text(dir / "scores.csv", "1\n2\n3\n4\n5\n6\n7\n8\n");
  r = pace_cli({"allocate", (dir / "scores.csv").string(), "--k", "2"});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out).at("mean_spread") == 0.0);
}

TEST_CASE("detect and stretch on real files") {
  testing::TempDir dir;
  pace::audio::save_wav(dir / "in.wav", testing::tone_with_bursts(6.0, 16000, {{2, 3}}, 4));
  auto r = pace_cli({"detect", "--audio", (dir / "in.wav").string(), "--out",
                     (dir / "t.json").string()});
  REQUIRE(r.code == 0);
  CHECK(pace::load_timeline(dir / "t.json").segments.size() == 1);

  r = pace_cli({"stretch", "--in", (dir / "in.wav").string(), "--rate", "0.8", "--out",
                (dir / "out.wav").string()});
  REQUIRE(r.code == 0);
  CHECK(pace::audio::load_wav(dir / "out.wav").duration() == doctest::Approx(7.5).epsilon(0.02));

  r = pace_cli({"stretch", "--in", (dir / "in.wav").string(), "--rate", "1.4", "--out",
                (dir / "out.wav").string()});
  CHECK(r.code == 1);
}

TEST_CASE("malformed input is a runtime error") {
  testing::TempDir dir;
  write_text(dir / "bad.csv", "3,3,x\n3,3\n");
  const auto r = pace_cli({"score", "sus", (dir / "bad.csv").string()});
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}
