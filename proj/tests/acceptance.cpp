// Acceptance run: one line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "pace/controller.hpp"
#include "pace/evalkit.hpp"
#include "pace/expression.hpp"
#include "pace/laughtrack.hpp"
#include "pace/session.hpp"
#include "pace/stats.hpp"
#include "pace/timestretch.hpp"
#include "support.hpp"

using namespace pace;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

Outcome controller_table() {
  Outcome o;
  const auto t0 = Clock::now();
  const controller::ControllerConfig cfg;
  for (int tenths = 6; tenths <= 10; ++tenths) {
    for (bool laughed : {true, false}) {
      const auto r = controller::step(PlaybackState{controller::snap(tenths / 10.0, cfg), 0}, laughed, cfg);
      const int want = std::clamp(tenths + (laughed ? 1 : -1), 6, 10);
      if (std::abs(r.state.rate - want / 10.0) > 1e-12 || r.command.has_value() != (want != tenths)) {
        o.fail("table row rate " + std::to_string(tenths / 10.0));
      }
    }
  }
  std::mt19937_64 rng(1);
  constexpr int kSequences = 100000;
  for (int i = 0; i < kSequences && o.pass; ++i) {
    PlaybackState s = controller::initial_state(cfg);
    const std::size_t len = rng() % 30;
    for (std::size_t k = 0; k < len; ++k) {
      s = controller::step(s, rng() & 1, cfg).state;
      if (!(s.rate >= 0.6 && s.rate <= 1.0) || !controller::on_grid(s.rate, cfg)) {
        o.fail("rate " + std::to_string(s.rate) + " off grid");
        break;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) o.fail("took " + std::to_string(elapsed) + " s");
  if (o.pass) {
    std::ostringstream d;
    d << "10 table rows, " << kSequences << " random sequences, " << elapsed << " s";
    o.detail = d.str();
  }
  return o;
}

Outcome detection_corpus() {
  Outcome o;
  constexpr int kFiles = 20;
  constexpr double kSeconds = 60.0, kRate = 16000;
  double worst_boundary = 0.0, worst_time = 0.0;
  std::mt19937_64 rng(2024);
  for (int f = 0; f < kFiles; ++f) {
    std::vector<std::pair<double, double>> bursts;
    double pos = 2.0;
    const int n = 4 + static_cast<int>(rng() % 3);
    std::uniform_real_distribution<double> gap(2.0, 6.0), len(1.0, 3.0);
    for (int i = 0; i < n; ++i) {
      const double s = pos + gap(rng);
      const double e = s + len(rng);
      if (e > kSeconds - 2.0) break;
      bursts.push_back({s, e});
      pos = e;
    }
    const auto audio = testing::tone_with_bursts(kSeconds, kRate, bursts, rng());
    const auto t0 = Clock::now();
    const auto timeline = laughtrack::detect_punchlines(audio);
    worst_time = std::max(worst_time, seconds_since(t0));
    if (timeline.segments.size() != bursts.size()) {
      o.fail("file " + std::to_string(f) + ": " + std::to_string(timeline.segments.size()) +
             " segments for " + std::to_string(bursts.size()) + " bursts");
      continue;
    }
    for (std::size_t i = 0; i < bursts.size(); ++i) {
      worst_boundary = std::max({worst_boundary, std::abs(timeline.segments[i].start - bursts[i].first),
                                 std::abs(timeline.segments[i].end - bursts[i].second)});
    }
  }
  if (worst_boundary > 0.1) o.fail("boundary error " + std::to_string(worst_boundary) + " s");
  if (worst_time >= 1.0) o.fail("slowest file took " + std::to_string(worst_time) + " s");
  if (o.pass) {
    std::ostringstream d;
    d << kFiles << " files, precision = recall = 1, worst boundary " << worst_boundary * 1000
      << " ms, slowest " << worst_time << " s per 60 s";
    o.detail = d.str();
  }
  return o;
}

Outcome stretch_laws() {
  Outcome o;
  double worst_dur = 0.0, worst_hz = 0.0;
  for (double freq : {220.0, 440.0, 660.0, 880.0}) {
    const auto in = testing::sine(freq, 1.0, 16000, 0.8);
    for (double rate : {0.6, 0.7, 0.8, 0.9, 1.0}) {
      const auto out = timestretch::stretch(in, rate);
      const double n_in = static_cast<double>(in.samples.size());
      worst_dur = std::max(worst_dur, std::abs(out.samples.size() * rate - n_in) / n_in);
      worst_hz = std::max(worst_hz, std::abs(testing::dominant_frequency(out.samples, 16000) - freq));
    }
  }
  if (worst_dur > 0.02) o.fail("duration error " + std::to_string(worst_dur * 100) + "%");
  if (worst_hz > 5.0) o.fail("pitch error " + std::to_string(worst_hz) + " Hz");
  if (o.pass) {
    std::ostringstream d;
    d << "rates 0.6-1.0, 220-880 Hz: worst duration " << worst_dur * 100 << "%, worst pitch "
      << worst_hz << " Hz";
    o.detail = d.str();
  }
  return o;
}

Outcome stats_oracles() {
  Outcome o;
  std::size_t cases = 0;
  for (std::size_t n1 = 1; n1 <= 6; ++n1) {
    for (std::size_t n2 = 1; n2 <= 6; ++n2) {
      const std::size_t n = n1 + n2;
      // null distribution of U_a by enumerating rank subsets
      std::vector<double> counts(n1 * n2 + 1, 0.0);
      std::vector<std::uint32_t> masks;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        masks.push_back(mask);
        std::size_t rank_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (1u << i)) rank_sum += i + 1;
        }
        counts[rank_sum - n1 * (n1 + 1) / 2] += 1;
      }
      const double total = static_cast<double>(masks.size());
      for (auto mask : masks) {
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) ((mask & (1u << i)) ? a : b).push_back(i + 1.0);
        const auto u = static_cast<std::size_t>(std::llround(stats::u_statistic_a(a, b)));
        double le = 0, ge = 0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
          if (k <= u) le += counts[k];
          if (k >= u) ge += counts[k];
        }
        const double want = std::min(1.0, 2 * std::min(le, ge) / total);
        const auto got = stats::mann_whitney_u(a, b);
        const auto less = stats::mann_whitney_u(a, b, stats::Alternative::a_less);
        if (got.method != stats::Method::exact || std::abs(got.p_value - want) > 1e-12 ||
            std::abs(less.p_value - le / total) > 1e-12) {
          o.fail("n1=" + std::to_string(n1) + " n2=" + std::to_string(n2));
        }
        ++cases;
      }
    }
  }

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_g = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(2 + rng() % 15), b(2 + rng() % 15);
    for (auto& v : a) v = nd(rng);
    for (auto& v : b) v = nd(rng) + 0.5;
    const double n1 = a.size(), n2 = b.size();
    const double ma = stats::mean(a), mb = stats::mean(b);
    double ss = 0;
    for (double v : a) ss += (v - ma) * (v - ma);
    for (double v : b) ss += (v - mb) * (v - mb);
    const double direct = (ma - mb) / std::sqrt(ss / (n1 + n2 - 2)) * (1 - 3 / (4 * (n1 + n2) - 9));
    worst_g = std::max(worst_g, std::abs(stats::hedges_g(a, b) - direct));
  }
  if (worst_g > 1e-12) o.fail("Hedges' g off by " + std::to_string(worst_g));

  std::mt19937_64 gen(20220427);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<double> xn(500), xu(500);
  for (auto& v : xn) v = normal(gen);
  for (auto& v : xu) v = uniform(gen);
  const double pn = stats::ks_normality(xn).p_value;
  const double pu = stats::ks_normality(xu).p_value;
  if (!(pn > 0.05)) o.fail("KS rejected normal sample, p=" + std::to_string(pn));
  if (!(pu < 0.01)) o.fail("KS accepted uniform sample, p=" + std::to_string(pu));
  if (o.pass) {
    std::ostringstream d;
    d << cases << " exhaustive Mann-Whitney cases, g error " << worst_g << ", KS normal p=" << pn
      << ", uniform p=" << pu;
    o.detail = d.str();
  }
  return o;
}

Outcome table1_allocation() {
  Outcome o;
  const std::vector<double> scores{565, 635, 700, 755, 855, 550, 690, 755, 760, 815,
                                   590, 670, 730, 790, 845, 550, 670, 680, 785, 880};
  const auto t0 = Clock::now();
  const auto g = evalkit::allocate_groups(scores, 4);
  const double elapsed = seconds_since(t0);
  if (g.mean_spread() > 23.0) o.fail("spread " + std::to_string(g.mean_spread()));
  if (o.pass) {
    std::ostringstream d;
    d << "group means";
    for (double m : g.group_means) d << ' ' << m;
    d << ", spread " << g.mean_spread() << " (published 23), " << elapsed * 1e6 << " us";
    o.detail = d.str();
  }
  return o;
}

Outcome questionnaires() {
  Outcome o;
  auto sus = [](int odd, int even) {
    evalkit::SusResponse r;
    for (std::size_t i = 0; i < 10; ++i) r.items[i] = i % 2 == 0 ? odd : even;
    return evalkit::score_sus(r);
  };
  if (sus(5, 1) != 100.0) o.fail("SUS max");
  if (sus(3, 3) != 50.0) o.fail("SUS all-3s");
  if (sus(4, 2) != 75.0) o.fail("SUS 4/2");
  using evalkit::TlxResponse;
  if (evalkit::score_tlx(TlxResponse{{0, 0, 0, 0, 0, 0}, std::nullopt}) != 0.0) o.fail("TLX zero");
  if (evalkit::score_tlx(TlxResponse{{60, 20, 40, 30, 50, 10}, std::nullopt}) != 35.0) {
    o.fail("TLX raw");
  }
  if (evalkit::score_tlx(TlxResponse{{40, 40, 40, 40, 40, 40}, std::array<int, 6>{5, 4, 3, 2, 1, 0}}) !=
      40.0) {
    o.fail("TLX weighted");
  }
  if (o.pass) o.detail = "SUS 100/50/75, TLX 0/35/40 exact; all-3s SUS = 50.0";
  return o;
}

Outcome end_to_end() {
  Outcome o;
  session::SessionConfig cfg;
  cfg.timeline = session::demo_timeline();
  cfg.session_id = "acceptance";

  auto fold = [&](const std::function<bool(int)>& laughs) {
    int tenths = 10;
    double media = 0.0, viewed = 0.0;
    for (const auto& seg : cfg.timeline.segments) {
      viewed += (seg.end - media) / (tenths / 10.0);
      media = seg.end;
      tenths = std::clamp(tenths + (laughs(tenths) ? 1 : -1), 6, 10);
    }
    return viewed + (cfg.timeline.media_duration - media) / (tenths / 10.0);
  };

  struct Case {
    const char* learner;
    double oracle;
    double got = 0.0;
  };
  Case cases[] = {{"never", fold([](int) { return false; })},
                  {"threshold:0.8", fold([](int t) { return t <= 8; })},
                  {"always", fold([](int) { return true; })}};
  for (auto& c : cases) {
    const auto log = session::simulate(cfg, session::parse_learner(c.learner));
    c.got = log.viewing_time;
    if (std::abs(c.got - c.oracle) > 1e-9) {
      o.fail(std::string(c.learner) + " viewing time " + std::to_string(c.got) + " vs fold " +
             std::to_string(c.oracle));
    }
    std::stringstream buf;
    session::write_session_log(buf, log);
    const auto report = session::verify_replay(session::read_session_log(buf));
    if (!report.identical || report.commands != session::commands_in(log.events)) {
      o.fail(std::string(c.learner) + " replay diverged: " + report.detail);
    }
  }
  if (!(cases[0].got > cases[1].got && cases[1].got > cases[2].got)) o.fail("ordering");
  if (std::abs(cases[2].got - 600.0) > 1e-9) o.fail("always-laugh viewing time not 600 s");
  if (o.pass) {
    std::ostringstream d;
    d.precision(10);
    d << "never " << cases[0].got << " s > threshold(0.8) " << cases[1].got << " s > always "
      << cases[2].got << " s; replays identical";
    o.detail = d.str();
  }
  return o;
}

Outcome expression_fixture() {
  Outcome o;
  try {
    const auto series = load_au_csv(PACE_FIXTURES "/au_fixture.csv").series;
    const auto timeline = load_timeline(PACE_FIXTURES "/au_fixture_timeline.json");
    const auto labels = nlohmann::json::parse(read_file(PACE_FIXTURES "/au_fixture_labels.json"))
                            .at("understood")
                            .get<std::vector<bool>>();
    const auto split = expression::window_samples(series, timeline, labels, {});
    const auto mw = stats::mann_whitney_u(split.understood, split.not_understood,
                                          stats::Alternative::a_greater);
    const double g = stats::hedges_g(split.understood, split.not_understood);
    if (!(mw.p_value < 0.05)) o.fail("p = " + std::to_string(mw.p_value));
    if (o.pass) {
      std::ostringstream d;
      d << split.understood.size() << " vs " << split.not_understood.size()
        << " window samples, one-sided U=" << mw.statistic << " p=" << mw.p_value << " ("
        << stats::to_string(mw.method) << "), g=" << g;
      o.detail = d.str();
    }
  } catch (const std::exception& ex) {
    o.fail(ex.what());
  }
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"controller table and grid safety", controller_table},
      {"punchline detection corpus", detection_corpus},
      {"time-stretch duration and pitch laws", stretch_laws},
      {"statistics oracle equivalence", stats_oracles},
      {"Table 1 serpentine allocation", table1_allocation},
      {"SUS/TLX formulas", questionnaires},
      {"end-to-end simulation and replay", end_to_end},
      {"expression fixture Mann-Whitney", expression_fixture},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& ex) {
      o.fail(std::string("exception: ") + ex.what());
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
