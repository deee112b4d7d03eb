#include "pace/timestretch.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pace/error.hpp"

namespace pace::timestretch {

namespace {

constexpr double kMinRate = 0.6;
constexpr double kMaxRate = 1.0;

// Hann sampled at half-sample offsets: never exactly zero, and two copies
// shifted by half a window sum to one.
std::vector<double> grain_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) /
                                static_cast<double>(n));
  }
  return w;
}

class PaddedInput {
 public:
  explicit PaddedInput(const std::vector<double>& x) : x_(x) {}

  double operator[](std::ptrdiff_t i) const {
    return (i < 0 || i >= static_cast<std::ptrdiff_t>(x_.size())) ? 0.0
                                                                   : x_[static_cast<std::size_t>(i)];
  }

 private:
  const std::vector<double>& x_;
};

double normalized_xcorr(const PaddedInput& x, std::ptrdiff_t a, std::ptrdiff_t b,
                        std::ptrdiff_t len, double b_energy) {
  double dot = 0.0;
  double a_energy = 0.0;
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    const double xa = x[a + i];
    dot += xa * x[b + i];
    a_energy += xa * xa;
  }
  const double denom = std::sqrt(a_energy * b_energy);
  return denom > 1e-12 ? dot / denom : 0.0;
}

AudioBuffer run_wsola(const AudioBuffer& audio, double rate, const WsolaParams& params) {
  const double sr = audio.sample_rate;
  const auto window = static_cast<std::ptrdiff_t>(std::llround(params.window * sr));
  const auto synth_hop =
      std::max<std::ptrdiff_t>(1, std::llround(static_cast<double>(window) * (1.0 - params.overlap)));
  const auto radius = static_cast<std::ptrdiff_t>(std::llround(params.search_radius * sr));
  const std::ptrdiff_t overlap_len = std::max<std::ptrdiff_t>(1, window - synth_hop);
  const auto n_in = static_cast<std::ptrdiff_t>(audio.samples.size());
  if (window < 2 || n_in <= window) {
    throw Error(ErrorCode::too_short, "audio must be longer than one window (" +
                                          std::to_string(window) + " samples)");
  }

  const auto n_out = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(n_in) / rate));
  const auto w = grain_window(static_cast<std::size_t>(window));
  const PaddedInput x(audio.samples);

  std::vector<double> acc(static_cast<std::size_t>(n_out), 0.0);
  std::vector<double> weight(static_cast<std::size_t>(n_out), 0.0);

  std::ptrdiff_t prev = 0;
  for (std::ptrdiff_t k = 0;; ++k) {
    const std::ptrdiff_t out_pos = k * synth_hop;
    if (out_pos >= n_out) break;
    std::ptrdiff_t pos = 0;
    if (k > 0) {
      const auto nominal =
          static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(out_pos) * rate));
      // The previous grain's tail continues at prev + synth_hop; pick the
      // candidate near `nominal` that lines up with it best.
      const std::ptrdiff_t tail = prev + synth_hop;
      double tail_energy = 0.0;
      for (std::ptrdiff_t i = 0; i < overlap_len; ++i) tail_energy += x[tail + i] * x[tail + i];

      pos = std::max<std::ptrdiff_t>(0, nominal);
      double best = -2.0;
      for (std::ptrdiff_t step = 0; step <= 2 * radius; ++step) {
        // 0, -1, +1, -2, +2, ... so ties resolve toward the nominal position
        const std::ptrdiff_t delta = (step % 2 == 0) ? step / 2 : -(step + 1) / 2;
        const std::ptrdiff_t cand = nominal + delta;
        if (cand < 0 || cand >= n_in) continue;
        const double c = normalized_xcorr(x, cand, tail, overlap_len, tail_energy);
        if (c > best) {
          best = c;
          pos = cand;
        }
      }
    }
    for (std::ptrdiff_t i = 0; i < window && out_pos + i < n_out; ++i) {
      const auto o = static_cast<std::size_t>(out_pos + i);
      acc[o] += w[static_cast<std::size_t>(i)] * x[pos + i];
      weight[o] += w[static_cast<std::size_t>(i)];
    }
    prev = pos;
  }

  AudioBuffer out;
  out.sample_rate = sr;
  out.samples.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.samples[i] = weight[i] > 1e-12 ? acc[i] / weight[i] : 0.0;
  }
  return out;
}

}  // namespace

void validate(const WsolaParams& params) {
  if (!(params.window > 0.0)) throw Error(ErrorCode::invalid_argument, "window must be > 0");
  if (!(params.overlap > 0.0 && params.overlap < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "overlap must lie in (0, 1)");
  }
  if (params.search_radius < 0.0 || params.search_radius >= params.window) {
    throw Error(ErrorCode::invalid_argument, "search_radius must lie in [0, window)");
  }
}

AudioBuffer stretch(const AudioBuffer& audio, double rate, const WsolaParams& params) {
  if (!(rate >= kMinRate - 1e-9 && rate <= kMaxRate + 1e-9)) {
    throw Error(ErrorCode::out_of_bounds,
                "rate " + std::to_string(rate) + " outside [0.6, 1.0]");
  }
  return stretch_unbounded(audio, rate, params);
}

AudioBuffer stretch_unbounded(const AudioBuffer& audio, double rate, const WsolaParams& params) {
  validate(params);
  audio::validate(audio);
  if (!(rate >= 0.25 && rate <= 4.0)) {
    throw Error(ErrorCode::out_of_bounds, "rate " + std::to_string(rate) + " outside [0.25, 4]");
  }
  return run_wsola(audio, rate, params);
}

}  // namespace pace::timestretch
