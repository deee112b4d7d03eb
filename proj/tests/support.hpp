#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <unistd.h>
#include <vector>

#include "pace/audio.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

inline pace::audio::AudioBuffer sine(double freq, double seconds, double sr, double amp = 1.0) {
  pace::audio::AudioBuffer a;
  a.sample_rate = sr;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sr));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amp * std::sin(2 * kPi * freq * i / sr);
  return a;
}

inline std::vector<double> white_noise(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

// Tone background with uniform-noise bursts written over [start, end) spans.
inline pace::audio::AudioBuffer tone_with_bursts(double seconds, double sr,
                                                 const std::vector<std::pair<double, double>>& bursts,
                                                 std::uint64_t seed, double tone_amp = 0.1,
                                                 double burst_amp = 0.5, double tone_hz = 440.0) {
  auto a = sine(tone_hz, seconds, sr, tone_amp);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-burst_amp, burst_amp);
  for (auto [s, e] : bursts) {
    const auto i0 = static_cast<std::size_t>(std::llround(s * sr));
    const auto i1 = std::min(a.samples.size(), static_cast<std::size_t>(std::llround(e * sr)));
    for (std::size_t i = i0; i < i1; ++i) a.samples[i] = u(rng);
  }
  return a;
}

// Textbook O(n^2) DFT magnitudes, bins 0..n/2.
inline std::vector<double> dft_magnitudes(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mags(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc{};
    for (std::size_t t = 0; t < n; ++t) {
      acc += x[t] * std::polar(1.0, -2 * kPi * static_cast<double>(k * t % n) / n);
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

// Frequency of the strongest bin of a direct DFT over a centred slice, with
// parabolic interpolation between neighbouring bins.
inline double dominant_frequency(const std::vector<double>& x, double sr, std::size_t len = 4000) {
  len = std::min(len, x.size());
  const std::size_t off = (x.size() - len) / 2;
  std::vector<double> slice(x.begin() + off, x.begin() + off + len);
  for (std::size_t i = 0; i < len; ++i) slice[i] *= 0.5 - 0.5 * std::cos(2 * kPi * i / len);
  const auto mags = dft_magnitudes(slice);
  std::size_t best = 1;
  for (std::size_t k = 1; k < mags.size(); ++k) {
    if (mags[k] > mags[best]) best = k;
  }
  double delta = 0.0;
  if (best > 0 && best + 1 < mags.size()) {
    const double l = std::log(mags[best - 1] + 1e-300), c = std::log(mags[best] + 1e-300),
                 r = std::log(mags[best + 1] + 1e-300);
    const double denom = l - 2 * c + r;
    if (denom != 0.0) delta = 0.5 * (l - r) / denom;
  }
  return (static_cast<double>(best) + delta) * sr / static_cast<double>(len);
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pace-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
