#include "pace/laughtrack.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "pace/fft.hpp"

namespace pace::laughtrack {

namespace {

// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::size_t to_samples(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

}  // namespace

void validate(const DetectorConfig& cfg) {
  auto bad = [](const char* what) { throw Error(ErrorCode::invalid_argument, what); };
  if (!(cfg.hop > 0.0) || cfg.hop > cfg.frame_len) bad("detector requires 0 < hop <= frame_len");
  if (cfg.off_threshold > cfg.on_threshold) bad("detector requires off_threshold <= on_threshold");
  if (!(cfg.min_duration > 0.0)) bad("detector requires min_duration > 0");
  if (cfg.merge_gap < 0.0) bad("detector requires merge_gap >= 0");
  if (cfg.rms_weight < 0.0 || cfg.flatness_weight < 0.0) bad("detector weights must be >= 0");
}

FeatureSeries extract_features(const AudioBuffer& audio, const DetectorConfig& cfg) {
  validate(cfg);
  audio::validate(audio);
  const std::size_t frame = std::max<std::size_t>(1, to_samples(cfg.frame_len, audio.sample_rate));
  const std::size_t hop = std::max<std::size_t>(1, to_samples(cfg.hop, audio.sample_rate));
  const auto& x = audio.samples;
  if (x.size() < frame) {
    throw Error(ErrorCode::too_short, "audio has " + std::to_string(x.size()) +
                                          " samples, one frame needs " + std::to_string(frame));
  }

  FeatureSeries out;
  out.hop = static_cast<double>(hop) / audio.sample_rate;
  out.frame_len = static_cast<double>(frame) / audio.sample_rate;

  const std::size_t nfft = dsp::next_pow2(frame);
  const auto window = dsp::hann(frame);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> mags(nfft / 2);

  const std::size_t count = 1 + (x.size() - frame) / hop;
  out.frames.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    const double* s = x.data() + f * hop;
    FrameFeatures ff;

    double energy = 0.0;
    int crossings = 0;
    for (std::size_t i = 0; i < frame; ++i) {
      energy += s[i] * s[i];
      if (i > 0 && ((s[i - 1] < 0.0) != (s[i] < 0.0))) ++crossings;
    }
    ff.rms = std::sqrt(energy / static_cast<double>(frame));
    ff.zcr = crossings;

    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    for (std::size_t i = 0; i < frame; ++i) buf[i] = s[i] * window[i];
    dsp::fft(buf);
    double arith = 0.0;
    double log_sum = 0.0;
    bool any_zero = false;
    for (std::size_t k = 1; k <= nfft / 2; ++k) {
      const double m = std::abs(buf[k]);
      mags[k - 1] = m;
      arith += m;
      if (m > 0.0) {
        log_sum += std::log(m);
      } else {
        any_zero = true;
      }
    }
    const double bins = static_cast<double>(nfft / 2);
    arith /= bins;
    if (arith > 1e-12 && !any_zero) {
      ff.flatness = std::clamp(std::exp(log_sum / bins) / arith, 0.0, 1.0);
    }
    out.frames.push_back(ff);
  }
  return out;
}

std::vector<double> frame_scores(const FeatureSeries& features, const DetectorConfig& cfg) {
  std::vector<double> rms;
  rms.reserve(features.frames.size());
  for (const auto& f : features.frames) rms.push_back(f.rms);
  const double ref = percentile(rms, 0.95);

  std::vector<double> scores;
  scores.reserve(features.frames.size());
  for (const auto& f : features.frames) {
    const double norm = ref > 1e-9 ? std::min(f.rms / ref, 1.0) : 0.0;
    scores.push_back(cfg.rms_weight * norm + cfg.flatness_weight * f.flatness);
  }
  return scores;
}

std::vector<PunchlineSegment> merge_segments(const std::vector<PunchlineSegment>& segments,
                                             double merge_gap, double min_duration) {
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].start < segments[i - 1].end) {
      throw Error(ErrorCode::unsorted, "merge_segments requires sorted, non-overlapping input");
    }
  }
  std::vector<PunchlineSegment> merged;
  for (const auto& s : segments) {
    if (!merged.empty() && s.start - merged.back().end < merge_gap) {
      merged.back().end = std::max(merged.back().end, s.end);
    } else {
      merged.push_back(s);
    }
  }
  std::erase_if(merged, [&](const PunchlineSegment& s) { return s.length() < min_duration; });
  return merged;
}

Timeline detect_punchlines(const FeatureSeries& features, const DetectorConfig& cfg,
                           double media_duration) {
  validate(cfg);
  if (features.frames.empty()) {
    throw Error(ErrorCode::invalid_argument, "detect_punchlines needs at least one frame");
  }
  const auto scores = frame_scores(features, cfg);
  const double half_hop = features.hop / 2.0;

  std::vector<PunchlineSegment> raw;
  bool active = false;
  double opened = 0.0;
  auto close = [&](double at) {
    PunchlineSegment seg{std::max(0.0, opened), std::min(at, media_duration)};
    if (seg.start < seg.end) raw.push_back(seg);
    active = false;
  };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double boundary = features.centre(i) - half_hop;
    if (!active && scores[i] >= cfg.on_threshold) {
      active = true;
      opened = boundary;
    } else if (active && scores[i] < cfg.off_threshold) {
      close(boundary);
    }
  }
  if (active) close(features.centre(scores.size() - 1) + half_hop);

  Timeline timeline{media_duration, merge_segments(raw, cfg.merge_gap, cfg.min_duration)};
  return validate_timeline(timeline);
}

Timeline detect_punchlines(const AudioBuffer& audio, const DetectorConfig& cfg) {
  return detect_punchlines(extract_features(audio, cfg), cfg, audio.duration());
}

}  // namespace pace::laughtrack
