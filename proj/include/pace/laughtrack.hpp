#pragma once

// Laugh-track segmentation: short-time energy and spectral flatness scored
// per hop, hysteresis thresholding, then gap merging and a minimum length.

#include <vector>

#include "pace/audio.hpp"
#include "pace/core.hpp"

namespace pace::laughtrack {

using audio::AudioBuffer;

struct FrameFeatures {
  double rms = 0.0;
  double flatness = 0.0;  // geometric / arithmetic mean of |X(k)|, DC excluded
  double zcr = 0.0;       // sign changes within the frame
};

struct FeatureSeries {
  double hop = 0.0;        // seconds between frame starts
  double frame_len = 0.0;  // seconds covered by each frame
  std::vector<FrameFeatures> frames;

  // Media time of the centre of frame i.
  double centre(std::size_t i) const { return static_cast<double>(i) * hop + frame_len / 2.0; }
};

struct DetectorConfig {
  double frame_len = 0.050;
  double hop = 0.010;
  double on_threshold = 0.6;
  double off_threshold = 0.4;
  double min_duration = 0.5;
  double merge_gap = 0.4;
  double rms_weight = 0.5;
  double flatness_weight = 0.5;
};

void validate(const DetectorConfig& cfg);

FeatureSeries extract_features(const AudioBuffer& audio, const DetectorConfig& cfg);

// Per-frame score in [0, 1]: w_rms * min(rms / p95(rms), 1) + w_flat * flatness.
std::vector<double> frame_scores(const FeatureSeries& features, const DetectorConfig& cfg);

std::vector<PunchlineSegment> merge_segments(const std::vector<PunchlineSegment>& segments,
                                             double merge_gap, double min_duration);

Timeline detect_punchlines(const FeatureSeries& features, const DetectorConfig& cfg,
                           double media_duration);

// decode -> features -> detection in one call.
Timeline detect_punchlines(const AudioBuffer& audio, const DetectorConfig& cfg = {});

}  // namespace pace::laughtrack
