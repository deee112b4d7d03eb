#pragma once

#include "pace/audio.hpp"

namespace pace::timestretch {

using audio::AudioBuffer;

struct WsolaParams {
  double window = 0.050;         // grain length, seconds
  double overlap = 0.5;          // fraction of a grain shared with the next one
  double search_radius = 0.010;  // seconds either side of the nominal position
};

void validate(const WsolaParams& params);

// Steady-pitch rate change. Output length is round(len(in) / rate); rate must
// lie in the controller's range [0.6, 1.0].
AudioBuffer stretch(const AudioBuffer& audio, double rate, const WsolaParams& params = {});

// Same algorithm without the controller clamp; accepts rate in [0.25, 4].
AudioBuffer stretch_unbounded(const AudioBuffer& audio, double rate,
                              const WsolaParams& params = {});

}  // namespace pace::timestretch
