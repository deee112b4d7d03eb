#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace pace::audio {

// Mono float PCM, samples nominally in [-1, 1].
struct AudioBuffer {
  double sample_rate = 0.0;
  std::vector<double> samples;

  double duration() const {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// RIFF/WAVE, PCM 16-bit, mono or stereo. Stereo is averaged per frame.
// Throws Error{unsupported_format} or Error{truncated}.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

// Mono PCM16 encoding; samples outside [-1, 1] are clipped.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);

// Interleaved PCM16 writer for arbitrary channel counts (tests build stereo
// and odd files with it).
std::vector<std::uint8_t> encode_wav_pcm16(std::span<const std::int16_t> interleaved,
                                           std::uint16_t channels, std::uint32_t sample_rate);

AudioBuffer load_wav(const std::filesystem::path& path);
void save_wav(const std::filesystem::path& path, const AudioBuffer& audio);

void validate(const AudioBuffer& audio);

}  // namespace pace::audio
