#include "pace/audio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "pace/core.hpp"

namespace pace::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char (&tag)[5]) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at),
                    [](char c, std::uint8_t u) { return static_cast<std::uint8_t>(c) == u; });
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw Error(ErrorCode::truncated, "WAV shorter than RIFF header");
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::unsupported_format, "not a RIFF/WAVE container");
  }

  std::optional<Format> fmt;
  std::size_t pos = 12;
  while (true) {
    if (pos + 8 > bytes.size()) {
      throw Error(ErrorCode::truncated, fmt ? "no data chunk" : "no fmt chunk");
    }
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;

    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16 || body + 16 > bytes.size()) throw Error(ErrorCode::truncated, "short fmt chunk");
      Format f;
      f.tag = read_u16(bytes, body);
      f.channels = read_u16(bytes, body + 2);
      f.sample_rate = read_u32(bytes, body + 4);
      f.block_align = read_u16(bytes, body + 12);
      f.bits = read_u16(bytes, body + 14);
      if (f.tag == kFormatExtensible) {
        // WAVEFORMATEXTENSIBLE: the sub-format GUID starts with the real tag.
        if (size < 40 || body + 26 > bytes.size()) {
          throw Error(ErrorCode::truncated, "short extensible fmt chunk");
        }
        f.tag = read_u16(bytes, body + 24);
      }
      if (f.tag != kFormatPcm) {
        throw Error(ErrorCode::unsupported_format,
                    "format tag " + std::to_string(f.tag) + " is not PCM");
      }
      if (f.bits != 16) {
        throw Error(ErrorCode::unsupported_format,
                    std::to_string(f.bits) + "-bit PCM is not supported");
      }
      if (f.channels != 1 && f.channels != 2) {
        throw Error(ErrorCode::unsupported_format,
                    std::to_string(f.channels) + " channels is not supported");
      }
      if (f.sample_rate == 0 || f.block_align != 2 * f.channels) {
        throw Error(ErrorCode::unsupported_format, "inconsistent fmt chunk");
      }
      fmt = f;
    } else if (tag_is(bytes, pos, "data")) {
      if (!fmt) throw Error(ErrorCode::unsupported_format, "data chunk before fmt chunk");
      if (body + size > bytes.size()) {
        throw Error(ErrorCode::truncated, "data chunk declares " + std::to_string(size) +
                                              " bytes, " + std::to_string(bytes.size() - body) +
                                              " present");
      }
      const std::size_t frames = size / fmt->block_align;
      AudioBuffer out;
      out.sample_rate = fmt->sample_rate;
      out.samples.resize(frames);
      for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < fmt->channels; ++c) {
          auto raw = static_cast<std::int16_t>(read_u16(bytes, body + i * fmt->block_align + 2 * c));
          acc += raw / 32768.0;
        }
        out.samples[i] = acc / fmt->channels;
      }
      return out;
    }
    // chunks are word aligned
    pos = body + size + (size & 1u);
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(std::span<const std::int16_t> interleaved,
                                           std::uint16_t channels, std::uint32_t sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(interleaved.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, channels);
  put_u32(out, sample_rate);
  put_u32(out, sample_rate * channels * 2);
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : interleaved) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
  std::vector<std::int16_t> pcm(audio.samples.size());
  std::transform(audio.samples.begin(), audio.samples.end(), pcm.begin(), [](double s) {
    double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
  });
  return encode_wav_pcm16(pcm, 1, static_cast<std::uint32_t>(std::lround(audio.sample_rate)));
}

AudioBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void save_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  auto bytes = encode_wav(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void validate(const AudioBuffer& audio) {
  if (!(audio.sample_rate > 0.0) || !std::isfinite(audio.sample_rate)) {
    throw Error(ErrorCode::invalid_argument, "sample_rate must be > 0");
  }
  for (double s : audio.samples) {
    if (!std::isfinite(s)) throw Error(ErrorCode::invalid_argument, "non-finite sample");
  }
}

}  // namespace pace::audio
