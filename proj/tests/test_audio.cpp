#include <doctest.h>

#include <cstring>

#include "pace/audio.hpp"
#include "pace/error.hpp"
#include "support.hpp"

using namespace pace;
using pace::audio::AudioBuffer;

namespace {

void put16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

void put32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

// Hand-assembled RIFF header, independent of encode_wav.
std::vector<std::uint8_t> raw_wav(std::uint16_t format, std::uint16_t channels, std::uint32_t sr,
                                  std::uint16_t bits, const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> b;
  const char riff[] = "RIFF", wave[] = "WAVE", fmt[] = "fmt ", dat[] = "data";
  b.insert(b.end(), riff, riff + 4);
  put32(b, static_cast<std::uint32_t>(36 + data.size()));
  b.insert(b.end(), wave, wave + 4);
  b.insert(b.end(), fmt, fmt + 4);
  put32(b, 16);
  put16(b, format);
  put16(b, channels);
  put32(b, sr);
  put32(b, sr * channels * bits / 8);
  put16(b, static_cast<std::uint16_t>(channels * bits / 8));
  put16(b, bits);
  b.insert(b.end(), dat, dat + 4);
  put32(b, static_cast<std::uint32_t>(data.size()));
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    audio::decode_wav(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected pace::Error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("one second of silence decodes to zeros") {
  const auto bytes = raw_wav(1, 1, 8000, 16, std::vector<std::uint8_t>(16000, 0));
  const auto a = audio::decode_wav(bytes);
  CHECK(a.sample_rate == 8000);
  REQUIRE(a.samples.size() == 8000);
  for (double s : a.samples) CHECK(s == 0.0);
}

TEST_CASE("stereo with opposite channels downmixes to zero") {
  std::vector<std::int16_t> frames;
  for (int i = 0; i < 1000; ++i) {
    frames.push_back(16384);
    frames.push_back(-16384);
  }
  const auto a = audio::decode_wav(audio::encode_wav_pcm16(frames, 2, 16000));
  REQUIRE(a.samples.size() == 1000);
  for (double s : a.samples) CHECK(s == 0.0);
}

TEST_CASE("stereo downmix averages channels") {
  std::vector<std::int16_t> frames{16384, 0, -8192, -8192};
  const auto a = audio::decode_wav(audio::encode_wav_pcm16(frames, 2, 8000));
  REQUIRE(a.samples.size() == 2);
  CHECK(a.samples[0] == doctest::Approx(0.25));
  CHECK(a.samples[1] == doctest::Approx(-0.25));
}

TEST_CASE("mu-law is rejected") {
  CHECK(decode_error(raw_wav(7, 1, 8000, 8, std::vector<std::uint8_t>(100, 0xff))) ==
        ErrorCode::unsupported_format);
}

TEST_CASE("other unsupported layouts") {
  CHECK(decode_error(raw_wav(1, 1, 8000, 8, std::vector<std::uint8_t>(100, 0x80))) ==
        ErrorCode::unsupported_format);
  CHECK(decode_error(raw_wav(3, 1, 8000, 32, std::vector<std::uint8_t>(100, 0))) ==
        ErrorCode::unsupported_format);
  CHECK(decode_error(raw_wav(1, 3, 8000, 16, std::vector<std::uint8_t>(120, 0))) ==
        ErrorCode::unsupported_format);
  auto junk = raw_wav(1, 1, 8000, 16, std::vector<std::uint8_t>(100, 0));
  std::copy_n("JUNK", 4, junk.begin());
  CHECK(decode_error(junk) == ErrorCode::unsupported_format);
  CHECK(decode_error(std::vector<std::uint8_t>{'R', 'I', 'F', 'F'}) == ErrorCode::truncated);
}

TEST_CASE("truncated files") {
  auto bytes = raw_wav(1, 1, 8000, 16, std::vector<std::uint8_t>(200, 0));
  CHECK(decode_error(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20)) ==
        ErrorCode::truncated);
  // data chunk claims more bytes than the file holds
  bytes.resize(bytes.size() - 50);
  CHECK(decode_error(bytes) == ErrorCode::truncated);
}

TEST_CASE("encode/decode round-trip within quantisation") {
  const auto src = testing::sine(440.0, 0.25, 16000, 0.8);
  const auto back = audio::decode_wav(audio::encode_wav(src));
  CHECK(back.sample_rate == 16000);
  REQUIRE(back.samples.size() == src.samples.size());
  for (std::size_t i = 0; i < src.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - src.samples[i]) <= 1.0 / 32768.0 + 1e-12);
  }
}

TEST_CASE("encode clips out-of-range samples") {
  AudioBuffer a{8000, {2.0, -2.0, 0.5}};
  const auto back = audio::decode_wav(audio::encode_wav(a));
  CHECK(back.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(back.samples[1] == -1.0);
}

TEST_CASE("file round-trip and missing file") {
  testing::TempDir dir;
  const auto src = testing::sine(220.0, 0.1, 8000, 0.5);
  audio::save_wav(dir / "a.wav", src);
  CHECK(audio::load_wav(dir / "a.wav").samples.size() == src.samples.size());
  CHECK_THROWS_AS(audio::load_wav(dir / "missing.wav"), Error);
}
