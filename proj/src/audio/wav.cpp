// Copyright 2026 The beamrecall Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "beamrecall/audio.hpp"
#include "beamrecall/error.hpp"

namespace beamrecall::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const std::uint8_t* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v));
  out.push_back(std::uint8_t(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedWav, "malformed WAV: " + why);
}

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const std::uint8_t* p, const Format& fmt) {
  if (fmt.tag == kFormatFloat) {
    float f;
    std::uint32_t bits = le32(p);
    std::memcpy(&f, &bits, sizeof f);
    return f;
  }
  switch (fmt.bits) {
    case 16:
      return std::int16_t(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = std::int32_t(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return v / 8388608.0;
    }
    default:
      return std::int32_t(le32(p)) / 2147483648.0;
  }
}

}  // namespace

MultichannelAudio::MultichannelAudio(std::vector<Signal> channels,
                                     int sample_rate_hz)
    : channels_(std::move(channels)), sample_rate_hz_(sample_rate_hz) {
  if (channels_.empty())
    throw Error(ErrorCode::BadConfig, "audio needs at least one channel");
  if (sample_rate_hz_ <= 0)
    throw Error(ErrorCode::BadConfig, "sample rate must be positive");
  const auto n = channels_.front().size();
  for (const auto& ch : channels_)
    if (ch.size() != n)
      throw Error(ErrorCode::BadConfig, "channels must have equal length");
}

MultichannelAudio MultichannelAudio::mono(Signal samples, int sample_rate_hz) {
  std::vector<Signal> chans;
  chans.push_back(std::move(samples));
  return MultichannelAudio(std::move(chans), sample_rate_hz);
}

int bits_per_sample(WavEncoding encoding) {
  switch (encoding) {
    case WavEncoding::Pcm16: return 16;
    case WavEncoding::Pcm24: return 24;
    case WavEncoding::Pcm32: return 32;
    case WavEncoding::Float32: return 32;
  }
  return 0;
}

MultichannelAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) malformed("file shorter than RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    malformed("missing RIFF/WAVE tags");

  Format fmt;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || size > available) malformed("bad fmt chunk");
      const std::uint8_t* p = bytes.data() + body;
      fmt.tag = le16(p);
      fmt.channels = le16(p + 2);
      fmt.sample_rate = le32(p + 4);
      fmt.block_align = le16(p + 12);
      fmt.bits = le16(p + 14);
      if (fmt.tag == kFormatExtensible) {
        if (size < 40) malformed("short WAVE_FORMAT_EXTENSIBLE chunk");
        fmt.tag = le16(p + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (size > available) malformed("data chunk truncated");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    if (size > available) malformed("chunk overruns file");
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) malformed("missing fmt chunk");
  if (!data) malformed("missing data chunk");

  const bool int_ok = fmt.tag == kFormatPcm &&
                      (fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool float_ok = fmt.tag == kFormatFloat && fmt.bits == 32;
  if (!int_ok && !float_ok)
    throw Error(ErrorCode::UnsupportedEncoding,
                "unsupported WAV encoding: format tag " +
                    std::to_string(fmt.tag) + ", " + std::to_string(fmt.bits) +
                    " bits");
  if (fmt.channels == 0 || fmt.sample_rate == 0)
    malformed("zero channels or sample rate");
  const std::size_t bytes_per_sample = fmt.bits / 8;
  if (fmt.block_align != fmt.channels * bytes_per_sample)
    malformed("block alignment disagrees with channel count");
  if (data_size % fmt.block_align != 0) malformed("partial sample frame");

  const std::size_t frames = data_size / fmt.block_align;
  std::vector<Signal> channels(fmt.channels, Signal(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* frame = data + i * fmt.block_align;
    for (std::size_t c = 0; c < fmt.channels; ++c)
      channels[c][i] = decode_sample(frame + c * bytes_per_sample, fmt);
  }
  return MultichannelAudio(std::move(channels), int(fmt.sample_rate));
}

MultichannelAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const MultichannelAudio& audio,
                                     WavEncoding encoding,
                                     WavWriteReport* report) {
  const std::uint16_t channels = std::uint16_t(audio.num_channels());
  const std::uint16_t bits = std::uint16_t(bits_per_sample(encoding));
  const std::uint16_t block_align = std::uint16_t(channels * bits / 8);
  const std::size_t frames = audio.num_samples();
  const std::uint64_t data_size = std::uint64_t(frames) * block_align;
  if (data_size + 36 > 0xFFFFFFFFull)
    throw Error(ErrorCode::IoFailure, "audio too long for a RIFF file");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put32(out, std::uint32_t(36 + data_size));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm);
  put16(out, channels);
  put32(out, std::uint32_t(audio.sample_rate_hz()));
  put32(out, std::uint32_t(audio.sample_rate_hz()) * block_align);
  put16(out, block_align);
  put16(out, bits);
  put_tag(out, "data");
  put32(out, std::uint32_t(data_size));

  std::size_t clipped = 0;
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      double x = audio.channel(c)[i];
      if (x > 1.0 || x < -1.0) {
        ++clipped;
        x = std::clamp(x, -1.0, 1.0);
      }
      switch (encoding) {
        case WavEncoding::Float32: {
          const float f = float(x);
          std::uint32_t b;
          std::memcpy(&b, &f, sizeof b);
          put32(out, b);
          break;
        }
        case WavEncoding::Pcm16: {
          const auto v = std::int32_t(std::clamp(std::lround(x * 32768.0), -32768L, 32767L));
          put16(out, std::uint16_t(std::int16_t(v)));
          break;
        }
        case WavEncoding::Pcm24: {
          const auto v = std::int32_t(std::clamp(std::lround(x * 8388608.0), -8388608L, 8388607L));
          out.push_back(std::uint8_t(v));
          out.push_back(std::uint8_t(v >> 8));
          out.push_back(std::uint8_t(v >> 16));
          break;
        }
        case WavEncoding::Pcm32: {
          const auto v = std::clamp(std::llround(x * 2147483648.0),
                                    -2147483648LL, 2147483647LL);
          put32(out, std::uint32_t(std::int32_t(v)));
          break;
        }
      }
    }
  }
  if (report) report->clipped_samples = clipped;
  return out;
}

WavWriteReport write_wav(const MultichannelAudio& audio,
                         const std::filesystem::path& path,
                         WavEncoding encoding) {
  WavWriteReport report;
  const auto bytes = encode_wav(audio, encoding, &report);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "short write to " + path.string());
  return report;
}

MultichannelAudio slice_audio(const MultichannelAudio& audio, double start_s,
                              double end_s) {
  if (!(start_s >= 0.0) || !(end_s > start_s))
    throw Error(ErrorCode::EmptyInterval, "slice needs 0 <= start < end");
  const auto rate = double(audio.sample_rate_hz());
  const auto n = audio.num_samples();
  const auto begin = std::size_t(std::llround(start_s * rate));
  const auto end = std::min<std::size_t>(n, std::size_t(std::llround(end_s * rate)));
  if (begin >= end)
    throw Error(ErrorCode::EmptyInterval, "slice starts at or past the end of audio");

  std::vector<Signal> channels;
  channels.reserve(audio.num_channels());
  for (const auto& ch : audio.channels())
    channels.emplace_back(ch.begin() + std::ptrdiff_t(begin),
                          ch.begin() + std::ptrdiff_t(end));
  return MultichannelAudio(std::move(channels), audio.sample_rate_hz());
}

}  // namespace beamrecall::audio
