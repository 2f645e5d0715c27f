// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/audio/wav.hpp"

#include "tff/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace tff::audio {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw FormatError(where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw FormatError(where + "truncated chunk at offset " + std::to_string(pos));
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError(where + "short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      const auto format = le16(f);
      const auto channels = le16(f + 2);
      const auto rate = le32(f + 4);
      const auto bits = le16(f + 14);
      if (format != 1) throw FormatError(where + "only PCM is supported (format tag " + std::to_string(format) + ")");
      if (channels != 1) throw FormatError(where + "expected mono, got " + std::to_string(channels) + " channels");
      if (rate != kSampleRate) throw FormatError(where + "expected 16000 Hz, got " + std::to_string(rate));
      if (bits != 16) throw FormatError(where + "expected 16-bit samples, got " + std::to_string(bits));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw FormatError(where + "data chunk before fmt chunk");
      const std::size_t n = len / 2;
      Waveform w = Waveform::zeros(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const auto s = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
        w.samples(static_cast<Eigen::Index>(i)) = static_cast<float>(s) / 32768.0f;
      }
      return w;
    }
    pos = body + len + (len & 1);
  }
  throw FormatError(where + "no data chunk");
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.size());
  std::string out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out += "RIFF";
  put32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, kSampleRate);
  put32(out, kSampleRate * 2);
  put16(out, 2);
  put16(out, 16);
  out += "data";
  put32(out, 2 * n);
  for (Eigen::Index i = 0; i < wave.size(); ++i) {
    const float s = std::clamp(wave.samples(i), -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lrint(std::min(32767.0f, s * 32768.0f)));
    put16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for " + path.string());
}

}  // namespace tff::audio
