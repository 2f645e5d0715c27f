// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/audio/dsp.hpp"

#include <filesystem>

namespace tff::audio {

/// Reads a mono 16-bit PCM little-endian WAV at 16 kHz. Other formats, rates
/// or channel counts are rejected with FormatError; no resampling.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM; samples are clipped to [-1, 1] before quantization.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace tff::audio
