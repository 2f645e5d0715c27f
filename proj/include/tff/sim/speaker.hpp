// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Source-filter voice synthesizer that stands in for a real speech corpus.
// A speaker is a fixed set of voice parameters; utterances are random
// syllable sequences rendered with those parameters.

#pragma once

#include "tff/audio/dsp.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace tff::sim {

struct Formant {
  double freq = 0;       // Hz
  double bandwidth = 0;  // Hz
};

struct SpeakerProfile {
  std::string speaker_id;
  std::uint64_t seed = 0;
  double f0_mean = 0;  // Hz, in [90, 300]
  std::array<Formant, 3> formants{};
  double jitter = 0;          // relative std of each glottal period
  double vibrato_rate = 0;    // Hz
  double vibrato_depth = 0;   // relative f0 excursion
  double tilt = 0;            // one-pole glottal low-pass coefficient in [0, 1)
  double breathiness = 0;     // aspiration noise level relative to the pulse train
  double syllable_rate = 0;   // syllables per second
};

/// Deterministic voice from a seed. Formants are strictly increasing and
/// below Nyquist; f0_mean lies in [90, 300] Hz.
SpeakerProfile synth_speaker(std::uint64_t seed);

/// Speech-like utterance of exactly round(duration_s * 16000) samples,
/// peak-normalized to 0.9. Requires duration_s >= 1.
audio::Waveform synth_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t seed);

/// Continuously voiced vowel on the speaker's base formants with strongly
/// jittered pulse periods, peak-normalized to 0.9. Its long-term spectrum
/// follows the vocal-tract envelope, which makes formant placement checkable.
audio::Waveform synth_vowel(const SpeakerProfile& profile, std::int64_t samples, std::uint64_t seed);

}  // namespace tff::sim
