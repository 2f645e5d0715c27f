// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Room impulse responses, non-speech noise, and mixtures of the form
//   x_test = x_target + sum_j x_j + v.

#pragma once

#include "tff/audio/dsp.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tff::sim {

inline constexpr double kRirLengthSeconds = 0.3;
inline constexpr double kMinT60 = 0.2;
inline constexpr double kMaxT60 = 0.8;

/// Exponentially decaying Gaussian tail with a unit direct path:
///   taps[n] = s * g[n] * exp(-6.9077 n / (t60 * fs)),  taps[0] = 1.
/// The tail scale s gives the reverberant tail the same energy as the direct
/// path. Throws for t60 outside [0.2, 0.8] s.
audio::Rir synth_rir(std::uint64_t seed, double t60_s);

enum class NoiseKind { White, Pink, BandBursts };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Synthetic non-speech noise; never silent.
audio::Waveform synth_noise(NoiseKind kind, std::int64_t samples, std::uint64_t seed);

/// Reference string for a noise clip, resolvable by `resolve_noise_ref`.
std::string noise_ref(NoiseKind kind, std::uint64_t seed);
bool is_noise_ref(const std::string& ref);
audio::Waveform resolve_noise_ref(const std::string& ref, std::int64_t samples);

/// Declarative description of one mixture.
struct MixSpec {
  std::string target_utt;
  std::vector<std::string> interferers;
  std::optional<std::string> noise;
  double sir_db = 0;
  double snr_db = 0;
  bool reverb_target = false;
  bool reverb_interf = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The mixture and its scaled stems; mix == target + sum(interferers) + noise.
struct Mixture {
  audio::Waveform mix;
  audio::Waveform target;
  std::vector<audio::Waveform> interferers;
  std::optional<audio::Waveform> noise;
};

using Resolver = std::function<audio::Waveform(const std::string& ref)>;

/// Builds the mixture. Each interferer is scaled so that its RMS ratio to the
/// (possibly reverberated) target is sir_db, measured after its own reverb;
/// noise likewise at snr_db. The sum is not renormalized.
Mixture make_mixture(const MixSpec& spec, const Resolver& resolve);

}  // namespace tff::sim
