// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/audio/dsp.hpp"
#include "tff/sim/mixture.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace tff::sim {

enum class Variant { Raw, Reverb, Noisy, Interfered };

inline constexpr Variant kAllVariants[] = {Variant::Raw, Variant::Reverb, Variant::Noisy, Variant::Interfered};

std::string to_string(Variant v);

/// A clean utterance; the waveform is borrowed.
struct CleanSample {
  std::string utt_id;
  std::string speaker_id;
  const audio::Waveform* wave = nullptr;
};

struct AugmentPolicy {
  double min_ratio_db = 0.0;
  double max_ratio_db = 15.0;
  double interference_reverb_prob = 0.2;
};

struct AugmentedSample {
  Variant variant = Variant::Raw;
  std::string utt_id;
  std::string speaker_id;
  std::string interferer_speaker;  // empty unless Interfered
  MixSpec spec;
  Mixture mixture;

  const audio::Waveform& wave() const { return mixture.mix; }
};

/// One augmented copy of `sample`. An interfering speaker is drawn from
/// `pool` among those whose speaker is neither the sample's nor listed in
/// `exclude_speakers`.
AugmentedSample augment_sample(const CleanSample& sample, Variant variant, std::span<const CleanSample> pool,
                               const std::set<std::string>& exclude_speakers, std::uint64_t seed,
                               const AugmentPolicy& policy = {});

/// Every sample of the batch in all four variants, ordered sample-major
/// (raw, reverb, noisy, interfered for sample 0, then sample 1, ...).
/// Interferers come from the batch itself, so it needs at least two samples
/// and two distinct speakers.
std::vector<AugmentedSample> augment_batch(std::span<const CleanSample> batch, std::uint64_t seed,
                                           const AugmentPolicy& policy = {});

}  // namespace tff::sim
