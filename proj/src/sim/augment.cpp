// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/sim/augment.hpp"

#include "tff/sim/random.hpp"

#include <stdexcept>

namespace tff::sim {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Raw: return "raw";
    case Variant::Reverb: return "reverb";
    case Variant::Noisy: return "noisy";
    case Variant::Interfered: return "interfered";
  }
  return "raw";
}

AugmentedSample augment_sample(const CleanSample& sample, Variant variant, std::span<const CleanSample> pool,
                               const std::set<std::string>& exclude_speakers, std::uint64_t seed,
                               const AugmentPolicy& policy) {
  if (sample.wave == nullptr) throw std::invalid_argument("augment_sample: missing waveform for '" + sample.utt_id + "'");
  Rng rng(seed);
  AugmentedSample out;
  out.variant = variant;
  out.utt_id = sample.utt_id;
  out.speaker_id = sample.speaker_id;

  MixSpec& spec = out.spec;
  spec.target_utt = sample.utt_id;
  spec.seed = rng();
  const CleanSample* interferer = nullptr;
  switch (variant) {
    case Variant::Raw:
      break;
    case Variant::Reverb:
      spec.reverb_target = true;
      break;
    case Variant::Noisy: {
      const auto kind = static_cast<NoiseKind>(uniform_index(rng, 3));
      spec.noise = noise_ref(kind, rng());
      spec.snr_db = uniform(rng, policy.min_ratio_db, policy.max_ratio_db);
      spec.reverb_interf = uniform(rng, 0.0, 1.0) < policy.interference_reverb_prob;
      break;
    }
    case Variant::Interfered: {
      std::vector<const CleanSample*> candidates;
      for (const auto& c : pool)
        if (c.speaker_id != sample.speaker_id && exclude_speakers.count(c.speaker_id) == 0) candidates.push_back(&c);
      if (candidates.empty())
        throw std::invalid_argument("augment_sample: no interfering speaker available for '" + sample.utt_id + "'");
      interferer = candidates[uniform_index(rng, candidates.size())];
      spec.interferers = {interferer->utt_id};
      spec.sir_db = uniform(rng, policy.min_ratio_db, policy.max_ratio_db);
      spec.reverb_interf = uniform(rng, 0.0, 1.0) < policy.interference_reverb_prob;
      out.interferer_speaker = interferer->speaker_id;
      break;
    }
  }

  out.mixture = make_mixture(spec, [&](const std::string& ref) -> audio::Waveform {
    if (ref == sample.utt_id) return *sample.wave;
    if (interferer != nullptr && ref == interferer->utt_id) return *interferer->wave;
    throw std::invalid_argument("augment_sample: unresolved reference '" + ref + "'");
  });
  return out;
}

std::vector<AugmentedSample> augment_batch(std::span<const CleanSample> batch, std::uint64_t seed,
                                           const AugmentPolicy& policy) {
  if (batch.size() < 2) throw std::invalid_argument("augment_batch: need at least two samples to draw interferers");
  std::vector<AugmentedSample> out;
  out.reserve(4 * batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    for (Variant v : kAllVariants)
      out.push_back(augment_sample(batch[i], v, batch, {},
                                   derive_seed(seed, {tag("augment"), i, static_cast<std::uint64_t>(v)}), policy));
  return out;
}

}  // namespace tff::sim
