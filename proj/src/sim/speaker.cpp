// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/sim/speaker.hpp"

#include "tff/sim/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace tff::sim {

namespace {

constexpr double kFs = audio::kSampleRate;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBackgroundDb = -55.0;  // re the voiced peak

/// Unity-DC-gain two-pole resonator with per-sample retuning.
class Resonator {
 public:
  double step(double x, double freq, double bandwidth) {
    const double r = std::exp(-std::numbers::pi * bandwidth / kFs);
    const double c = 2.0 * r * std::cos(kTwoPi * freq / kFs);
    const double gain = 1.0 - c + r * r;
    const double y = gain * x + c * y1_ - r * r * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double y1_ = 0, y2_ = 0;
};

struct Plan {
  // Per-sample controls.
  std::vector<double> voiced_amp;
  std::vector<double> fricative_amp;
  std::vector<double> f0_scale;
  std::vector<std::array<double, 3>> formant_scale;
  std::optional<double> jitter;  // overrides the speaker's
};

std::vector<double> raised_cosine_envelope(std::size_t len, double amp) {
  std::vector<double> env(len, amp);
  const std::size_t ramp = std::min<std::size_t>(static_cast<std::size_t>(0.02 * kFs), len / 3);
  for (std::size_t i = 0; i < ramp; ++i) {
    const double w = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    env[i] *= w;
    env[len - 1 - i] *= w;
  }
  return env;
}

Plan syllable_plan(const SpeakerProfile& p, std::size_t n, Rng& rng) {
  Plan plan;
  plan.voiced_amp.assign(n, 0.0);
  plan.fricative_amp.assign(n, 0.0);
  plan.f0_scale.assign(n, 1.0);
  plan.formant_scale.assign(n, {1.0, 1.0, 1.0});

  std::size_t pos = static_cast<std::size_t>(uniform(rng, 0.0, 0.15) * kFs);
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  double f0s = 1.0;
  while (pos < n) {
    // Syllable nucleus.
    const double dur = uniform(rng, 0.6, 1.4) / p.syllable_rate;
    const std::size_t len = std::min(n - pos, static_cast<std::size_t>(dur * kFs));
    for (auto& s : scale) s = uniform(rng, 0.88, 1.12);
    f0s = uniform(rng, 0.92, 1.08);
    if (len > 0) {
      const auto env = raised_cosine_envelope(len, uniform(rng, 0.6, 1.0));
      for (std::size_t i = 0; i < len; ++i) {
        plan.voiced_amp[pos + i] = env[i];
        plan.f0_scale[pos + i] = f0s;
        plan.formant_scale[pos + i] = scale;
      }
    }
    pos += len;
    if (pos >= n) break;

    // Gap: fricative, short pause or long pause. Formant targets are held.
    const double u = uniform(rng, 0.0, 1.0);
    std::size_t gap;
    if (u < 0.35) {
      gap = std::min(n - pos, static_cast<std::size_t>(uniform(rng, 0.04, 0.10) * kFs));
      const auto env = raised_cosine_envelope(gap, uniform(rng, 0.1, 0.3));
      for (std::size_t i = 0; i < gap; ++i) plan.fricative_amp[pos + i] = env[i];
    } else if (u < 0.9) {
      gap = static_cast<std::size_t>(uniform(rng, 0.03, 0.12) * kFs);
    } else {
      gap = static_cast<std::size_t>(uniform(rng, 0.2, 0.4) * kFs);
    }
    for (std::size_t i = 0; i < gap && pos + i < n; ++i) {
      plan.f0_scale[pos + i] = f0s;
      plan.formant_scale[pos + i] = scale;
    }
    pos += gap;
  }
  return plan;
}

audio::Waveform render(const SpeakerProfile& p, const Plan& plan, Rng& rng) {
  const std::size_t n = plan.voiced_amp.size();
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::array<Resonator, 3> tract;
  std::array<double, 3> smooth_scale = plan.formant_scale.empty() ? std::array<double, 3>{1, 1, 1} : plan.formant_scale[0];
  double smooth_f0 = plan.f0_scale.empty() ? 1.0 : plan.f0_scale[0];
  const double glide = std::exp(-1.0 / (0.015 * kFs));  // 15 ms formant/pitch glides
  const double vib_phase0 = uniform(rng, 0.0, kTwoPi);

  const double jitter = plan.jitter.value_or(p.jitter);
  double phase = 0.0;
  double period_jitter = 1.0;
  double pulse_shape[2] = {0.0, 0.0};
  double glottal = 0.0, glottal_prev = 0.0;
  double fric_prev = 0.0;
  audio::Waveform out = audio::Waveform::zeros(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    for (int k = 0; k < 3; ++k) smooth_scale[k] = glide * smooth_scale[k] + (1 - glide) * plan.formant_scale[i][k];
    smooth_f0 = glide * smooth_f0 + (1 - glide) * plan.f0_scale[i];

    const double declination = 1.06 - 0.12 * static_cast<double>(i) / static_cast<double>(n);
    const double vibrato = 1.0 + p.vibrato_depth * std::sin(kTwoPi * p.vibrato_rate * t + vib_phase0);
    const double f0 = p.f0_mean * smooth_f0 * declination * vibrato;

    double pulse = 0.0;
    phase += f0 / kFs * period_jitter;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
      period_jitter = std::clamp(1.0 + jitter * gauss(rng), 0.5, 1.5);
    }
    // Glottal pulse: two poles near 270 Hz (-12 dB/octave), the speaker's
    // tilt, then a first difference for lip radiation. The gain keeps the
    // voiced level near that of an unshaped pulse train.
    pulse_shape[0] = 0.1 * pulse + 0.9 * pulse_shape[0];
    pulse_shape[1] = 0.1 * pulse_shape[0] + 0.9 * pulse_shape[1];
    glottal = (1.0 - p.tilt) * pulse_shape[1] + p.tilt * glottal;
    const double radiated = 40.0 * (glottal - glottal_prev);
    glottal_prev = glottal;
    const double va = plan.voiced_amp[i];
    double source = va * (radiated + p.breathiness * 0.05 * gauss(rng));

    double y = source;
    for (int k = 0; k < 3; ++k)
      y = tract[static_cast<std::size_t>(k)].step(y, p.formants[static_cast<std::size_t>(k)].freq * smooth_scale[k],
                                                  p.formants[static_cast<std::size_t>(k)].bandwidth);

    const double fa = plan.fricative_amp[i];
    if (fa > 0) {
      const double w = gauss(rng);
      y += fa * 0.05 * (w - 0.95 * fric_prev);
      fric_prev = w;
    }
    out.samples(static_cast<Eigen::Index>(i)) = static_cast<float>(y);
  }

  // Room-tone floor so pauses are not digital silence.
  const double level = out.samples.cwiseAbs().maxCoeff() * std::pow(10.0, kBackgroundDb / 20.0);
  for (std::size_t i = 0; i < n; ++i) out.samples(static_cast<Eigen::Index>(i)) += static_cast<float>(level * gauss(rng));

  const float peak = out.samples.cwiseAbs().maxCoeff();
  if (peak > 0) out.samples *= 0.9f / peak;
  return out;
}

}  // namespace

SpeakerProfile synth_speaker(std::uint64_t seed) {
  Rng rng(derive_seed(seed, {tag("speaker")}));
  SpeakerProfile p;
  char id[32];
  std::snprintf(id, sizeof id, "spk-%016llx", static_cast<unsigned long long>(seed));
  p.speaker_id = id;
  p.seed = seed;
  p.f0_mean = uniform(rng, 90.0, 300.0);
  // Vocal-tract length scales every formant together; individual offsets on top.
  const double tract = uniform(rng, 0.85, 1.2);
  // F1 stays well above the fundamental, as in natural voices.
  const double f1 = std::max(2.8 * p.f0_mean, tract * uniform(rng, 350.0, 800.0));
  const double f2 = std::max(f1 + 400.0, tract * uniform(rng, 1000.0, 2100.0));
  const double f3 = std::max(f2 + 350.0, tract * uniform(rng, 2300.0, 3300.0));
  p.formants = {Formant{f1, uniform(rng, 50.0, 110.0)}, Formant{f2, uniform(rng, 70.0, 150.0)},
                Formant{f3, uniform(rng, 100.0, 220.0)}};
  p.jitter = uniform(rng, 0.003, 0.02);
  p.vibrato_rate = uniform(rng, 4.0, 7.0);
  p.vibrato_depth = uniform(rng, 0.005, 0.03);
  p.tilt = uniform(rng, 0.2, 0.6);
  p.breathiness = uniform(rng, 0.0, 1.0);
  p.syllable_rate = uniform(rng, 3.0, 6.0);
  return p;
}

audio::Waveform synth_utterance(const SpeakerProfile& profile, double duration_s, std::uint64_t seed) {
  if (!(duration_s >= 1.0)) throw std::invalid_argument("synth_utterance: duration must be at least 1 s");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kFs));
  Rng rng(derive_seed(seed, {profile.seed, tag("utterance")}));
  const Plan plan = syllable_plan(profile, n, rng);
  return render(profile, plan, rng);
}

audio::Waveform synth_vowel(const SpeakerProfile& profile, std::int64_t samples, std::uint64_t seed) {
  if (samples <= 0) throw std::invalid_argument("synth_vowel: need a positive length");
  const auto n = static_cast<std::size_t>(samples);
  Rng rng(derive_seed(seed, {profile.seed, tag("vowel")}));
  Plan plan;
  plan.voiced_amp.assign(n, 1.0);
  plan.fricative_amp.assign(n, 0.0);
  plan.formant_scale.assign(n, {1.0, 1.0, 1.0});
  plan.f0_scale.assign(n, 1.0);
  // Heavy period jitter decorrelates the pulses, so the long-term spectrum is
  // the formant envelope rather than a comb of harmonics.
  plan.jitter = 0.25;
  return render(profile, plan, rng);
}

}  // namespace tff::sim
