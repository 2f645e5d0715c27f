// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/sim/mixture.hpp"

#include "tff/sim/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tff::sim {

namespace {

constexpr double kFs = audio::kSampleRate;

audio::Waveform reverberate(const audio::Waveform& w, std::uint64_t seed) {
  Rng rng(seed);
  const double t60 = uniform(rng, kMinT60, kMaxT60);
  return audio::convolve_fir(w, synth_rir(rng(), t60));
}

void require_length(const audio::Waveform& w, Eigen::Index n, const std::string& ref) {
  if (w.size() != n)
    throw std::invalid_argument("make_mixture: '" + ref + "' has " + std::to_string(w.size()) + " samples, target has " +
                                std::to_string(n));
}

}  // namespace

audio::Rir synth_rir(std::uint64_t seed, double t60_s) {
  if (!(t60_s >= kMinT60 && t60_s <= kMaxT60))
    throw std::invalid_argument("synth_rir: t60 must be in [0.2, 0.8] s, got " + std::to_string(t60_s));
  const auto n = static_cast<Eigen::Index>(std::llround(kRirLengthSeconds * kFs));
  Rng rng(derive_seed(seed, {tag("rir")}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd env(n);
  for (Eigen::Index i = 0; i < n; ++i) env(i) = std::exp(-6.9077 * static_cast<double>(i) / (t60_s * kFs));
  const double tail_energy = env.tail(n - 1).squaredNorm();
  const double scale = std::sqrt(1.0 / tail_energy);
  audio::Rir rir;
  rir.t60 = t60_s;
  rir.taps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) rir.taps(i) = static_cast<float>(scale * gauss(rng) * env(i));
  rir.taps(0) = 1.0f;
  return rir;
}

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::White: return "white";
    case NoiseKind::Pink: return "pink";
    case NoiseKind::BandBursts: return "bursts";
  }
  return "white";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "white") return NoiseKind::White;
  if (s == "pink") return NoiseKind::Pink;
  if (s == "bursts") return NoiseKind::BandBursts;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

audio::Waveform synth_noise(NoiseKind kind, std::int64_t samples, std::uint64_t seed) {
  if (samples <= 0) throw std::invalid_argument("synth_noise: need a positive length");
  Rng rng(derive_seed(seed, {tag("noise"), static_cast<std::uint64_t>(kind)}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  audio::Waveform out = audio::Waveform::zeros(samples);
  switch (kind) {
    case NoiseKind::White:
      for (std::int64_t i = 0; i < samples; ++i) out.samples(i) = static_cast<float>(0.1 * gauss(rng));
      break;
    case NoiseKind::Pink: {
      // Paul Kellet's -3 dB/octave filter.
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (std::int64_t i = 0; i < samples; ++i) {
        const double w = gauss(rng);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        out.samples(i) = static_cast<float>(0.02 * (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362));
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseKind::BandBursts: {
      const double center = uniform(rng, 300.0, 5000.0);
      const double bw = uniform(rng, 200.0, 1000.0);
      const double r = std::exp(-std::numbers::pi * bw / kFs);
      const double c = 2.0 * r * std::cos(2.0 * std::numbers::pi * center / kFs);
      double y1 = 0, y2 = 0;
      std::int64_t pos = 0;
      bool on = true;  // start with a burst so the clip is never silent
      while (pos < samples) {
        const auto len = static_cast<std::int64_t>(uniform(rng, on ? 0.1 : 0.05, on ? 0.6 : 0.4) * kFs);
        const std::int64_t end = std::min(samples, pos + std::max<std::int64_t>(len, 1));
        const std::int64_t ramp = std::min<std::int64_t>(160, (end - pos) / 3);
        for (std::int64_t i = pos; i < end; ++i) {
          double gate = on ? 1.0 : 0.0;
          if (on && ramp > 0) {
            const std::int64_t k = std::min(i - pos, end - 1 - i);
            if (k < ramp) gate = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(ramp));
          }
          const double y = (1 - r) * gauss(rng) + c * y1 - r * r * y2;
          y2 = y1;
          y1 = y;
          out.samples(i) = static_cast<float>(gate * y);
        }
        pos = end;
        on = !on;
      }
      break;
    }
  }
  if (!(audio::rms(out) > 0)) out.samples(0) = 1e-3f;
  return out;
}

std::string noise_ref(NoiseKind kind, std::uint64_t seed) {
  return "noise:" + to_string(kind) + ":" + std::to_string(seed);
}

bool is_noise_ref(const std::string& ref) { return ref.rfind("noise:", 0) == 0; }

audio::Waveform resolve_noise_ref(const std::string& ref, std::int64_t samples) {
  const auto second = ref.find(':', 6);
  if (!is_noise_ref(ref) || second == std::string::npos) throw std::invalid_argument("malformed noise reference '" + ref + "'");
  const NoiseKind kind = noise_kind_from_string(ref.substr(6, second - 6));
  const std::uint64_t seed = std::stoull(ref.substr(second + 1));
  return synth_noise(kind, samples, seed);
}

void MixSpec::validate() const {
  if (std::find(interferers.begin(), interferers.end(), target_utt) != interferers.end())
    throw std::invalid_argument("MixSpec: target '" + target_utt + "' is also listed as an interferer");
  if (!std::isfinite(sir_db) || !std::isfinite(snr_db)) throw std::invalid_argument("MixSpec: SIR/SNR must be finite");
}

Mixture make_mixture(const MixSpec& spec, const Resolver& resolve) {
  spec.validate();
  Mixture m;
  m.target = resolve(spec.target_utt);
  if (spec.reverb_target) m.target = reverberate(m.target, derive_seed(spec.seed, {tag("rir-target")}));
  const double target_rms = audio::rms(m.target);
  if (!(target_rms > 0)) throw std::invalid_argument("make_mixture: target '" + spec.target_utt + "' is silent");
  const Eigen::Index n = m.target.size();

  m.mix = m.target;
  for (std::size_t j = 0; j < spec.interferers.size(); ++j) {
    const auto& ref = spec.interferers[j];
    audio::Waveform w = is_noise_ref(ref) ? resolve_noise_ref(ref, n) : resolve(ref);
    require_length(w, n, ref);
    if (spec.reverb_interf) w = reverberate(w, derive_seed(spec.seed, {tag("rir-interferer"), j}));
    if (!(audio::rms(w) > 0)) throw std::invalid_argument("make_mixture: interferer '" + ref + "' is silent");
    m.interferers.push_back(audio::scale_to_ratio(target_rms, w, spec.sir_db));
    m.mix.samples += m.interferers.back().samples;
  }
  if (spec.noise) {
    audio::Waveform v = is_noise_ref(*spec.noise) ? resolve_noise_ref(*spec.noise, n) : resolve(*spec.noise);
    require_length(v, n, *spec.noise);
    if (spec.reverb_interf) v = reverberate(v, derive_seed(spec.seed, {tag("rir-noise")}));
    if (!(audio::rms(v) > 0)) throw std::invalid_argument("make_mixture: noise '" + *spec.noise + "' is silent");
    m.noise = audio::scale_to_ratio(target_rms, v, spec.snr_db);
    m.mix.samples += m.noise->samples;
  }
  return m;
}

}  // namespace tff::sim
