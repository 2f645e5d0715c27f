// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/audio/dsp.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tff::audio {

namespace {

// Below this many taps the direct sum is cheaper than FFT convolution, and
// it keeps identity/shift kernels exact.
constexpr Eigen::Index kDirectConvolutionMaxTaps = 128;

Eigen::Index next_pow2(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

void StftConfig::validate() const {
  if (window_len <= 0 || hop <= 0 || fft_size <= 0) throw std::invalid_argument("stft: sizes must be positive");
  if (fft_size < window_len) throw std::invalid_argument("stft: fft_size must be >= window_len");
  if (hop * 2 != window_len) throw std::invalid_argument("stft: hop must be window_len / 2");
  if (!(floor_eps > 0)) throw std::invalid_argument("stft: floor_eps must be positive");
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

ComplexMatrix stft(const Waveform& wave, const StftConfig& cfg) {
  cfg.validate();
  if (wave.size() < cfg.window_len) throw std::invalid_argument("utterance too short");
  const Eigen::Index frames = cfg.frame_count(wave.size());
  const int bins = cfg.bins();
  const Eigen::VectorXd window = hann_window(cfg.window_len);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_size), 0.0);
  std::vector<std::complex<double>> spectrum;
  ComplexMatrix out(bins, frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index start = t * cfg.hop;
    for (int i = 0; i < cfg.window_len; ++i)
      frame[static_cast<std::size_t>(i)] = window(i) * static_cast<double>(wave.samples(start + i));
    fft.fwd(spectrum, frame);
    for (int f = 0; f < bins; ++f) out(f, t) = spectrum[static_cast<std::size_t>(f)];
  }
  return out;
}

Spectrogram log_magnitude(const ComplexMatrix& c, const StftConfig& cfg) {
  return {c.cwiseAbs().cwiseMax(cfg.floor_eps).array().log().matrix()};
}

Spectrogram log_spectrogram(const Waveform& wave, const StftConfig& cfg) {
  return log_magnitude(stft(wave, cfg), cfg);
}

Waveform convolve_fir(const Waveform& wave, const Rir& rir) {
  const Eigen::Index n = wave.size();
  const Eigen::Index m = rir.taps.size();
  if (m == 0) throw std::invalid_argument("convolve_fir: empty impulse response");
  Waveform out = Waveform::zeros(n);
  if (n == 0) return out;

  if (m <= kDirectConvolutionMaxTaps) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd x = wave.samples.cast<double>();
    for (Eigen::Index k = 0; k < m; ++k) {
      const double h = rir.taps(k);
      if (h == 0.0 || k >= n) continue;
      acc.tail(n - k) += h * x.head(n - k);
    }
    out.samples = acc.cast<float>();
    return out;
  }

  const Eigen::Index size = next_pow2(n + m - 1);
  std::vector<double> a(static_cast<std::size_t>(size), 0.0), b(static_cast<std::size_t>(size), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = wave.samples(i);
  for (Eigen::Index i = 0; i < m; ++i) b[static_cast<std::size_t>(i)] = rir.taps(i);
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, a);
  fft.fwd(fb, b);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  std::vector<double> y;
  fft.inv(y, fa);
  for (Eigen::Index i = 0; i < n; ++i) out.samples(i) = static_cast<float>(y[static_cast<std::size_t>(i)]);
  return out;
}

double rms(const Waveform& wave) {
  if (wave.empty()) throw std::invalid_argument("rms: empty waveform");
  return std::sqrt(wave.samples.cast<double>().squaredNorm() / static_cast<double>(wave.size()));
}

Waveform scale_to_ratio(double reference_rms, const Waveform& source, double ratio_db) {
  if (!(reference_rms > 0)) throw std::invalid_argument("scale_to_ratio: reference rms must be positive");
  const double current = rms(source);
  if (!(current > 0)) throw std::invalid_argument("cannot scale silence");
  const double target = reference_rms * std::pow(10.0, -ratio_db / 20.0);
  const double gain = target / current;
  return {(source.samples.cast<double>() * gain).cast<float>(), source.sample_rate};
}

double ratio_db(const Waveform& a, const Waveform& b) { return 20.0 * std::log10(rms(a) / rms(b)); }

Waveform operator+(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("waveform length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  return {a.samples + b.samples, a.sample_rate};
}

}  // namespace tff::audio
