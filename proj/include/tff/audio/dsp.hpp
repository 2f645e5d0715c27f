// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Signal-processing primitives: framing, STFT, log-magnitude features, FIR
// reverberation and energy-ratio scaling. All functions are pure.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace tff::audio {

inline constexpr int kSampleRate = 16000;

/// Mono 16 kHz signal, full scale +-1.0.
struct Waveform {
  Eigen::VectorXf samples;
  int sample_rate = kSampleRate;

  Eigen::Index size() const { return samples.size(); }
  bool empty() const { return samples.size() == 0; }

  static Waveform zeros(Eigen::Index n) { return {Eigen::VectorXf::Zero(n), kSampleRate}; }
};

struct StftConfig {
  int fft_size = 512;
  int window_len = 512;  // 32 ms
  int hop = 256;         // 50% overlap
  double floor_eps = 1e-7;

  int bins() const { return fft_size / 2 + 1; }
  /// Frames produced for `samples` input samples (no padding).
  Eigen::Index frame_count(Eigen::Index samples) const {
    return samples < window_len ? 0 : 1 + (samples - window_len) / hop;
  }
  void validate() const;
};

using ComplexMatrix = Eigen::MatrixXcd;

/// bins x frames log-magnitude features.
struct Spectrogram {
  Eigen::MatrixXd values;

  Eigen::Index bins() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
};

/// FIR kernel; taps[0] is the direct path.
struct Rir {
  Eigen::VectorXf taps;
  double t60 = 0;
};

/// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

/// Frame t covers samples [t*hop, t*hop + window_len), Hann-windowed, no
/// padding. Returns bins x frames. Throws std::invalid_argument("utterance too
/// short") when fewer than window_len samples are given.
ComplexMatrix stft(const Waveform& wave, const StftConfig& cfg = {});

/// out[f,t] = ln(max(|C[f,t]|, floor_eps))
Spectrogram log_magnitude(const ComplexMatrix& c, const StftConfig& cfg = {});

/// stft followed by log_magnitude.
Spectrogram log_spectrogram(const Waveform& wave, const StftConfig& cfg = {});

/// Full linear convolution truncated to the input length.
Waveform convolve_fir(const Waveform& wave, const Rir& rir);

/// Root mean square over all samples.
double rms(const Waveform& wave);

/// Rescales `source` so that 20*log10(reference_rms / rms(out)) = ratio_db.
Waveform scale_to_ratio(double reference_rms, const Waveform& source, double ratio_db);

/// 20*log10(rms(a) / rms(b)).
double ratio_db(const Waveform& a, const Waveform& b);

Waveform operator+(const Waveform& a, const Waveform& b);

}  // namespace tff::audio
