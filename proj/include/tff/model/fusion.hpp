// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Temporal feature fusion detector: the enrollment TCN output is averaged
// into a per-channel embedding, multiplied frame-wise into the mixture TCN
// features, refined by a third TCN, pooled with ASP and classified.

#pragma once

#include "tff/audio/dsp.hpp"
#include "tff/model/layers.hpp"
#include "tff/model/tcn.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace tff::model {

struct FusionConfig {
  TcnConfig tcn;
  int asp_channels = 128;

  int pooled_width() const { return 2 * tcn.channels; }
  int classifier_hidden() const { return tcn.channels; }
  bool operator==(const FusionConfig&) const = default;
};

/// Converts log-magnitude features into a network input of the given scalar type.
template <typename Scalar>
Matrix<Scalar> to_input(const audio::Spectrogram& spec) {
  return spec.values.cast<Scalar>();
}

/// out = mixture features scaled per channel by the enrollment embedding.
template <typename Scalar>
Var<Scalar> fuse(Var<Scalar> mixture, Var<Scalar> embedding) {
  return nn::broadcast_mul(mixture, embedding);
}

template <typename Scalar>
class FusionModel {
 public:
  /// One (enrollment, test) pair of network inputs.
  struct Pair {
    const Matrix<Scalar>* enroll;
    const Matrix<Scalar>* test;
  };

  explicit FusionModel(const FusionConfig& cfg = {}, std::uint64_t seed = 0) : cfg_(cfg) {
    const int n = cfg.tcn.channels;
    enroll_tcn_ = Tcn<Scalar>(store_, "enroll_tcn", cfg.tcn);
    mixture_tcn_ = Tcn<Scalar>(store_, "mixture_tcn", cfg.tcn);
    fusion_tcn_ = Tcn<Scalar>(store_, "fusion_tcn", cfg.tcn);
    asp_ = AttentiveStatsPooling<Scalar>(store_, "asp", n, cfg.asp_channels);
    classifier_ = Classifier<Scalar>(store_, "classifier", cfg.pooled_width(), cfg.classifier_hidden());
    std::mt19937_64 rng(seed);
    enroll_tcn_.init(rng);
    mixture_tcn_.init(rng);
    fusion_tcn_.init(rng);
    asp_.init(rng);
    classifier_.init(rng);
  }

  FusionModel(const FusionModel&) = delete;
  FusionModel& operator=(const FusionModel&) = delete;

  const FusionConfig& config() const { return cfg_; }
  ParameterStore<Scalar>& params() { return store_; }
  const ParameterStore<Scalar>& params() const { return store_; }
  const Tcn<Scalar>& enroll_tcn() const { return enroll_tcn_; }
  const Tcn<Scalar>& mixture_tcn() const { return mixture_tcn_; }
  const Tcn<Scalar>& fusion_tcn() const { return fusion_tcn_; }
  const AttentiveStatsPooling<Scalar>& asp() const { return asp_; }
  Classifier<Scalar>& classifier() { return classifier_; }

  /// Average-pooled enrollment TCN features, N x 1.
  Var<Scalar> enroll_embed(Graph<Scalar>& g, Var<Scalar> enroll_spec) const {
    if (enroll_spec.cols() < 1) throw std::invalid_argument("enroll_embed: empty enrollment spectrogram");
    return nn::mean_over_time(enroll_tcn_.forward(g, enroll_spec));
  }

  /// ASP statistics of the fused mixture features, 2N x 1.
  Var<Scalar> pooled(Graph<Scalar>& g, Var<Scalar> embedding, Var<Scalar> test_spec) const {
    auto mixture = mixture_tcn_.forward(g, test_spec);
    auto fused = fuse(mixture, embedding);
    return asp_.forward(g, fusion_tcn_.forward(g, fused)).pooled;
  }

  /// B x 1 target-presence probabilities for a batch of pairs.
  Var<Scalar> forward(Graph<Scalar>& g, std::span<const Pair> batch, bool training) const {
    std::vector<Var<Scalar>> rows;
    rows.reserve(batch.size());
    for (const auto& pair : batch) {
      auto emb = enroll_embed(g, g.constant(*pair.enroll));
      rows.push_back(pooled(g, emb, g.constant(*pair.test)));
    }
    return classifier_.forward(g, nn::stack_rows(rows), training);
  }

  /// Embedding vector for caching across many trials with the same enrollment.
  Matrix<Scalar> embedding(const Matrix<Scalar>& enroll_spec) const {
    Graph<Scalar> g(false);
    return enroll_embed(g, g.constant(enroll_spec)).value();
  }

  /// Inference-mode probability given a precomputed enrollment embedding.
  Scalar detect_with_embedding(const Matrix<Scalar>& embedding, const Matrix<Scalar>& test_spec) const {
    Graph<Scalar> g(false);
    auto p = pooled(g, g.constant(embedding), g.constant(test_spec));
    return classifier_.forward(g, nn::stack_rows(std::vector<Var<Scalar>>{p}), false).value()(0, 0);
  }

  Scalar detect(const audio::Spectrogram& enroll, const audio::Spectrogram& test) const {
    return detect_with_embedding(embedding(to_input<Scalar>(enroll)), to_input<Scalar>(test));
  }

  /// p(target present | test, enrollment) from raw audio.
  Scalar detect(const audio::Waveform& enroll, const audio::Waveform& test, const audio::StftConfig& stft = {}) const {
    return detect(audio::log_spectrogram(enroll, stft), audio::log_spectrogram(test, stft));
  }

 private:
  FusionConfig cfg_;
  ParameterStore<Scalar> store_;
  Tcn<Scalar> enroll_tcn_;
  Tcn<Scalar> mixture_tcn_;
  Tcn<Scalar> fusion_tcn_;
  AttentiveStatsPooling<Scalar> asp_;
  Classifier<Scalar> classifier_;
};

}  // namespace tff::model
