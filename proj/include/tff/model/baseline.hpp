// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Classical fixed-embedding baseline: TCN -> ASP -> projection gives a
// D-dimensional speaker embedding; a speaker-classification head is used only
// for training, and trials are scored with cosine similarity.

#pragma once

#include "tff/audio/dsp.hpp"
#include "tff/model/fusion.hpp"
#include "tff/model/layers.hpp"
#include "tff/model/tcn.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace tff::model {

struct BaselineConfig {
  TcnConfig tcn;
  int asp_channels = 128;
  int embedding_dim = 192;
  int num_classes = 2;

  bool operator==(const BaselineConfig&) const = default;
};

template <typename Scalar>
class BaselineModel {
 public:
  explicit BaselineModel(const BaselineConfig& cfg = {}, std::uint64_t seed = 0) : cfg_(cfg) {
    if (cfg.num_classes < 2) throw std::invalid_argument("baseline: need at least 2 training speakers");
    const int n = cfg.tcn.channels;
    embed_tcn_ = Tcn<Scalar>(store_, "embed_tcn", cfg.tcn);
    asp_ = AttentiveStatsPooling<Scalar>(store_, "asp", n, cfg.asp_channels);
    projection_ = Linear<Scalar>(store_, "projection", 2 * n, cfg.embedding_dim);
    class_head_ = Linear<Scalar>(store_, "class_head", cfg.embedding_dim, cfg.num_classes);
    std::mt19937_64 rng(seed);
    embed_tcn_.init(rng);
    asp_.init(rng);
    projection_.init(rng);
    class_head_.init(rng);
  }

  BaselineModel(const BaselineModel&) = delete;
  BaselineModel& operator=(const BaselineModel&) = delete;

  const BaselineConfig& config() const { return cfg_; }
  ParameterStore<Scalar>& params() { return store_; }
  const ParameterStore<Scalar>& params() const { return store_; }
  const Tcn<Scalar>& embed_tcn() const { return embed_tcn_; }
  const AttentiveStatsPooling<Scalar>& asp() const { return asp_; }
  const Linear<Scalar>& projection() const { return projection_; }

  /// D x 1 bottleneck embedding.
  Var<Scalar> embed(Graph<Scalar>& g, Var<Scalar> spec) const {
    auto pooled = asp_.forward(g, embed_tcn_.forward(g, spec)).pooled;
    return projection_.forward_column(g, pooled);
  }

  /// B x K speaker logits for a batch of spectrogram inputs.
  Var<Scalar> logits(Graph<Scalar>& g, std::span<const Matrix<Scalar>* const> batch) const {
    std::vector<Var<Scalar>> rows;
    rows.reserve(batch.size());
    for (const auto* spec : batch) rows.push_back(embed(g, g.constant(*spec)));
    return class_head_.forward(g, nn::stack_rows(rows));
  }

  Eigen::VectorXd embedding(const Matrix<Scalar>& spec) const {
    Graph<Scalar> g(false);
    return embed(g, g.constant(spec)).value().col(0).template cast<double>();
  }

  Eigen::VectorXd embedding(const audio::Waveform& wave, const audio::StftConfig& stft = {}) const {
    return embedding(to_input<Scalar>(audio::log_spectrogram(wave, stft)));
  }

 private:
  BaselineConfig cfg_;
  ParameterStore<Scalar> store_;
  Tcn<Scalar> embed_tcn_;
  AttentiveStatsPooling<Scalar> asp_;
  Linear<Scalar> projection_;
  Linear<Scalar> class_head_;
};

/// dot(a, b) / (|a| |b|); throws on zero vectors or length mismatch.
inline double cosine_score(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_score: length mismatch");
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0) || !(nb > 0)) throw std::invalid_argument("cosine_score: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

}  // namespace tff::model
