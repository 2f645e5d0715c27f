// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/model/tcn.hpp"

namespace tff::model {

/// Attentive statistics pooling with a scalar score per frame:
///   e_t = w2^T tanh(W1 h_t + b1) + b2,  alpha = softmax_t(e)
///   mu = sum_t alpha_t h_t,  sigma = sqrt(max(sum_t alpha_t h_t^2 - mu^2, 1e-8))
/// Output is [mu; sigma], 2C x 1.
template <typename Scalar>
class AttentiveStatsPooling {
 public:
  static constexpr double kVarianceFloor = 1e-8;

  struct Output {
    Var<Scalar> pooled;
    Var<Scalar> attention;  // 1 x L
  };

  AttentiveStatsPooling() = default;

  AttentiveStatsPooling(ParameterStore<Scalar>& store, const std::string& prefix, int channels, int attention_channels)
      : channels_(channels), attention_channels_(attention_channels) {
    w1_ = &store.add(prefix + ".attention.hidden.weight", {attention_channels, channels});
    b1_ = &store.add(prefix + ".attention.hidden.bias", {attention_channels});
    w2_ = &store.add(prefix + ".attention.score.weight", {1, attention_channels});
    b2_ = &store.add(prefix + ".attention.score.bias", {1});
  }

  int channels() const { return channels_; }
  int attention_channels() const { return attention_channels_; }

  void init(std::mt19937_64& rng) {
    nn::init_uniform_fan_in(*w1_, channels_, rng);
    nn::init_uniform_fan_in(*b1_, channels_, rng);
    nn::init_uniform_fan_in(*w2_, attention_channels_, rng);
    nn::init_uniform_fan_in(*b2_, attention_channels_, rng);
  }

  Output forward(Graph<Scalar>& g, Var<Scalar> h) const {
    if (h.cols() < 1) throw std::invalid_argument("asp: no frames to pool");
    if (h.rows() != channels_)
      throw std::invalid_argument("asp: expected " + std::to_string(channels_) + " channels, got " +
                                  std::to_string(h.rows()));
    auto hidden = nn::tanh(nn::conv1d_pointwise(h, g.param(*w1_), g.param(*b1_)));
    auto scores = nn::conv1d_pointwise(hidden, g.param(*w2_), g.param(*b2_));
    auto alpha = nn::softmax_time(scores);
    // Moments are taken about the first frame, held constant. The weights
    // sum to one, so the pivot cancels in value and gradient; identical
    // frames then give mu equal to the frame and a zero variance exactly.
    const nn::Matrix<Scalar> pivot = h.value().col(0);
    auto centred = nn::sub(h, g.constant(pivot.replicate(1, h.cols())));
    auto shift = nn::weighted_time_sum(centred, alpha);
    auto mu = nn::add(shift, g.constant(pivot));
    auto second = nn::weighted_time_sum(nn::square(centred), alpha);
    auto sigma = nn::sqrt_floor(nn::sub(second, nn::square(shift)), static_cast<Scalar>(kVarianceFloor));
    return {nn::concat_rows(mu, sigma), alpha};
  }

 private:
  int channels_ = 0;
  int attention_channels_ = 0;
  Parameter<Scalar>* w1_ = nullptr;
  Parameter<Scalar>* b1_ = nullptr;
  Parameter<Scalar>* w2_ = nullptr;
  Parameter<Scalar>* b2_ = nullptr;
};

/// Affine layer over B x in batches.
template <typename Scalar>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<Scalar>& store, const std::string& prefix, int in, int out) : in_(in), out_(out) {
    w_ = &store.add(prefix + ".weight", {out, in});
    b_ = &store.add(prefix + ".bias", {out});
  }

  void init(std::mt19937_64& rng) {
    nn::init_uniform_fan_in(*w_, in_, rng);
    nn::init_uniform_fan_in(*b_, in_, rng);
  }

  Var<Scalar> forward(Graph<Scalar>& g, Var<Scalar> x) const { return nn::linear(x, g.param(*w_), g.param(*b_)); }

  /// Same map applied to a single in x 1 column.
  Var<Scalar> forward_column(Graph<Scalar>& g, Var<Scalar> x) const {
    return nn::conv1d_pointwise(x, g.param(*w_), g.param(*b_));
  }

  Parameter<Scalar>& weight() { return *w_; }
  Parameter<Scalar>& bias() { return *b_; }
  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_ = 0;
  int out_ = 0;
  Parameter<Scalar>* w_ = nullptr;
  Parameter<Scalar>* b_ = nullptr;
};

/// Linear -> ReLU -> batch norm.
template <typename Scalar>
class LinearBlock {
 public:
  LinearBlock() = default;
  LinearBlock(ParameterStore<Scalar>& store, const std::string& prefix, int in, int out)
      : linear_(store, prefix + ".linear", in, out) {
    gamma_ = &store.add(prefix + ".bn.gamma", {out});
    beta_ = &store.add(prefix + ".bn.beta", {out});
    running_mean_ = &store.add(prefix + ".bn.running_mean", {out}, false);
    running_var_ = &store.add(prefix + ".bn.running_var", {out}, false);
  }

  void init(std::mt19937_64& rng) {
    linear_.init(rng);
    nn::init_constant(*gamma_, Scalar(1));
    nn::init_constant(*running_var_, Scalar(1));
  }

  Var<Scalar> forward(Graph<Scalar>& g, Var<Scalar> x, bool training) const {
    auto y = nn::relu(linear_.forward(g, x));
    return nn::batch_norm_1d(y, g.param(*gamma_), g.param(*beta_),
                             nn::BatchNormBuffers<Scalar>{running_mean_, running_var_}, training);
  }

 private:
  Linear<Scalar> linear_;
  Parameter<Scalar>* gamma_ = nullptr;
  Parameter<Scalar>* beta_ = nullptr;
  Parameter<Scalar>* running_mean_ = nullptr;
  Parameter<Scalar>* running_var_ = nullptr;
};

/// Linear(2N -> H) -> LinearBlock(H -> H) x 2 -> Linear(H -> 1) -> sigmoid.
template <typename Scalar>
class Classifier {
 public:
  Classifier() = default;
  Classifier(ParameterStore<Scalar>& store, const std::string& prefix, int in, int hidden)
      : in_(in),
        input_(store, prefix + ".input", in, hidden),
        block1_(store, prefix + ".block1", hidden, hidden),
        block2_(store, prefix + ".block2", hidden, hidden),
        output_(store, prefix + ".output", hidden, 1) {}

  void init(std::mt19937_64& rng) {
    input_.init(rng);
    block1_.init(rng);
    block2_.init(rng);
    output_.init(rng);
  }

  /// B x in pooled statistics -> B x 1 target-presence probabilities.
  Var<Scalar> forward(Graph<Scalar>& g, Var<Scalar> pooled, bool training) const {
    if (pooled.cols() != in_)
      throw std::invalid_argument("classifier: expected " + std::to_string(in_) + " inputs, got " +
                                  std::to_string(pooled.cols()));
    auto y = input_.forward(g, pooled);
    y = block1_.forward(g, y, training);
    y = block2_.forward(g, y, training);
    return nn::sigmoid(output_.forward(g, y));
  }

  Linear<Scalar>& output_layer() { return output_; }

 private:
  int in_ = 0;
  Linear<Scalar> input_;
  LinearBlock<Scalar> block1_;
  LinearBlock<Scalar> block2_;
  Linear<Scalar> output_;
};

}  // namespace tff::model
