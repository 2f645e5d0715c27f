// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/nn/init.hpp"
#include "tff/nn/ops.hpp"

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tff::model {

using nn::Graph;
using nn::Matrix;
using nn::Parameter;
using nn::ParameterStore;
using nn::Var;

/// Conv-TasNet style hyperparameters {N, B, H, P, X, R}.
struct TcnConfig {
  int channels = 257;   // N
  int bottleneck = 32;  // B
  int hidden = 64;      // H
  int kernel = 3;       // P
  int blocks = 6;       // X
  int repeats = 3;      // R

  void validate() const {
    if (channels <= 0 || bottleneck <= 0 || hidden <= 0 || kernel <= 0 || blocks <= 0 || repeats <= 0)
      throw std::invalid_argument("TcnConfig: all sizes must be positive");
    if (kernel % 2 == 0) throw std::invalid_argument("TcnConfig: kernel size must be odd");
  }

  /// Frames on each side of t that can influence output frame t.
  int context_radius() const {
    int per_repeat = 0;
    for (int x = 0; x < blocks; ++x) per_repeat += (kernel - 1) / 2 * (1 << x);
    return per_repeat * repeats;
  }

  /// Total receptive field in frames.
  int receptive_field() const { return 1 + 2 * context_radius(); }

  bool operator==(const TcnConfig&) const = default;
};

/// gLN -> 1x1 bottleneck -> R*X residual blocks -> 1x1 output. Block x of
/// every repeat uses dilation 2^x; frame count is preserved.
template <typename Scalar>
class Tcn {
 public:
  Tcn() = default;

  Tcn(ParameterStore<Scalar>& store, const std::string& prefix, const TcnConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    const int n = cfg.channels, b = cfg.bottleneck, h = cfg.hidden;
    in_norm_gain_ = &store.add(prefix + ".input_norm.gain", {n});
    in_norm_bias_ = &store.add(prefix + ".input_norm.bias", {n});
    bottleneck_w_ = &store.add(prefix + ".bottleneck.weight", {b, n});
    bottleneck_b_ = &store.add(prefix + ".bottleneck.bias", {b});
    for (int r = 0; r < cfg.repeats; ++r) {
      for (int x = 0; x < cfg.blocks; ++x) {
        const std::string p = prefix + ".block" + std::to_string(r * cfg.blocks + x);
        Block blk;
        blk.dilation = 1 << x;
        blk.in_w = &store.add(p + ".conv_in.weight", {h, b});
        blk.in_b = &store.add(p + ".conv_in.bias", {h});
        blk.prelu1 = &store.add(p + ".prelu1.slope", {h});
        blk.norm1_gain = &store.add(p + ".norm1.gain", {h});
        blk.norm1_bias = &store.add(p + ".norm1.bias", {h});
        blk.depthwise = &store.add(p + ".depthwise.kernel", {h, cfg.kernel});
        blk.prelu2 = &store.add(p + ".prelu2.slope", {h});
        blk.norm2_gain = &store.add(p + ".norm2.gain", {h});
        blk.norm2_bias = &store.add(p + ".norm2.bias", {h});
        blk.out_w = &store.add(p + ".conv_out.weight", {b, h});
        blk.out_b = &store.add(p + ".conv_out.bias", {b});
        blocks_.push_back(blk);
      }
    }
    out_w_ = &store.add(prefix + ".output.weight", {n, b});
    out_b_ = &store.add(prefix + ".output.bias", {n});
  }

  const TcnConfig& config() const { return cfg_; }

  void init(std::mt19937_64& rng) {
    nn::init_constant(*in_norm_gain_, Scalar(1));
    init_conv(*bottleneck_w_, *bottleneck_b_, cfg_.channels, rng);
    for (auto& blk : blocks_) {
      init_conv(*blk.in_w, *blk.in_b, cfg_.bottleneck, rng);
      nn::init_constant(*blk.prelu1, Scalar(0.25));
      nn::init_constant(*blk.norm1_gain, Scalar(1));
      nn::init_uniform_fan_in(*blk.depthwise, cfg_.kernel, rng);
      nn::init_constant(*blk.prelu2, Scalar(0.25));
      nn::init_constant(*blk.norm2_gain, Scalar(1));
      init_conv(*blk.out_w, *blk.out_b, cfg_.hidden, rng);
    }
    init_conv(*out_w_, *out_b_, cfg_.bottleneck, rng);
  }

  /// N x L -> N x L frame features.
  Var<Scalar> forward(Graph<Scalar>& g, Var<Scalar> x) const {
    if (x.rows() != cfg_.channels)
      throw std::invalid_argument("tcn: expected " + std::to_string(cfg_.channels) + " input channels, got " +
                                  std::to_string(x.rows()));
    auto y = nn::global_layer_norm(x, g.param(*in_norm_gain_), g.param(*in_norm_bias_));
    y = nn::conv1d_pointwise(y, g.param(*bottleneck_w_), g.param(*bottleneck_b_));
    for (const auto& blk : blocks_) {
      auto z = nn::conv1d_pointwise(y, g.param(*blk.in_w), g.param(*blk.in_b));
      z = nn::prelu(z, g.param(*blk.prelu1));
      z = nn::global_layer_norm(z, g.param(*blk.norm1_gain), g.param(*blk.norm1_bias));
      z = nn::conv1d_depthwise(z, g.param(*blk.depthwise), blk.dilation);
      z = nn::prelu(z, g.param(*blk.prelu2));
      z = nn::global_layer_norm(z, g.param(*blk.norm2_gain), g.param(*blk.norm2_bias));
      z = nn::conv1d_pointwise(z, g.param(*blk.out_w), g.param(*blk.out_b));
      y = nn::add(y, z);
    }
    return nn::conv1d_pointwise(y, g.param(*out_w_), g.param(*out_b_));
  }

 private:
  struct Block {
    int dilation = 1;
    Parameter<Scalar>* in_w = nullptr;
    Parameter<Scalar>* in_b = nullptr;
    Parameter<Scalar>* prelu1 = nullptr;
    Parameter<Scalar>* norm1_gain = nullptr;
    Parameter<Scalar>* norm1_bias = nullptr;
    Parameter<Scalar>* depthwise = nullptr;
    Parameter<Scalar>* prelu2 = nullptr;
    Parameter<Scalar>* norm2_gain = nullptr;
    Parameter<Scalar>* norm2_bias = nullptr;
    Parameter<Scalar>* out_w = nullptr;
    Parameter<Scalar>* out_b = nullptr;
  };

  static void init_conv(Parameter<Scalar>& w, Parameter<Scalar>& b, int fan_in, std::mt19937_64& rng) {
    nn::init_uniform_fan_in(w, fan_in, rng);
    nn::init_uniform_fan_in(b, fan_in, rng);
  }

  TcnConfig cfg_;
  Parameter<Scalar>* in_norm_gain_ = nullptr;
  Parameter<Scalar>* in_norm_bias_ = nullptr;
  Parameter<Scalar>* bottleneck_w_ = nullptr;
  Parameter<Scalar>* bottleneck_b_ = nullptr;
  std::vector<Block> blocks_;
  Parameter<Scalar>* out_w_ = nullptr;
  Parameter<Scalar>* out_b_ = nullptr;
};

}  // namespace tff::model
