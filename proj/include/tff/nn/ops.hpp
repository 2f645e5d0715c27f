// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operators over Graph nodes. Feature maps are C x L
// (channels x frames); batched vectors are B x F.

#pragma once

#include "tff/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace tff::nn {

namespace detail {

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.value()) + " vs " +
                                shape_string(b.value()));
}

template <typename Scalar>
void require_column(const char* op, const Var<Scalar>& v, Index n) {
  if (v.cols() != 1 || v.rows() != n)
    throw std::invalid_argument(std::string(op) + ": expected a " + std::to_string(n) + "-vector, got " +
                                shape_string(v.value()));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("add", a, b);
  Matrix<Scalar> out = a.value() + b.value();
  return a.graph->emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id) += go;
    if (g.requires_grad(b.id)) g.grad(b.id) += go;
  });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("sub", a, b);
  Matrix<Scalar> out = a.value() - b.value();
  return a.graph->emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id) += go;
    if (g.requires_grad(b.id)) g.grad(b.id) -= go;
  });
}

/// Hadamard product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_shape("mul", a, b);
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.graph->emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id) += go.cwiseProduct(g.value(b.id));
    if (g.requires_grad(b.id)) g.grad(b.id) += go.cwiseProduct(g.value(a.id));
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  return a.graph->emit(std::move(out), {a}, [a, s](Graph<Scalar>& g, int self) {
    g.grad(a.id) += g.grad(self) * s;
  });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph->emit(std::move(out), {a}, [a](Graph<Scalar>& g, int self) {
    g.grad(a.id).array() += g.grad(self)(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> mean(Var<Scalar> a) {
  const Scalar n = static_cast<Scalar>(a.value().size());
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return a.graph->emit(std::move(out), {a}, [a, n](Graph<Scalar>& g, int self) {
    g.grad(a.id).array() += g.grad(self)(0, 0) / n;
  });
}

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch " + shape_string(a.value()) + " x " +
                                shape_string(b.value()));
  Matrix<Scalar> out;
  out.noalias() = a.value() * b.value();
  return a.graph->emit(std::move(out), {a, b}, [a, b](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id).noalias() += go * g.value(b.id).transpose();
    if (g.requires_grad(b.id)) g.grad(b.id).noalias() += g.value(a.id).transpose() * go;
  });
}

/// out[o,t] = bias[o] + sum_i weight[o,i] * in[i,t]
template <typename Scalar>
Var<Scalar> conv1d_pointwise(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  if (weight.cols() != x.rows() || bias.cols() != 1 || bias.rows() != weight.rows())
    throw std::invalid_argument("conv1d_pointwise: input " + shape_string(x.value()) + ", weight " +
                                shape_string(weight.value()) + ", bias " + shape_string(bias.value()));
  Matrix<Scalar> out;
  out.noalias() = weight.value() * x.value();
  out.colwise() += bias.value().col(0);
  return x.graph->emit(std::move(out), {x, weight, bias}, [x, weight, bias](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(x.id)) g.grad(x.id).noalias() += g.value(weight.id).transpose() * go;
    if (g.requires_grad(weight.id)) g.grad(weight.id).noalias() += go * g.value(x.id).transpose();
    if (g.requires_grad(bias.id)) g.grad(bias.id).col(0) += go.rowwise().sum();
  });
}

/// Per-channel dilated convolution, odd kernel, symmetric zero padding of
/// dilation*(P-1)/2 on each side so the frame count is preserved.
/// out[c,t] = sum_j kernel[c,j] * in[c, t + (j - (P-1)/2) * dilation]
template <typename Scalar>
Var<Scalar> conv1d_depthwise(Var<Scalar> x, Var<Scalar> kernel, int dilation) {
  const Index channels = x.rows();
  const Index frames = x.cols();
  const Index taps = kernel.cols();
  if (taps % 2 == 0) throw std::invalid_argument("conv1d_depthwise: kernel size must be odd, got " + std::to_string(taps));
  if (dilation < 1) throw std::invalid_argument("conv1d_depthwise: dilation must be >= 1");
  if (kernel.rows() != channels)
    throw std::invalid_argument("conv1d_depthwise: input " + shape_string(x.value()) + ", kernel " +
                                shape_string(kernel.value()));
  const Index half = (taps - 1) / 2;
  const auto& in = x.value();
  const auto& k = kernel.value();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(channels, frames);
  for (Index j = 0; j < taps; ++j) {
    const Index off = (j - half) * dilation;
    const Index n = frames - std::abs(off);
    if (n <= 0) continue;
    if (off >= 0) {
      out.leftCols(n).array() += in.rightCols(n).array().colwise() * k.col(j).array();
    } else {
      out.rightCols(n).array() += in.leftCols(n).array().colwise() * k.col(j).array();
    }
  }
  return x.graph->emit(std::move(out), {x, kernel}, [x, kernel, dilation, half](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    const auto& in = g.value(x.id);
    const auto& k = g.value(kernel.id);
    const Index frames = in.cols();
    const bool need_x = g.requires_grad(x.id);
    const bool need_k = g.requires_grad(kernel.id);
    for (Index j = 0; j < k.cols(); ++j) {
      const Index off = (j - half) * dilation;
      const Index n = frames - std::abs(off);
      if (n <= 0) continue;
      if (off >= 0) {
        if (need_x) g.grad(x.id).rightCols(n).array() += go.leftCols(n).array().colwise() * k.col(j).array();
        if (need_k) g.grad(kernel.id).col(j) += go.leftCols(n).cwiseProduct(in.rightCols(n)).rowwise().sum();
      } else {
        if (need_x) g.grad(x.id).leftCols(n).array() += go.rightCols(n).array().colwise() * k.col(j).array();
        if (need_k) g.grad(kernel.id).col(j) += go.rightCols(n).cwiseProduct(in.leftCols(n)).rowwise().sum();
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  Matrix<Scalar> out = x.value().cwiseMax(Scalar(0));
  return x.graph->emit(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    g.grad(x.id).array() += (g.value(x.id).array() > Scalar(0)).select(g.grad(self).array(), Scalar(0));
  });
}

/// Per-channel PReLU on a C x L map; slope is C x 1.
template <typename Scalar>
Var<Scalar> prelu(Var<Scalar> x, Var<Scalar> slope) {
  detail::require_column("prelu", slope, x.rows());
  const auto& in = x.value();
  Matrix<Scalar> out = (in.array() > Scalar(0)).select(in.array(), in.array().colwise() * slope.value().col(0).array());
  return x.graph->emit(std::move(out), {x, slope}, [x, slope](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    const auto& in = g.value(x.id);
    const auto positive = in.array() > Scalar(0);
    if (g.requires_grad(x.id))
      g.grad(x.id).array() += positive.select(go.array(), go.array().colwise() * g.value(slope.id).col(0).array());
    if (g.requires_grad(slope.id))
      g.grad(slope.id).col(0) += positive.select(Scalar(0), go.array() * in.array()).matrix().rowwise().sum();
  });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> x) {
  Matrix<Scalar> out = x.value().array().tanh();
  return x.graph->emit(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self);
    g.grad(x.id).array() += g.grad(self).array() * (Scalar(1) - y.array().square());
  });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  Matrix<Scalar> out = (Scalar(1) + (-x.value().array()).exp()).inverse();
  return x.graph->emit(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self);
    g.grad(x.id).array() += g.grad(self).array() * y.array() * (Scalar(1) - y.array());
  });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> x) {
  Matrix<Scalar> out = x.value().array().square();
  return x.graph->emit(std::move(out), {x}, [x](Graph<Scalar>& g, int self) {
    g.grad(x.id).array() += Scalar(2) * g.grad(self).array() * g.value(x.id).array();
  });
}

/// sqrt(max(x, floor)); the gradient is zero where the floor is active.
template <typename Scalar>
Var<Scalar> sqrt_floor(Var<Scalar> x, Scalar floor) {
  Matrix<Scalar> out = x.value().cwiseMax(floor).cwiseSqrt();
  return x.graph->emit(std::move(out), {x}, [x, floor](Graph<Scalar>& g, int self) {
    const auto& y = g.value(self);
    g.grad(x.id).array() +=
        (g.value(x.id).array() > floor).select(g.grad(self).array() / (Scalar(2) * y.array()), Scalar(0));
  });
}

/// Global layer norm: statistics over every entry of the C x L map, then a
/// per-channel affine. The variance is floored at 1e-8.
template <typename Scalar>
Var<Scalar> global_layer_norm(Var<Scalar> x, Var<Scalar> gain, Var<Scalar> bias) {
  constexpr Scalar kVarFloor = Scalar(1e-8);
  detail::require_column("global_layer_norm gain", gain, x.rows());
  detail::require_column("global_layer_norm bias", bias, x.rows());
  const auto& in = x.value();
  const Scalar n = static_cast<Scalar>(in.size());
  // Averaging offsets from the first entry keeps constant inputs exactly
  // centred, so the variance floor sees zero residuals.
  const Scalar pivot = in.size() > 0 ? in(0, 0) : Scalar(0);
  const Scalar mu = pivot + (in.array() - pivot).sum() / n;
  const Scalar raw_var = (in.array() - mu).square().sum() / n;
  const bool floored = !(raw_var > kVarFloor);
  const Scalar inv_std = Scalar(1) / std::sqrt(floored ? kVarFloor : raw_var);
  Matrix<Scalar> xhat = (in.array() - mu) * inv_std;
  Matrix<Scalar> out = (xhat.array().colwise() * gain.value().col(0).array()).colwise() + bias.value().col(0).array();
  return x.graph->emit(std::move(out), {x, gain, bias},
                       [x, gain, bias, xhat = std::move(xhat), inv_std, floored](Graph<Scalar>& g, int self) {
                         const auto& go = g.grad(self);
                         if (g.requires_grad(gain.id)) g.grad(gain.id).col(0) += go.cwiseProduct(xhat).rowwise().sum();
                         if (g.requires_grad(bias.id)) g.grad(bias.id).col(0) += go.rowwise().sum();
                         if (g.requires_grad(x.id)) {
                           Matrix<Scalar> dxhat = go.array().colwise() * g.value(gain.id).col(0).array();
                           const Scalar n = static_cast<Scalar>(dxhat.size());
                           const Scalar mean_d = dxhat.sum() / n;
                           if (floored) {
                             g.grad(x.id).array() += (dxhat.array() - mean_d) * inv_std;
                           } else {
                             const Scalar mean_dx = dxhat.cwiseProduct(xhat).sum() / n;
                             g.grad(x.id).array() += (dxhat.array() - mean_d - xhat.array() * mean_dx) * inv_std;
                           }
                         }
                       });
}

/// out[c,t] = features[c,t] * vec[c]
template <typename Scalar>
Var<Scalar> broadcast_mul(Var<Scalar> features, Var<Scalar> vec) {
  detail::require_column("broadcast_mul", vec, features.rows());
  Matrix<Scalar> out = features.value().array().colwise() * vec.value().col(0).array();
  return features.graph->emit(std::move(out), {features, vec}, [features, vec](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(features.id)) g.grad(features.id).array() += go.array().colwise() * g.value(vec.id).col(0).array();
    if (g.requires_grad(vec.id)) g.grad(vec.id).col(0) += go.cwiseProduct(g.value(features.id)).rowwise().sum();
  });
}

/// C x L -> C x 1 temporal average.
template <typename Scalar>
Var<Scalar> mean_over_time(Var<Scalar> x) {
  const Index frames = x.cols();
  if (frames < 1) throw std::invalid_argument("mean_over_time: no frames");
  Matrix<Scalar> out = x.value().rowwise().mean();
  return x.graph->emit(std::move(out), {x}, [x, frames](Graph<Scalar>& g, int self) {
    g.grad(x.id).colwise() += g.grad(self).col(0) / static_cast<Scalar>(frames);
  });
}

/// Softmax across the columns of a 1 x L row.
template <typename Scalar>
Var<Scalar> softmax_time(Var<Scalar> e) {
  if (e.rows() != 1 || e.cols() < 1) throw std::invalid_argument("softmax_time: expected 1 x L, got " + shape_string(e.value()));
  const Scalar top = e.value().maxCoeff();
  Matrix<Scalar> out = (e.value().array() - top).exp();
  out /= out.sum();
  return e.graph->emit(std::move(out), {e}, [e](Graph<Scalar>& g, int self) {
    const auto& a = g.value(self);
    const auto& go = g.grad(self);
    const Scalar dot = go.cwiseProduct(a).sum();
    g.grad(e.id).array() += a.array() * (go.array() - dot);
  });
}

/// sum_t weights[t] * h[:,t] for h: C x L and weights: 1 x L.
template <typename Scalar>
Var<Scalar> weighted_time_sum(Var<Scalar> h, Var<Scalar> weights) {
  if (weights.rows() != 1 || weights.cols() != h.cols())
    throw std::invalid_argument("weighted_time_sum: features " + shape_string(h.value()) + ", weights " +
                                shape_string(weights.value()));
  Matrix<Scalar> out;
  out.noalias() = h.value() * weights.value().transpose();
  return h.graph->emit(std::move(out), {h, weights}, [h, weights](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(h.id)) g.grad(h.id).noalias() += go * g.value(weights.id);
    if (g.requires_grad(weights.id)) g.grad(weights.id).noalias() += go.transpose() * g.value(h.id);
  });
}

/// Vertical concatenation.
template <typename Scalar>
Var<Scalar> concat_rows(Var<Scalar> a, Var<Scalar> b) {
  if (a.cols() != b.cols())
    throw std::invalid_argument("concat_rows: " + shape_string(a.value()) + " vs " + shape_string(b.value()));
  Matrix<Scalar> out(a.rows() + b.rows(), a.cols());
  out << a.value(), b.value();
  const Index split = a.rows();
  return a.graph->emit(std::move(out), {a, b}, [a, b, split](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(a.id)) g.grad(a.id) += go.topRows(split);
    if (g.requires_grad(b.id)) g.grad(b.id) += go.bottomRows(go.rows() - split);
  });
}

/// Stacks n x 1 columns as the rows of a B x n matrix.
template <typename Scalar>
Var<Scalar> stack_rows(const std::vector<Var<Scalar>>& columns) {
  if (columns.empty()) throw std::invalid_argument("stack_rows: empty input");
  const Index width = columns.front().rows();
  Matrix<Scalar> out(static_cast<Index>(columns.size()), width);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    detail::require_column("stack_rows", columns[i], width);
    out.row(static_cast<Index>(i)) = columns[i].value().col(0).transpose();
  }
  return columns.front().graph->emit(std::move(out), columns, [columns](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (g.requires_grad(columns[i].id)) g.grad(columns[i].id).col(0) += go.row(static_cast<Index>(i)).transpose();
  });
}

/// Batched affine map: x (B x in), weight (out x in), bias (out x 1) -> B x out.
template <typename Scalar>
Var<Scalar> linear(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  if (weight.cols() != x.cols() || bias.cols() != 1 || bias.rows() != weight.rows())
    throw std::invalid_argument("linear: input " + shape_string(x.value()) + ", weight " + shape_string(weight.value()) +
                                ", bias " + shape_string(bias.value()));
  Matrix<Scalar> out;
  out.noalias() = x.value() * weight.value().transpose();
  out.rowwise() += bias.value().col(0).transpose();
  return x.graph->emit(std::move(out), {x, weight, bias}, [x, weight, bias](Graph<Scalar>& g, int self) {
    const auto& go = g.grad(self);
    if (g.requires_grad(x.id)) g.grad(x.id).noalias() += go * g.value(weight.id);
    if (g.requires_grad(weight.id)) g.grad(weight.id).noalias() += go.transpose() * g.value(x.id);
    if (g.requires_grad(bias.id)) g.grad(bias.id).col(0) += go.colwise().sum().transpose();
  });
}

/// Running statistics of a batch-norm layer; both are non-trainable buffers.
template <typename Scalar>
struct BatchNormBuffers {
  Parameter<Scalar>* running_mean = nullptr;
  Parameter<Scalar>* running_var = nullptr;
  Scalar momentum = Scalar(0.1);
};

/// Batch norm over the rows of a B x F batch. Training mode normalizes with
/// batch statistics (biased variance, floored at 1e-8) and updates the running
/// estimates with the unbiased variance; inference mode uses running estimates.
template <typename Scalar>
Var<Scalar> batch_norm_1d(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta, BatchNormBuffers<Scalar> buffers,
                          bool training) {
  constexpr Scalar kVarFloor = Scalar(1e-8);
  const Index batch = x.rows();
  const Index features = x.cols();
  detail::require_column("batch_norm_1d gamma", gamma, features);
  detail::require_column("batch_norm_1d beta", beta, features);
  const auto& in = x.value();
  Eigen::Array<Scalar, 1, Eigen::Dynamic> mu(features);
  Eigen::Array<Scalar, 1, Eigen::Dynamic> var(features);
  if (training) {
    if (batch < 2) throw std::invalid_argument("batch_norm_1d: training mode needs a batch of at least 2");
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> pivot = in.row(0).array();
    mu = pivot + (in.array().rowwise() - pivot).colwise().sum() / static_cast<Scalar>(batch);
    var = (in.array().rowwise() - mu).square().colwise().sum() / static_cast<Scalar>(batch);
    auto& rm = buffers.running_mean->value;
    auto& rv = buffers.running_var->value;
    const Scalar m = buffers.momentum;
    const Scalar unbias = static_cast<Scalar>(batch) / static_cast<Scalar>(batch - 1);
    rm.col(0) = (Scalar(1) - m) * rm.col(0).array() + m * mu.transpose();
    rv.col(0) = (Scalar(1) - m) * rv.col(0).array() + m * unbias * var.transpose();
  } else {
    mu = buffers.running_mean->value.col(0).transpose().array();
    var = buffers.running_var->value.col(0).transpose().array();
  }
  Eigen::Array<Scalar, 1, Eigen::Dynamic> active = (var > kVarFloor).template cast<Scalar>();
  Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std = var.max(kVarFloor).rsqrt();
  Matrix<Scalar> xhat = (in.array().rowwise() - mu).rowwise() * inv_std;
  Matrix<Scalar> out = (xhat.array().rowwise() * gamma.value().col(0).transpose().array()).rowwise() +
                       beta.value().col(0).transpose().array();
  return x.graph->emit(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, training, xhat = std::move(xhat), inv_std, active = std::move(active)](Graph<Scalar>& g,
                                                                                              int self) {
        const auto& go = g.grad(self);
        if (g.requires_grad(gamma.id)) g.grad(gamma.id).col(0) += go.cwiseProduct(xhat).colwise().sum().transpose();
        if (g.requires_grad(beta.id)) g.grad(beta.id).col(0) += go.colwise().sum().transpose();
        if (!g.requires_grad(x.id)) return;
        Matrix<Scalar> dxhat = go.array().rowwise() * g.value(gamma.id).col(0).transpose().array();
        if (!training) {
          g.grad(x.id).array() += dxhat.array().rowwise() * inv_std;
          return;
        }
        const Scalar n = static_cast<Scalar>(dxhat.rows());
        Eigen::Array<Scalar, 1, Eigen::Dynamic> mean_d = dxhat.colwise().sum().array() / n;
        // `active` is 1 where the variance floor is inactive and the
        // normalization statistic depends on x.
        Eigen::Array<Scalar, 1, Eigen::Dynamic> mean_dx = dxhat.cwiseProduct(xhat).colwise().sum().array() / n * active;
        g.grad(x.id).array() +=
            ((dxhat.array().rowwise() - mean_d) - xhat.array().rowwise() * mean_dx).rowwise() * inv_std;
      });
}

/// Mean binary cross-entropy over a B x 1 column of probabilities. p is
/// clamped into [1e-7, 1 - 1e-7] before the logs.
template <typename Scalar>
Var<Scalar> bce_loss(Var<Scalar> p, const std::vector<int>& labels) {
  constexpr double kClamp = 1e-7;
  if (p.cols() != 1 || p.rows() != static_cast<Index>(labels.size()) || labels.empty())
    throw std::invalid_argument("bce_loss: " + std::to_string(labels.size()) + " labels for probabilities " +
                                shape_string(p.value()));
  for (int y : labels)
    if (y != 0 && y != 1) throw std::invalid_argument("bce_loss: label must be 0 or 1, got " + std::to_string(y));
  const Scalar lo = static_cast<Scalar>(kClamp);
  const Scalar hi = static_cast<Scalar>(1.0 - kClamp);
  const Scalar n = static_cast<Scalar>(labels.size());
  Scalar total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Scalar q = std::clamp(p.value()(static_cast<Index>(i), 0), lo, hi);
    total -= labels[i] ? std::log(q) : std::log(Scalar(1) - q);
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total / n;
  return p.graph->emit(std::move(out), {p}, [p, labels, lo, hi, n](Graph<Scalar>& g, int self) {
    const Scalar go = g.grad(self)(0, 0);
    const auto& pv = g.value(p.id);
    auto& gp = g.grad(p.id);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<Index>(i);
      const Scalar q = pv(r, 0);
      if (q < lo || q > hi) continue;
      gp(r, 0) += go / n * (labels[i] ? -Scalar(1) / q : Scalar(1) / (Scalar(1) - q));
    }
  });
}

/// Mean softmax cross-entropy over a B x K batch of logits.
template <typename Scalar>
Var<Scalar> ce_loss(Var<Scalar> logits, const std::vector<int>& classes) {
  const Index k = logits.cols();
  if (k < 2) throw std::invalid_argument("ce_loss: need at least 2 classes");
  if (logits.rows() != static_cast<Index>(classes.size()) || classes.empty())
    throw std::invalid_argument("ce_loss: " + std::to_string(classes.size()) + " targets for logits " +
                                shape_string(logits.value()));
  for (int c : classes)
    if (c < 0 || c >= k)
      throw std::invalid_argument("ce_loss: class index " + std::to_string(c) + " outside [0, " + std::to_string(k) + ")");
  const auto& z = logits.value();
  Matrix<Scalar> probs(z.rows(), k);
  Scalar total = 0;
  for (Index r = 0; r < z.rows(); ++r) {
    const Scalar top = z.row(r).maxCoeff();
    probs.row(r) = (z.row(r).array() - top).exp();
    const Scalar denom = probs.row(r).sum();
    probs.row(r) /= denom;
    total += std::log(denom) + top - z(r, classes[static_cast<std::size_t>(r)]);
  }
  const Scalar n = static_cast<Scalar>(classes.size());
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total / n;
  return logits.graph->emit(std::move(out), {logits},
                            [logits, classes, probs = std::move(probs), n](Graph<Scalar>& g, int self) {
                              Matrix<Scalar> d = probs;
                              for (std::size_t i = 0; i < classes.size(); ++i) d(static_cast<Index>(i), classes[i]) -= 1;
                              g.grad(logits.id) += d * (g.grad(self)(0, 0) / n);
                            });
}

}  // namespace tff::nn
