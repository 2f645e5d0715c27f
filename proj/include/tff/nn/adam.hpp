// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/error.hpp"
#include "tff/nn/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

namespace tff::nn {

/// Bias-corrected Adam moments, keyed by parameter name.
template <typename Scalar>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::map<std::string, Matrix<Scalar>> m;
  std::map<std::string, Matrix<Scalar>> v;
};

/// Global L2 norm of all trainable gradients.
template <typename Scalar>
double grad_norm(const ParameterStore<Scalar>& store) {
  double total = 0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (p.trainable) total += p.grad.template cast<double>().squaredNorm();
  }
  return std::sqrt(total);
}

/// Rescales gradients so their global norm is at most `max_norm`. Returns the
/// norm before clipping.
template <typename Scalar>
double clip_grad_norm(ParameterStore<Scalar>& store, double max_norm) {
  const double norm = grad_norm(store);
  if (norm > max_norm) {
    const auto factor = static_cast<Scalar>(max_norm / norm);
    for (std::size_t i = 0; i < store.size(); ++i)
      if (store[i].trainable) store[i].grad *= factor;
  }
  return norm;
}

/// One Adam update of every trainable parameter from its accumulated grad.
/// Throws NumericalError naming the first parameter with a non-finite gradient;
/// in that case no parameter is modified.
template <typename Scalar>
void adam_step(ParameterStore<Scalar>& store, AdamState<Scalar>& state, double lr) {
  if (!(lr >= 0)) throw std::invalid_argument("adam_step: learning rate must be >= 0");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (p.trainable && !p.grad.allFinite()) throw NumericalError("non-finite gradient in parameter '" + p.name + "'");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(state.beta1);
  const auto b2 = static_cast<Scalar>(state.beta2);
  const auto c1 = static_cast<Scalar>(1.0 / (1.0 - std::pow(state.beta1, t)));
  const auto c2 = static_cast<Scalar>(1.0 / (1.0 - std::pow(state.beta2, t)));
  const auto eps = static_cast<Scalar>(state.eps);
  const auto step = static_cast<Scalar>(lr);
  for (std::size_t i = 0; i < store.size(); ++i) {
    auto& p = store[i];
    if (!p.trainable) continue;
    auto& m = state.m[p.name];
    auto& v = state.v[p.name];
    if (m.size() == 0) {
      m = Matrix<Scalar>::Zero(p.value.rows(), p.value.cols());
      v = Matrix<Scalar>::Zero(p.value.rows(), p.value.cols());
    }
    m = b1 * m + (Scalar(1) - b1) * p.grad;
    v = b2 * v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= step * (m.array() * c1) / ((v.array() * c2).sqrt() + eps);
  }
}

}  // namespace tff::nn
