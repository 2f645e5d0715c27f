// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/nn/tensor.hpp"

#include <cmath>
#include <random>

namespace tff::nn {

/// Fills with U(-sqrt(1/fan_in), +sqrt(1/fan_in)).
template <typename Scalar>
void init_uniform_fan_in(Parameter<Scalar>& p, Index fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
void init_constant(Parameter<Scalar>& p, Scalar c) {
  p.value.setConstant(c);
}

}  // namespace tff::nn
