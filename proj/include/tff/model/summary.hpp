// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Parameter accounting for model-info.

#pragma once

#include "tff/model/fusion.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tff::model {

/// Total trainable scalars.
template <typename Scalar>
std::int64_t param_count(const ParameterStore<Scalar>& store) {
  return store.trainable_count();
}

struct LayerCount {
  std::string layer;  // parameter-name prefix, e.g. "enroll_tcn.block3"
  std::int64_t params = 0;
};

/// Trainable scalars grouped by the first two components of each parameter
/// name, in registration order.
std::vector<LayerCount> layer_breakdown(const ParameterStore<float>& store);

/// The full model-info text for a fusion configuration: hyperparameters, the
/// per-layer table, the total and its relation to the published size.
std::string model_info_report(const FusionConfig& cfg);

/// The published approximate size of the fusion model.
inline constexpr std::int64_t kPublishedParamCount = 959000;

}  // namespace tff::model
