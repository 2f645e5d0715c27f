// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/model/baseline.hpp"
#include "tff/model/fusion.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace tff::train {

enum class Mode { Fusion, Baseline };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct TrainConfig {
  Mode mode = Mode::Fusion;
  double lr = 1e-4;
  int epochs = 20;
  int batch_size = 42;
  double plateau_factor = 0.5;
  std::uint64_t seed = 0;
  double grad_clip = 0.0;  // global-norm limit, 0 disables
  int val_target_trials = 200;
  int val_nontarget_trials = 200;
  double val_fraction = 0.1;
  model::TcnConfig tcn;
  int asp_channels = 128;
  int embedding_dim = 192;

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;

  model::FusionConfig fusion_config() const { return {tcn, asp_channels}; }
  model::BaselineConfig baseline_config(int num_classes) const { return {tcn, asp_channels, embedding_dim, num_classes}; }

  bool operator==(const TrainConfig&) const = default;
};

/// TOML-style `key = value` lines; `#` starts a comment, strings may be quoted.
/// Unknown keys and malformed values raise FormatError with the line number.
TrainConfig parse_config(const std::string& text, const std::string& origin = "<config>");
TrainConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_text(c)) == c.
std::string to_text(const TrainConfig& cfg);

/// Reduce-on-plateau state for a lower-is-better validation metric.
struct SchedulerState {
  double lr = 1e-4;
  double best = 0;
  bool has_best = false;
  int epochs_since_improvement = 0;

  bool operator==(const SchedulerState&) const = default;
};

/// lr *= factor whenever the metric fails to improve on the best so far.
SchedulerState reduce_on_plateau(SchedulerState state, double val_metric, double factor = 0.5);

}  // namespace tff::train
