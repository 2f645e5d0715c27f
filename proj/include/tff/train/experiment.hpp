// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end comparison of the fusion detector and the cosine baseline on a
// synthetic corpus: synthesize, split, train both systems on the same pair
// stream, score the R/N/I conditions and build the EER report.

#pragma once

#include "tff/eval/metrics.hpp"
#include "tff/sim/corpus.hpp"
#include "tff/sim/testsets.hpp"
#include "tff/train/config.hpp"
#include "tff/train/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace tff::train {

struct ExperimentConfig {
  int speakers = 50;  // training + validation + held-out
  int held_out = 10;
  int utts_per_speaker = 20;
  int n_target = 500;
  int n_nontarget = 500;
  TrainConfig train;  // mode is overridden per system
};

/// The desk-scale settings shipped in configs/desk.toml.
ExperimentConfig desk_experiment(std::uint64_t seed);

struct ExperimentResult {
  std::vector<EpochStats> fusion_log;
  std::vector<EpochStats> baseline_log;
  std::string fusion_checkpoint;    // serialized bytes
  std::string baseline_checkpoint;  // serialized bytes
  std::vector<eval::ScoreSet> scores;
  eval::Report report;
  std::string report_json;
};

using LogFn = std::function<void(const std::string&)>;

/// Runs everything in memory. When `out_dir` is non-empty the checkpoints,
/// score files, DET CSVs, report and plot are written there as well.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                                const LogFn& log = {});

}  // namespace tff::train
