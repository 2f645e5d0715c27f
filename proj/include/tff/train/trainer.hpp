// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/model/baseline.hpp"
#include "tff/model/fusion.hpp"
#include "tff/nn/adam.hpp"
#include "tff/sim/corpus.hpp"
#include "tff/sim/testsets.hpp"
#include "tff/train/checkpoint.hpp"
#include "tff/train/config.hpp"
#include "tff/train/pairs.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace tff::train {

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_eer = 0;
  double lr = 0;  // learning rate used during the epoch
};

/// Runs either system on the shared pair pipeline. All randomness derives
/// from (config.seed, epoch, batch), so identical configs give identical
/// batches in both modes and a restored checkpoint continues bit-identically.
class Trainer {
 public:
  /// `corpus` must outlive the trainer. Training uses split.train, validation
  /// split.val.
  Trainer(const TrainConfig& cfg, const sim::Corpus& corpus, const sim::SpeakerSplit& split);
  ~Trainer();

  const TrainConfig& config() const { return cfg_; }
  int epochs_done() const { return epochs_done_; }
  const SchedulerState& scheduler() const { return sched_; }
  nn::ParameterStore<float>& params();
  const model::FusionModel<float>& fusion() const;
  const model::BaselineModel<float>& baseline() const;
  /// Training speakers in class-index order (baseline head).
  const std::vector<std::string>& classes() const { return classes_; }

  /// One optimization step on a batch at the given learning rate; returns the loss.
  double train_step(const PairBatch& batch, double lr);
  /// Trains one epoch, evaluates, steps the scheduler.
  EpochStats train_epoch();
  /// EER on the fixed validation trial list.
  double validate() const;

  Checkpoint checkpoint() const;
  /// Loads parameters, optimizer, scheduler and epoch counter. The
  /// checkpoint's mode and model shape must match this trainer.
  void restore(const Checkpoint& ckpt);

 private:
  struct ValRow {
    std::string enroll;
    int label;
    nn::Matrix<float> test;
  };

  TrainConfig cfg_;
  const sim::Corpus& corpus_;
  UtterancePool train_pool_;
  std::vector<std::string> classes_;
  std::map<std::string, int> class_index_;
  std::unique_ptr<model::FusionModel<float>> fusion_;
  std::unique_ptr<model::BaselineModel<float>> baseline_;
  nn::AdamState<float> adam_;
  SchedulerState sched_;
  int epochs_done_ = 0;
  std::vector<ValRow> val_rows_;
  std::map<std::string, nn::Matrix<float>> val_enroll_;
};

/// Tensors and metadata of a trained model; shared by the trainer and by
/// tools that only need inference.
void store_to_checkpoint(const nn::ParameterStore<float>& store, Checkpoint& ckpt, const std::string& prefix);
void store_from_checkpoint(nn::ParameterStore<float>& store, const Checkpoint& ckpt, const std::string& prefix);

/// Rebuilds the model described by a checkpoint's metadata and loads its
/// parameters. Throws FormatError if the checkpoint holds the other mode.
std::unique_ptr<model::FusionModel<float>> load_fusion(const Checkpoint& ckpt);
std::unique_ptr<model::BaselineModel<float>> load_baseline(const Checkpoint& ckpt);

}  // namespace tff::train
