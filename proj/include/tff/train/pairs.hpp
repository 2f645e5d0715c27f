// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/sim/augment.hpp"
#include "tff/sim/corpus.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tff::train {

/// Clean utterances of a set of speakers, grouped for pair drawing.
class UtterancePool {
 public:
  /// Borrows audio from `corpus`, which must outlive the pool.
  UtterancePool(const sim::Corpus& corpus, const sim::Manifest& records);

  std::size_t size() const { return samples_.size(); }
  const sim::CleanSample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const sim::CleanSample> samples() const { return samples_; }
  const std::vector<std::string>& speakers() const { return speaker_ids_; }
  /// Sample indices of one speaker.
  const std::vector<std::size_t>& utterances_of(const std::string& speaker) const;

 private:
  std::vector<sim::CleanSample> samples_;
  std::vector<std::string> speaker_ids_;  // sorted
  std::map<std::string, std::vector<std::size_t>> by_speaker_;
};

struct PairRow {
  std::string enroll_utt;
  std::string enroll_speaker;
  sim::AugmentedSample test;  // target speaker is test.speaker_id
  int label = 0;
};

struct PairBatch {
  std::vector<PairRow> rows;
};

/// One training batch built around the given target utterances (indices
/// into the pool). floor(B/2) randomly chosen rows are positives: a clean
/// enrollment from another utterance of the target's speaker. The rest are
/// negatives: a clean enrollment from a different speaker. Every test signal
/// is one of the four augmentation variants, chosen uniformly; interferers
/// come from the batch's targets and never share the enrollment speaker.
PairBatch make_pairs(const UtterancePool& pool, std::span<const std::size_t> targets, std::uint64_t seed,
                     const sim::AugmentPolicy& policy = {});

/// As make_pairs with `batch_size` targets drawn uniformly from the pool.
PairBatch sample_pairs(const UtterancePool& pool, int batch_size, std::uint64_t seed,
                       const sim::AugmentPolicy& policy = {});

}  // namespace tff::train
