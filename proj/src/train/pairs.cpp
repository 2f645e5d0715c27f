// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/train/pairs.hpp"

#include "tff/sim/random.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace tff::train {

UtterancePool::UtterancePool(const sim::Corpus& corpus, const sim::Manifest& records) {
  for (const auto& r : records) {
    by_speaker_[r.speaker_id].push_back(samples_.size());
    samples_.push_back({r.utt_id, r.speaker_id, &corpus.wave(r.utt_id)});
  }
  for (const auto& [spk, idx] : by_speaker_) {
    if (idx.size() < 2) throw std::invalid_argument("UtterancePool: speaker '" + spk + "' has fewer than 2 utterances");
    speaker_ids_.push_back(spk);
  }
  if (speaker_ids_.size() < 2) throw std::invalid_argument("UtterancePool: need at least 2 speakers");
}

const std::vector<std::size_t>& UtterancePool::utterances_of(const std::string& speaker) const {
  auto it = by_speaker_.find(speaker);
  if (it == by_speaker_.end()) throw std::out_of_range("UtterancePool: unknown speaker '" + speaker + "'");
  return it->second;
}

PairBatch make_pairs(const UtterancePool& pool, std::span<const std::size_t> targets, std::uint64_t seed,
                     const sim::AugmentPolicy& policy) {
  const std::size_t b = targets.size();
  if (b < 2) throw std::invalid_argument("make_pairs: batch needs at least 2 rows");
  sim::Rng rng(sim::derive_seed(seed, {sim::tag("pairs")}));
  std::vector<int> labels(b, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(b / 2), 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::vector<sim::CleanSample> in_batch;
  for (auto t : targets) in_batch.push_back(pool[t]);

  PairBatch batch;
  batch.rows.reserve(b);
  for (std::size_t r = 0; r < b; ++r) {
    const sim::CleanSample& target = pool[targets[r]];
    PairRow row;
    row.label = labels[r];
    if (row.label == 1) {
      const auto& same = pool.utterances_of(target.speaker_id);
      std::size_t pick;
      do pick = same[sim::uniform_index(rng, same.size())];
      while (pool[pick].utt_id == target.utt_id);
      row.enroll_utt = pool[pick].utt_id;
      row.enroll_speaker = target.speaker_id;
    } else {
      const auto& spk = pool.speakers();
      std::string other;
      do other = spk[sim::uniform_index(rng, spk.size())];
      while (other == target.speaker_id);
      const auto& utts = pool.utterances_of(other);
      row.enroll_utt = pool[utts[sim::uniform_index(rng, utts.size())]].utt_id;
      row.enroll_speaker = other;
    }
    const sim::Variant variant = sim::kAllVariants[sim::uniform_index(rng, 4)];
    const std::uint64_t aug_seed = rng();
    // In-batch interferers first; if the batch holds no eligible speaker,
    // fall back to the whole pool.
    const std::set<std::string> exclude{row.enroll_speaker};
    const bool batch_has_other = std::any_of(in_batch.begin(), in_batch.end(), [&](const sim::CleanSample& c) {
      return c.speaker_id != target.speaker_id && c.speaker_id != row.enroll_speaker;
    });
    row.test = sim::augment_sample(target, variant, batch_has_other ? std::span<const sim::CleanSample>(in_batch) : pool.samples(),
                                   exclude, aug_seed, policy);
    batch.rows.push_back(std::move(row));
  }
  return batch;
}

PairBatch sample_pairs(const UtterancePool& pool, int batch_size, std::uint64_t seed, const sim::AugmentPolicy& policy) {
  if (batch_size < 2) throw std::invalid_argument("sample_pairs: batch_size must be >= 2");
  sim::Rng rng(sim::derive_seed(seed, {sim::tag("sample-targets")}));
  std::vector<std::size_t> targets(static_cast<std::size_t>(batch_size));
  for (auto& t : targets) t = sim::uniform_index(rng, pool.size());
  return make_pairs(pool, targets, seed, policy);
}

}  // namespace tff::train
