// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Verification trials and the three evaluation conditions: clean (R),
// non-speech noise (N) and one interfering speaker (I).

#pragma once

#include "tff/sim/corpus.hpp"
#include "tff/sim/mixture.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tff::sim {

/// label 1 iff the enrollment speaker is active in the test signal.
struct Trial {
  int label = 0;
  std::string enroll;
  std::string test;  // utterance id or mixture id

  bool operator==(const Trial&) const = default;
};

using TrialList = std::vector<Trial>;

/// `n_target` same-speaker and `n_nontarget` different-speaker rows, no
/// repeated (enroll, test) pair and never enroll == test, shuffled.
TrialList build_trials(const Manifest& manifest, int n_target, int n_nontarget, std::uint64_t seed);

/// `<label> <enroll> <test>` per line.
void write_trials(const std::filesystem::path& path, const TrialList& trials);
TrialList read_trials(const std::filesystem::path& path);

inline constexpr double kTestMinRatioDb = 0.0;
inline constexpr double kTestMaxRatioDb = 5.0;

struct TestCondition {
  std::string name;
  TrialList trials;
  std::vector<std::string> mixture_ids;  // per row, empty for R
  std::vector<MixSpec> specs;            // per row, empty for R
};

struct TestSets {
  TestCondition R, N, I;
};

/// R from `build_trials(test, ...)`; N and I corrupt each row's test
/// utterance with noise at SNR, or one speaker from `interferer_pool` at SIR,
/// drawn uniformly from [0, 5] dB. The pool must not share speakers with
/// `test`.
TestSets build_test_sets(const Manifest& test, const Manifest& interferer_pool, std::uint64_t seed,
                         int n_target, int n_nontarget);

/// MixSpec log: one JSON object per line, keyed by mixture id.
void write_mixspec_log(const std::filesystem::path& path, const TestCondition& condition);
std::vector<std::pair<std::string, MixSpec>> read_mixspec_log(const std::filesystem::path& path);

}  // namespace tff::sim
