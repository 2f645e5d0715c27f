// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/audio/dsp.hpp"
#include "tff/eval/metrics.hpp"
#include "tff/model/baseline.hpp"
#include "tff/model/fusion.hpp"
#include "tff/sim/testsets.hpp"

#include <functional>
#include <string>

namespace tff::eval {

/// Looks up the audio behind a trial reference (utterance id, mixture id or path).
using AudioSource = std::function<audio::Waveform(const std::string& ref)>;

/// Detector probabilities, one per row in order. Enrollment embeddings are
/// computed once per distinct enrollment reference.
ScoreSet score_fusion(const model::FusionModel<float>& model, const sim::TrialList& trials, const AudioSource& audio,
                      const std::string& system_id, const std::string& condition);

/// Cosine similarity of baseline embeddings, one per row in order.
ScoreSet score_baseline(const model::BaselineModel<float>& model, const sim::TrialList& trials,
                        const AudioSource& audio, const std::string& system_id, const std::string& condition);

}  // namespace tff::eval
