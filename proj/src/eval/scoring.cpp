// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/eval/scoring.hpp"

#include <map>
#include <stdexcept>

namespace tff::eval {

namespace {

nn::Matrix<float> features(const AudioSource& audio, const std::string& ref) {
  return model::to_input<float>(audio::log_spectrogram(audio(ref)));
}

[[noreturn]] void rethrow_for_row(std::size_t row, const sim::Trial& t, const std::exception& e) {
  throw std::runtime_error("trial row " + std::to_string(row + 1) + " (" + t.enroll + " " + t.test + "): " + e.what());
}

}  // namespace

ScoreSet score_fusion(const model::FusionModel<float>& model, const sim::TrialList& trials, const AudioSource& audio,
                      const std::string& system_id, const std::string& condition) {
  ScoreSet set{system_id, condition, {}, {}};
  std::map<std::string, nn::Matrix<float>> embeddings;
  for (std::size_t row = 0; row < trials.size(); ++row) {
    const auto& t = trials[row];
    try {
      auto it = embeddings.find(t.enroll);
      if (it == embeddings.end()) it = embeddings.emplace(t.enroll, model.embedding(features(audio, t.enroll))).first;
      set.scores.push_back(static_cast<double>(model.detect_with_embedding(it->second, features(audio, t.test))));
    } catch (const std::exception& e) {
      rethrow_for_row(row, t, e);
    }
    set.labels.push_back(t.label);
  }
  return set;
}

ScoreSet score_baseline(const model::BaselineModel<float>& model, const sim::TrialList& trials,
                        const AudioSource& audio, const std::string& system_id, const std::string& condition) {
  ScoreSet set{system_id, condition, {}, {}};
  std::map<std::string, Eigen::VectorXd> embeddings;
  const auto embed = [&](const std::string& ref) -> const Eigen::VectorXd& {
    auto it = embeddings.find(ref);
    if (it == embeddings.end()) it = embeddings.emplace(ref, model.embedding(features(audio, ref))).first;
    return it->second;
  };
  for (std::size_t row = 0; row < trials.size(); ++row) {
    const auto& t = trials[row];
    try {
      const Eigen::VectorXd e = embed(t.enroll);
      set.scores.push_back(model::cosine_score(e, embed(t.test)));
    } catch (const std::exception& e) {
      rethrow_for_row(row, t, e);
    }
    set.labels.push_back(t.label);
  }
  return set;
}

}  // namespace tff::eval
