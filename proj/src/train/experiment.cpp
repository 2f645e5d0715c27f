// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/train/experiment.hpp"

#include "tff/eval/scoring.hpp"
#include "tff/sim/random.hpp"

#include <cstdio>
#include <fstream>
#include <map>

namespace tff::train {

ExperimentConfig desk_experiment(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.train.seed = seed;
  cfg.train.batch_size = 16;
  cfg.train.epochs = 10;
  cfg.train.grad_clip = 5.0;
  return cfg;
}

namespace {

std::string describe(const std::string& system, const EpochStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s epoch %d: train_loss %.4f val_eer %.2f%% lr %.3g", system.c_str(), s.epoch,
                s.train_loss, 100 * s.val_eer, s.lr);
  return buf;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log) {
  const auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  const std::uint64_t seed = cfg.train.seed;
  const auto corpus = sim::synth_corpus(cfg.speakers, cfg.utts_per_speaker, sim::derive_seed(seed, {sim::tag("corpus")}));
  const auto split = sim::split_speakers(corpus.manifest, cfg.held_out, cfg.train.val_fraction);
  say("corpus: " + std::to_string(split.train.size()) + " train, " + std::to_string(split.val.size()) + " val, " +
      std::to_string(split.test.size()) + " test speakers");

  ExperimentResult result;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  TrainConfig fusion_cfg = cfg.train;
  fusion_cfg.mode = Mode::Fusion;
  Trainer fusion(fusion_cfg, corpus, split);
  for (int e = 0; e < fusion_cfg.epochs; ++e) {
    result.fusion_log.push_back(fusion.train_epoch());
    say(describe("fusion", result.fusion_log.back()));
  }
  result.fusion_checkpoint = serialize(fusion.checkpoint());

  TrainConfig baseline_cfg = cfg.train;
  baseline_cfg.mode = Mode::Baseline;
  Trainer baseline(baseline_cfg, corpus, split);
  for (int e = 0; e < baseline_cfg.epochs; ++e) {
    result.baseline_log.push_back(baseline.train_epoch());
    say(describe("baseline", result.baseline_log.back()));
  }
  result.baseline_checkpoint = serialize(baseline.checkpoint());

  // Held-out speakers form the trials; validation speakers supply the
  // interferers of condition I, so no test voice is ever an interferer.
  const auto sets = sim::build_test_sets(sim::filter_speakers(corpus.manifest, split.test),
                                         sim::filter_speakers(corpus.manifest, split.val),
                                         sim::derive_seed(seed, {sim::tag("test-sets")}), cfg.n_target, cfg.n_nontarget);
  const sim::Resolver clean = [&](const std::string& ref) { return corpus.wave(ref); };
  for (const sim::TestCondition* cond : {&sets.R, &sets.N, &sets.I}) {
    std::map<std::string, const sim::MixSpec*> specs;
    for (std::size_t k = 0; k < cond->specs.size(); ++k) specs[cond->mixture_ids[k]] = &cond->specs[k];
    const eval::AudioSource source = [&](const std::string& ref) {
      auto it = specs.find(ref);
      return it == specs.end() ? corpus.wave(ref) : sim::make_mixture(*it->second, clean).mix;
    };
    result.scores.push_back(eval::score_fusion(fusion.fusion(), cond->trials, source, "fusion", cond->name));
    result.scores.push_back(eval::score_baseline(baseline.baseline(), cond->trials, source, "baseline", cond->name));
    say("scored condition " + cond->name);
  }
  // Row order of the report: fusion R N I, then baseline R N I.
  std::vector<eval::ScoreSet> ordered;
  for (const char* system : {"fusion", "baseline"})
    for (const auto& s : result.scores)
      if (s.system_id == system) ordered.push_back(s);
  result.scores = ordered;
  result.report = eval::emit_report(result.scores, out_dir);
  result.report_json = result.report.to_json();

  if (!out_dir.empty()) {
    const auto write = [&](const std::string& name, const std::string& bytes) {
      std::ofstream out(out_dir / name, std::ios::binary);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    };
    write("fusion.ckpt", result.fusion_checkpoint);
    write("baseline.ckpt", result.baseline_checkpoint);
    write("report.json", result.report_json);
    write("det.svg", eval::det_plot_svg(result.scores));
    for (const auto& s : result.scores) eval::write_scores(out_dir / ("scores_" + s.system_id + "_" + s.condition + ".txt"), s);
  }
  return result;
}

}  // namespace tff::train
