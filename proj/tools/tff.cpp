// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 runtime or I/O failure,
// 2 usage or format error, 3 numerical failure.

#include "tff/audio/wav.hpp"
#include "tff/error.hpp"
#include "tff/eval/metrics.hpp"
#include "tff/eval/scoring.hpp"
#include "tff/model/summary.hpp"
#include "tff/sim/corpus.hpp"
#include "tff/sim/mixture.hpp"
#include "tff/sim/random.hpp"
#include "tff/sim/testsets.hpp"
#include "tff/train/checkpoint.hpp"
#include "tff/train/config.hpp"
#include "tff/train/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tff;

namespace {

constexpr int kLayoutVersion = 1;

void log(const std::string& msg) { std::cerr << msg << std::endl; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

// Records what produced a run directory so artifacts can be regenerated.
void write_run_info(const fs::path& dir, const std::string& command, const nlohmann::ordered_json& args) {
  nlohmann::ordered_json j;
  j["format"] = "tff-run";
  j["layout_version"] = kLayoutVersion;
  j["command"] = command;
  j["args"] = args;
  write_text(dir / ("run_" + command + ".json"), j.dump(2) + "\n");
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

// ---- synth-corpus --------------------------------------------------------

struct SynthArgs {
  int speakers = 0;
  int utts = 0;
  fs::path out;
  std::uint64_t seed = 0;
};

void synth_corpus(const SynthArgs& a) {
  make_out_dir(a.out);
  const auto corpus = sim::synth_corpus(a.speakers, a.utts, a.seed);
  sim::save_corpus(corpus, a.out);
  write_run_info(a.out, "synth-corpus", {{"speakers", a.speakers}, {"utts_per_speaker", a.utts}, {"seed", a.seed}});
  std::cout << (a.out / "manifest.jsonl").string() << " " << corpus.manifest.size() << " utterances\n";
}

// ---- make-tests ----------------------------------------------------------

struct MakeTestsArgs {
  fs::path manifest;
  fs::path out;
  std::uint64_t seed = 0;
  int held_out = 10;
  double val_fraction = 0.1;
  int targets = 500;
  int nontargets = 500;
};

void make_tests(const MakeTestsArgs& a) {
  const auto corpus = sim::load_corpus(a.manifest);
  const auto split = sim::split_speakers(corpus.manifest, a.held_out, a.val_fraction);
  const auto sets = sim::build_test_sets(sim::filter_speakers(corpus.manifest, split.test),
                                         sim::filter_speakers(corpus.manifest, split.val), a.seed, a.targets,
                                         a.nontargets);
  make_out_dir(a.out / "mix");
  sim::write_split(a.out / "split.json", split);
  const sim::Resolver clean = [&](const std::string& ref) { return corpus.wave(ref); };
  for (const sim::TestCondition* cond : {&sets.R, &sets.N, &sets.I}) {
    sim::write_trials(a.out / ("trials_" + cond->name + ".txt"), cond->trials);
    if (cond->specs.empty()) continue;
    sim::write_mixspec_log(a.out / ("mixspec_" + cond->name + ".jsonl"), *cond);
    for (std::size_t k = 0; k < cond->specs.size(); ++k) {
      try {
        audio::write_wav(a.out / "mix" / (cond->mixture_ids[k] + ".wav"), sim::make_mixture(cond->specs[k], clean).mix);
      } catch (const std::exception& e) {
        throw std::runtime_error("condition " + cond->name + " row " + std::to_string(k + 1) + " (" +
                                 cond->mixture_ids[k] + "): " + e.what());
      }
    }
  }
  write_run_info(a.out, "make-tests",
                 {{"manifest", fs::absolute(a.manifest).string()},
                  {"seed", a.seed},
                  {"held_out", a.held_out},
                  {"val_fraction", a.val_fraction},
                  {"targets", a.targets},
                  {"nontargets", a.nontargets}});
  std::cout << "trials per condition " << sets.R.trials.size() << "\n";
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  fs::path config;
  fs::path corpus;
  fs::path out;
  std::uint64_t seed = 0;
  std::string mode;
  fs::path resume;
  int held_out = 10;
};

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return buf;
}

std::string metrics_row(const train::EpochStats& s) {
  nlohmann::ordered_json j;
  j["epoch"] = s.epoch;
  j["train_loss"] = s.train_loss;
  j["val_eer"] = s.val_eer;
  j["lr"] = s.lr;
  return j.dump();
}

void train_cmd(const TrainArgs& a) {
  auto cfg = train::load_config(a.config);
  cfg.seed = a.seed;
  if (!a.mode.empty()) cfg.mode = train::mode_from_string(a.mode);
  cfg.validate();
  const auto corpus = sim::load_corpus(a.corpus);
  const auto split = sim::split_speakers(corpus.manifest, a.held_out, cfg.val_fraction);
  make_out_dir(a.out);

  train::Trainer trainer(cfg, corpus, split);
  std::vector<std::string> rows;
  const auto metrics_path = a.out / "metrics.jsonl";
  if (!a.resume.empty()) {
    trainer.restore(train::load_checkpoint(a.resume));
    // Keep the rows of the epochs the checkpoint already covers.
    std::ifstream in(metrics_path);
    for (std::string line; std::getline(in, line) && static_cast<int>(rows.size()) < trainer.epochs_done();)
      rows.push_back(line);
    log("resuming after epoch " + std::to_string(trainer.epochs_done()));
  }
  sim::write_split(a.out / "split.json", split);
  write_text(a.out / "config.toml", train::to_text(cfg));
  write_run_info(a.out, "train",
                 {{"config", fs::absolute(a.config).string()},
                  {"corpus", fs::absolute(a.corpus).string()},
                  {"seed", a.seed},
                  {"mode", train::to_string(cfg.mode)},
                  {"held_out", a.held_out}});

  const auto flush_metrics = [&] {
    std::string text;
    for (const auto& r : rows) text += r + "\n";
    write_text(metrics_path, text);
  };
  flush_metrics();
  while (trainer.epochs_done() < cfg.epochs) {
    const auto stats = trainer.train_epoch();
    const auto ckpt = trainer.checkpoint();
    train::save_checkpoint(ckpt, a.out / epoch_name(stats.epoch));
    rows.push_back(metrics_row(stats));
    flush_metrics();
    log(metrics_row(stats));
  }
  train::save_checkpoint(trainer.checkpoint(), a.out / "model.ckpt");
  std::cout << (a.out / "model.ckpt").string() << "\n";
}

// ---- score ---------------------------------------------------------------

struct ScoreArgs {
  fs::path model;
  fs::path trials;
  fs::path manifest;
  fs::path mix_dir;
  fs::path out;
  std::string system;
  std::string condition;
};

void score_cmd(const ScoreArgs& a) {
  const auto ckpt = train::load_checkpoint(a.model);
  const auto trials = sim::read_trials(a.trials);
  const auto corpus = sim::load_corpus(a.manifest);
  const fs::path mix_dir = a.mix_dir.empty() ? a.trials.parent_path() / "mix" : a.mix_dir;
  const eval::AudioSource source = [&](const std::string& ref) {
    auto it = corpus.audio.find(ref);
    return it != corpus.audio.end() ? it->second : audio::read_wav(mix_dir / (ref + ".wav"));
  };
  std::string condition = a.condition;
  if (condition.empty()) {
    // trials_<C>.txt names its condition.
    const auto stem = a.trials.stem().string();
    const auto at = stem.rfind('_');
    condition = at == std::string::npos ? stem : stem.substr(at + 1);
  }
  const std::string kind = ckpt.meta("kind");
  const std::string system = a.system.empty() ? kind : a.system;
  eval::ScoreSet set;
  if (kind == train::to_string(train::Mode::Fusion))
    set = eval::score_fusion(*train::load_fusion(ckpt), trials, source, system, condition);
  else
    set = eval::score_baseline(*train::load_baseline(ckpt), trials, source, system, condition);
  if (a.out.has_parent_path()) make_out_dir(a.out.parent_path());
  eval::write_scores(a.out, set);
  std::cout << a.out.string() << " " << set.size() << " scores\n";
}

// ---- eval / det-plot -----------------------------------------------------

// A score file named <system>_<condition>.txt (optionally prefixed with
// "scores_") carries its labels in the name.
eval::ScoreSet load_named_scores(const fs::path& path) {
  auto set = eval::read_scores(path);
  std::string stem = path.stem().string();
  if (stem.rfind("scores_", 0) == 0) stem = stem.substr(7);
  const auto at = stem.rfind('_');
  if (at == std::string::npos || at == 0 || at + 1 == stem.size()) {
    set.system_id = stem;
    set.condition = "all";
  } else {
    set.system_id = stem.substr(0, at);
    set.condition = stem.substr(at + 1);
  }
  set.validate();
  return set;
}

void eval_cmd(const std::vector<fs::path>& scores, const fs::path& out) {
  std::vector<eval::ScoreSet> sets;
  for (const auto& p : scores) sets.push_back(load_named_scores(p));
  make_out_dir(out);
  const auto report = eval::emit_report(sets, out);
  const auto json = report.to_json();
  write_text(out / "report.json", json);
  std::cout << json;
}

void det_plot_cmd(const std::vector<fs::path>& scores, const fs::path& out) {
  std::vector<eval::ScoreSet> sets;
  for (const auto& p : scores) sets.push_back(load_named_scores(p));
  const auto svg = eval::det_plot_svg(sets);
  if (out.has_parent_path()) make_out_dir(out.parent_path());
  write_text(out, svg);
  std::cout << out.string() << "\n";
}

// ---- model-info ----------------------------------------------------------

std::string baseline_info(const model::BaselineModel<float>& m, const train::TrainConfig& cfg, int classes) {
  const auto& t = cfg.tcn;
  std::string out;
  char line[200];
  std::snprintf(line, sizeof line, "TcnConfig {N, B, H, P, X, R} = {%d, %d, %d, %d, %d, %d}\n", t.channels,
                t.bottleneck, t.hidden, t.kernel, t.blocks, t.repeats);
  out += line;
  std::snprintf(line, sizeof line, "ASP attention channels = %d; embedding = %d; classes = %d\n\n", cfg.asp_channels,
                cfg.embedding_dim, classes);
  out += line;
  std::snprintf(line, sizeof line, "%-28s %12s\n", "layer", "params");
  out += line;
  for (const auto& l : model::layer_breakdown(m.params())) {
    std::snprintf(line, sizeof line, "%-28s %12lld\n", l.layer.c_str(), static_cast<long long>(l.params));
    out += line;
  }
  std::snprintf(line, sizeof line, "%-28s %12lld\n", "total", static_cast<long long>(model::param_count(m.params())));
  out += line;
  return out;
}

void model_info_cmd(const fs::path& path) {
  // The whole text is assembled before anything is printed, so a bad file
  // produces no partial output.
  const auto ckpt = train::load_checkpoint(path);
  const auto cfg = train::parse_config(ckpt.meta("config"), path.string() + " config");
  std::string text = "checkpoint " + path.filename().string() + ": " + ckpt.meta("kind") + ", epoch " +
                     ckpt.meta("epoch") + "\n";
  if (ckpt.meta("kind") == train::to_string(train::Mode::Fusion)) {
    const auto m = train::load_fusion(ckpt);
    text += model::model_info_report(cfg.fusion_config());
    if (model::param_count(m->params()) != model::param_count(model::FusionModel<float>(cfg.fusion_config(), 0).params()))
      throw FormatError(path.string() + ": tensor sizes disagree with the stored configuration");
  } else {
    const auto m = train::load_baseline(ckpt);
    text += baseline_info(*m, cfg, std::stoi(ckpt.meta("num_classes")));
  }
  std::cout << text;
}

int run(int argc, char** argv) {
  CLI::App app{"Target-speaker fusion detector: corpus synthesis, training and evaluation"};
  app.require_subcommand(1);
  std::function<void()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-corpus", "Synthesize a speaker corpus (WAV files + manifest.jsonl)");
  s->add_option("--speakers", synth.speakers, "number of speakers")->required()->check(CLI::PositiveNumber);
  s->add_option("--utts-per-speaker", synth.utts, "utterances per speaker")->required()->check(CLI::PositiveNumber);
  s->add_option("--out", synth.out, "output directory")->required();
  s->add_option("--seed", synth.seed, "random seed")->required();
  s->callback([&] { action = [&] { synth_corpus(synth); }; });

  MakeTestsArgs mt;
  auto* m = app.add_subcommand("make-tests", "Build the R/N/I trial lists and mixtures");
  m->add_option("--manifest", mt.manifest, "corpus manifest.jsonl")->required();
  m->add_option("--out", mt.out, "output directory")->required();
  m->add_option("--seed", mt.seed, "random seed")->required();
  m->add_option("--held-out", mt.held_out, "held-out (test) speakers")->capture_default_str();
  m->add_option("--val-fraction", mt.val_fraction, "validation fraction of the remaining speakers")
      ->capture_default_str();
  m->add_option("--targets", mt.targets, "target trials per condition")->capture_default_str();
  m->add_option("--nontargets", mt.nontargets, "nontarget trials per condition")->capture_default_str();
  m->callback([&] { action = [&] { make_tests(mt); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the fusion detector or the baseline");
  t->add_option("--config", tr.config, "config file")->required();
  t->add_option("--corpus", tr.corpus, "corpus manifest.jsonl")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--seed", tr.seed, "random seed (overrides the config)")->required();
  t->add_option("--mode", tr.mode, "fusion or baseline (overrides the config)")
      ->check(CLI::IsMember({"fusion", "baseline"}));
  t->add_option("--resume", tr.resume, "checkpoint to continue from");
  t->add_option("--held-out", tr.held_out, "held-out speakers excluded from training")->capture_default_str();
  t->callback([&] { action = [&] { train_cmd(tr); }; });

  ScoreArgs sc;
  auto* c = app.add_subcommand("score", "Score a trial list with a trained model");
  c->add_option("--model", sc.model, "checkpoint")->required();
  c->add_option("--trials", sc.trials, "trial list")->required();
  c->add_option("--manifest", sc.manifest, "corpus manifest.jsonl")->required();
  c->add_option("--mix-dir", sc.mix_dir, "mixture WAV directory (default: <trials dir>/mix)");
  c->add_option("--out", sc.out, "score file")->required();
  c->add_option("--system", sc.system, "system label (default: checkpoint kind)");
  c->add_option("--condition", sc.condition, "condition label (default: from the trial file name)");
  c->callback([&] { action = [&] { score_cmd(sc); }; });

  std::vector<fs::path> eval_scores;
  fs::path eval_out;
  auto* e = app.add_subcommand("eval", "EER report over score files named <system>_<condition>.txt");
  e->add_option("--scores", eval_scores, "score files")->required();
  e->add_option("--out", eval_out, "output directory")->required();
  e->callback([&] { action = [&] { eval_cmd(eval_scores, eval_out); }; });

  std::vector<fs::path> det_scores;
  fs::path det_out;
  auto* d = app.add_subcommand("det-plot", "DET curves as SVG");
  d->add_option("--scores", det_scores, "score files")->required();
  d->add_option("--out", det_out, "SVG file")->required();
  d->callback([&] { action = [&] { det_plot_cmd(det_scores, det_out); }; });

  fs::path info_ckpt;
  auto* i = app.add_subcommand("model-info", "Print the configuration and parameter counts of a checkpoint");
  i->add_option("--ckpt", info_ckpt, "checkpoint")->required();
  i->callback([&] { action = [&] { model_info_cmd(info_ckpt); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    std::cerr << app.help();
    return 2;
  }

  try {
    action();
    return 0;
  } catch (const NumericalError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 3;
  } catch (const FormatError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
