// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/error.hpp"
#include "tff/sim/random.hpp"
#include "tff/train/checkpoint.hpp"
#include "tff/train/config.hpp"
#include "tff/train/experiment.hpp"
#include "tff/train/pairs.hpp"
#include "tff/train/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace tff;
using namespace tff::train;

namespace {

const sim::Corpus& corpus() {
  static const sim::Corpus c = sim::synth_corpus(6, 4, 314);
  return c;
}

sim::SpeakerSplit split() { return sim::split_speakers(corpus().manifest, 0, 0.3); }

UtterancePool train_pool() {
  return UtterancePool(corpus(), sim::filter_speakers(corpus().manifest, split().train));
}

TrainConfig tiny_config(Mode mode = Mode::Fusion) {
  TrainConfig c;
  c.mode = mode;
  c.seed = 5;
  c.batch_size = 4;
  c.epochs = 3;
  c.grad_clip = 5.0;
  c.tcn = {257, 8, 8, 3, 2, 1};
  c.asp_channels = 8;
  c.embedding_dim = 16;
  c.val_target_trials = 6;
  c.val_nontarget_trials = 6;
  c.val_fraction = 0.3;
  return c;
}

bool trainable_equal(const nn::ParameterStore<float>& a, const nn::ParameterStore<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].trainable && a[i].value != b[i].value) return false;
  return true;
}

}  // namespace

TEST_CASE("reduce_on_plateau") {
  SchedulerState s;
  CHECK(s.lr == 1e-4);
  for (double v : {0.5, 0.4, 0.3, 0.2, 0.1}) {
    s = reduce_on_plateau(s, v);
    CHECK(s.lr == 1e-4);
  }
  CHECK(reduce_on_plateau(s, 0.15).lr == 5e-5);
  // An equal metric is not an improvement.
  CHECK(reduce_on_plateau(s, 0.1).lr == 5e-5);

  SchedulerState t;
  std::vector<double> trace;
  for (double v : {10.0, 11.0, 11.0, 9.0}) {
    t = reduce_on_plateau(t, v);
    trace.push_back(t.lr);
  }
  CHECK(trace == std::vector<double>{1e-4, 5e-5, 2.5e-5, 2.5e-5});
  CHECK(t.best == 9.0);

  sim::Rng rng(3);
  for (int run = 0; run < 50; ++run) {
    SchedulerState r;
    double prev = r.lr;
    for (int e = 0; e < 30; ++e) {
      r = reduce_on_plateau(r, sim::uniform(rng, 0.0, 0.5));
      CHECK(r.lr <= prev);
      prev = r.lr;
      const double k = std::log2(1e-4 / r.lr);
      CHECK(k == std::round(k));
      CHECK(r.lr == std::ldexp(1e-4, -static_cast<int>(std::round(k))));
    }
  }
}

TEST_CASE("config parsing") {
  const TrainConfig d;
  CHECK(d.lr == 1e-4);
  CHECK(d.epochs == 20);
  CHECK(d.batch_size == 42);
  CHECK(d.plateau_factor == 0.5);
  CHECK(d.grad_clip == 0.0);

  TrainConfig c = tiny_config(Mode::Baseline);
  c.lr = 3.0000000000000004e-4;
  CHECK(parse_config(to_text(c)) == c);
  CHECK(to_text(parse_config(to_text(c))) == to_text(c));

  const auto parsed = parse_config("# desk\nmode = \"baseline\"  # trailing\n\nbatch_size = 16\nlr=2e-4\n");
  CHECK(parsed.mode == Mode::Baseline);
  CHECK(parsed.batch_size == 16);
  CHECK(parsed.lr == 2e-4);
  CHECK(parsed.epochs == 20);

  CHECK_THROWS_WITH_AS(parse_config("lr = 1e-4\nlearning_rate = 3\n", "x.toml"),
                       doctest::Contains("x.toml:2: unknown key 'learning_rate'"), FormatError);
  CHECK_THROWS_WITH_AS(parse_config("epochs = ten\n"), doctest::Contains(":1: bad value 'ten'"), FormatError);
  CHECK_THROWS_WITH_AS(parse_config("epochs = 3.5\n"), doctest::Contains("bad value"), FormatError);
  CHECK_THROWS_WITH_AS(parse_config("lr 1e-4\n"), doctest::Contains("expected 'key = value'"), FormatError);
  CHECK_THROWS_AS(parse_config("mode = hybrid\n"), FormatError);
  CHECK_THROWS_AS(parse_config("plateau_factor = 1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("lr = -1\n"), FormatError);
  CHECK_THROWS_AS(parse_config("batch_size = 1\n"), FormatError);
  CHECK_THROWS_AS(load_config("/nonexistent/desk.toml"), IoError);
}

TEST_CASE("shipped configs parse") {
  const auto root = std::filesystem::path(TFF_SOURCE_DIR) / "configs";
  const auto desk = load_config(root / "desk.toml");
  CHECK(desk.batch_size == 16);
  CHECK(desk.epochs == 10);
  CHECK(desk.grad_clip == 5.0);
  CHECK(desk.lr == 1e-4);
  CHECK(desk == desk_experiment(desk.seed).train);
  const auto published = load_config(root / "published.toml");
  CHECK(published.batch_size == 42);
  CHECK(published.epochs == 20);
  CHECK(published.grad_clip == 0.0);
  CHECK(published.lr == 1e-4);
}

TEST_CASE("checkpoint format") {
  Checkpoint c;
  c.set_meta("kind", "fusion");
  c.set_meta("note", "a \"quoted\" value");
  c.tensors.push_back({"w", {2, 3}, {1, 2, 3, 4, 5, 6}});
  c.tensors.push_back({"b", {3}, {-1, 0.5f, 1e-30f}});
  c.tensors.push_back({"empty", {0}, {}});
  const auto bytes = serialize(c);
  CHECK(bytes.size() % 4 == 0);
  CHECK(deserialize(bytes) == c);
  CHECK(serialize(deserialize(bytes)) == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "tff_test_train_ckpt";
  std::filesystem::create_directories(dir);
  save_checkpoint(c, dir / "a.ckpt");
  save_checkpoint(load_checkpoint(dir / "a.ckpt"), dir / "b.ckpt");
  std::ifstream fa(dir / "a.ckpt", std::ios::binary), fb(dir / "b.ckpt", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
  CHECK(sa == bytes);
  CHECK(sb == bytes);

  std::string wrong = bytes;
  const auto at = wrong.find("\"version\":\"1\"");
  REQUIRE(at != std::string::npos);
  wrong[at + 11] = '7';
  CHECK_THROWS_WITH_AS(deserialize(wrong), doctest::Contains("unsupported checkpoint version '7'"), FormatError);
  CHECK_THROWS_WITH_AS(deserialize(bytes.substr(0, 5)), doctest::Contains("offset 0"), FormatError);
  CHECK_THROWS_WITH_AS(deserialize(bytes.substr(0, bytes.size() - 4)), doctest::Contains("checkpoint"), FormatError);
  std::string garbled = bytes;
  garbled[9] = '#';
  CHECK_THROWS_WITH_AS(deserialize(garbled), doctest::Contains("offset"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), IoError);
  CHECK_THROWS_AS(c.meta("absent"), FormatError);
  CHECK_THROWS_AS(c.tensor("absent"), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pair construction") {
  const auto pool = train_pool();
  CHECK(pool.speakers().size() == 4);
  const auto b = sample_pairs(pool, 16, 1);
  REQUIRE(b.rows.size() == 16);
  CHECK(std::count_if(b.rows.begin(), b.rows.end(), [](const PairRow& r) { return r.label == 1; }) == 8);
  CHECK(sample_pairs(pool, 7, 1).rows.size() == 7);
  CHECK_THROWS_AS(sample_pairs(pool, 1, 1), std::invalid_argument);

  // Labels against the stems of every test signal.
  int rows = 0;
  std::map<sim::Variant, int> variants;
  for (std::uint64_t seed = 0; rows < 1000; ++seed) {
    for (const auto& r : sample_pairs(pool, 16, seed).rows) {
      ++rows;
      ++variants[r.test.variant];
      const auto& m = r.test.mixture;
      CHECK(corpus().speaker_of(r.enroll_utt) == r.enroll_speaker);
      CHECK(corpus().speaker_of(r.test.utt_id) == r.test.speaker_id);
      CHECK(r.enroll_utt != r.test.utt_id);
      CHECK(audio::rms(m.target) > 0);
      std::set<std::string> active{r.test.speaker_id};
      if (r.test.variant == sim::Variant::Interfered) {
        REQUIRE(m.interferers.size() == 1);
        CHECK(audio::rms(m.interferers[0]) > 0);
        CHECK(corpus().speaker_of(r.test.spec.interferers[0]) == r.test.interferer_speaker);
        active.insert(r.test.interferer_speaker);
      } else {
        CHECK(m.interferers.empty());
      }
      CHECK((r.label == 1) == (active.count(r.enroll_speaker) == 1));
      CHECK((r.label == 1) == (r.enroll_speaker == r.test.speaker_id));
    }
  }
  for (auto v : sim::kAllVariants) CHECK(variants[v] > 200);

  const std::vector<std::size_t> targets{0, 5, 9, 13};
  const auto x = make_pairs(pool, targets, 77), y = make_pairs(pool, targets, 77);
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    CHECK(x.rows[i].enroll_utt == y.rows[i].enroll_utt);
    CHECK(x.rows[i].test.wave().samples == y.rows[i].test.wave().samples);
  }
}

TEST_CASE("trainer determinism, resume and lr = 0") {
  const auto cfg = tiny_config();
  Trainer a(cfg, corpus(), split()), b(cfg, corpus(), split());
  CHECK(a.classes().size() == 4);
  for (int e = 1; e <= 2; ++e) {
    const auto sa = a.train_epoch(), sb = b.train_epoch();
    CHECK(sa.epoch == e);
    CHECK(sa.train_loss == sb.train_loss);
    CHECK(sa.val_eer == sb.val_eer);
    CHECK(sa.lr == sb.lr);
    CHECK(std::isfinite(sa.train_loss));
  }
  CHECK(serialize(a.checkpoint()) == serialize(b.checkpoint()));

  SUBCASE("resumed run matches the uninterrupted one") {
    Trainer first(cfg, corpus(), split());
    first.train_epoch();
    const auto saved = deserialize(serialize(first.checkpoint()));
    CHECK(saved.meta("epoch") == "1");
    Trainer resumed(cfg, corpus(), split());
    resumed.restore(saved);
    CHECK(resumed.epochs_done() == 1);
    const auto s2 = resumed.train_epoch();
    CHECK(s2.epoch == 2);
    CHECK(serialize(resumed.checkpoint()) == serialize(a.checkpoint()));

    Trainer other(tiny_config(Mode::Baseline), corpus(), split());
    CHECK_THROWS_AS(other.restore(saved), FormatError);
  }
  SUBCASE("lr = 0 leaves the parameters alone") {
    const auto batch = sample_pairs(train_pool(), 4, 9);
    Trainer z(cfg, corpus(), split());
    const Checkpoint before = z.checkpoint();
    const double l1 = z.train_step(batch, 0.0);
    const double l2 = z.train_step(batch, 0.0);
    CHECK(l1 == l2);
    auto fresh = load_fusion(before);
    CHECK(trainable_equal(z.params(), fresh->params()));
  }
  SUBCASE("a non-finite parameter aborts with its name") {
    Trainer z(cfg, corpus(), split());
    z.params().at("enroll_tcn.input_norm.gain").value(3, 0) = std::nanf("");
    CHECK_THROWS_WITH_AS(z.train_step(sample_pairs(train_pool(), 4, 2), 1e-4),
                         doctest::Contains("non-finite gradient in parameter 'enroll_tcn."), NumericalError);
  }
}

TEST_CASE("fusion and baseline see the same batches") {
  Trainer f(tiny_config(Mode::Fusion), corpus(), split());
  Trainer b(tiny_config(Mode::Baseline), corpus(), split());
  const auto sf = f.train_epoch(), sb = b.train_epoch();
  CHECK(std::isfinite(sf.train_loss));
  CHECK(std::isfinite(sb.train_loss));
  CHECK(sb.train_loss > 0);
  CHECK(f.checkpoint().meta("kind") == "fusion");
  CHECK(b.checkpoint().meta("kind") == "baseline");
  CHECK(b.checkpoint().meta("num_classes") == "4");
  CHECK_THROWS_AS(load_fusion(b.checkpoint()), FormatError);
  CHECK(load_baseline(b.checkpoint())->params().size() == b.params().size());
}

TEST_CASE("the full detector memorizes 8 fixed pairs") {
  TrainConfig cfg = desk_experiment(7).train;
  cfg.val_target_trials = 6;
  cfg.val_nontarget_trials = 6;
  cfg.val_fraction = 0.3;
  Trainer t(cfg, corpus(), split());
  const auto batch = sample_pairs(train_pool(), 8, 11);
  double loss = 0;
  for (int step = 0; step < 200; ++step) loss = t.train_step(batch, cfg.lr);
  INFO("final loss " << loss);
  CHECK(loss < 0.05);
}
