// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/audio/dsp.hpp"
#include "tff/error.hpp"
#include "tff/sim/augment.hpp"
#include "tff/sim/corpus.hpp"
#include "tff/sim/mixture.hpp"
#include "tff/sim/random.hpp"
#include "tff/sim/speaker.hpp"
#include "tff/sim/testsets.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>

using namespace tff;
using namespace tff::sim;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tff_test_sim_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

audio::Waveform gauss_wave(Eigen::Index n, std::uint64_t seed, double scale = 0.1) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  audio::Waveform w = audio::Waveform::zeros(n);
  for (Eigen::Index i = 0; i < n; ++i) w.samples(i) = static_cast<float>(g(rng));
  return w;
}

// Small shared corpus; synthesis of 3-second utterances is the slow part.
const Corpus& small_corpus() {
  static const Corpus c = synth_corpus(6, 3, 42);
  return c;
}

Resolver corpus_resolver(const Corpus& c) {
  return [&c](const std::string& ref) { return c.wave(ref); };
}

}  // namespace

TEST_CASE("synth_speaker") {
  const auto a = synth_speaker(11), b = synth_speaker(11);
  CHECK(a.speaker_id == b.speaker_id);
  CHECK(a.f0_mean == b.f0_mean);
  for (int k = 0; k < 3; ++k) {
    CHECK(a.formants[k].freq == b.formants[k].freq);
    CHECK(a.formants[k].bandwidth == b.formants[k].bandwidth);
  }
  CHECK(a.jitter == b.jitter);
  CHECK(a.breathiness == b.breathiness);

  std::set<std::string> ids;
  for (std::uint64_t s = 0; s < 100; ++s) ids.insert(synth_speaker(s).speaker_id);
  CHECK(ids.size() == 100);

  double lo = 1e9, hi = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto p = synth_speaker(s * 7919 + 3);
    lo = std::min(lo, p.f0_mean);
    hi = std::max(hi, p.f0_mean);
    const bool ordered = p.formants[0].freq < p.formants[1].freq && p.formants[1].freq < p.formants[2].freq &&
                         p.formants[2].freq < 8000.0 && p.formants[0].freq > 0;
    if (!ordered) FAIL("formants out of order for seed " << s);
  }
  CHECK(lo >= 90.0);
  CHECK(hi <= 300.0);
  // The sweep actually covers the range.
  CHECK(lo < 95.0);
  CHECK(hi > 295.0);
}

TEST_CASE("synth_utterance") {
  const auto p = synth_speaker(5);
  CHECK(synth_utterance(p, 3.0, 1).size() == 48000);
  CHECK(synth_utterance(p, 1.0, 1).size() == 16000);
  CHECK(synth_utterance(p, 1.25, 1).size() == 20000);
  const auto x = synth_utterance(p, 3.0, 9), y = synth_utterance(p, 3.0, 9);
  CHECK(x.samples == y.samples);
  CHECK(x.samples != synth_utterance(p, 3.0, 10).samples);
  CHECK(x.samples.cwiseAbs().maxCoeff() == doctest::Approx(0.9).epsilon(1e-6));
  CHECK_THROWS_AS(synth_utterance(p, 0.5, 1), std::invalid_argument);
}

TEST_CASE("voiced segment peaks near the first formant") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = synth_speaker(1000 + s);
    const auto mag = audio::stft(synth_vowel(p, 32000, s)).cwiseAbs();
    const Eigen::VectorXd mean = mag.rowwise().mean();
    Eigen::Index peak;
    mean.maxCoeff(&peak);
    const double expected_bin = p.formants[0].freq / (16000.0 / 512.0);
    INFO("seed " << s << " F1 " << p.formants[0].freq << " peak bin " << peak);
    CHECK(std::abs(static_cast<double>(peak) - expected_bin) <= 2.0);
  }
}

TEST_CASE("synth_rir") {
  const auto a = synth_rir(3, 0.5);
  CHECK(a.taps.size() == 4800);
  CHECK(a.taps(0) == 1.0f);
  CHECK(a.taps == synth_rir(3, 0.5).taps);
  CHECK(a.taps != synth_rir(4, 0.5).taps);
  for (double t60 : {0.2, 0.35, 0.8}) CHECK(synth_rir(1, t60).taps(0) == 1.0f);
  CHECK_THROWS_AS(synth_rir(1, 0.19), std::invalid_argument);
  CHECK_THROWS_AS(synth_rir(1, 0.81), std::invalid_argument);
  CHECK_THROWS_AS(synth_rir(1, std::nan("")), std::invalid_argument);

  SUBCASE("energy falls 60 dB over t60") {
    // Least-squares slope of block log-energy against time, tail only.
    constexpr int kBlock = 160;
    for (double t60 : {0.2, 0.3, 0.5, 0.8})
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto rir = synth_rir(seed, t60);
        std::vector<double> t, e;
        for (Eigen::Index start = kBlock; start + kBlock <= rir.taps.size(); start += kBlock) {
          const double energy = rir.taps.segment(start, kBlock).cast<double>().squaredNorm();
          t.push_back((static_cast<double>(start) + kBlock / 2.0) / 16000.0);
          e.push_back(10.0 * std::log10(energy));
        }
        const double n = static_cast<double>(t.size());
        double st = 0, se = 0, stt = 0, ste = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          st += t[i];
          se += e[i];
          stt += t[i] * t[i];
          ste += t[i] * e[i];
        }
        const double slope = (n * ste - st * se) / (n * stt - st * st);
        INFO("t60 " << t60 << " seed " << seed);
        CHECK(std::abs(slope * t60 + 60.0) < 1.0);
      }
  }
}

TEST_CASE("synth_noise is never silent") {
  for (auto kind : {NoiseKind::White, NoiseKind::Pink, NoiseKind::BandBursts})
    for (std::uint64_t s = 0; s < 50; ++s)
      for (std::int64_t n : {1, 10, 48000}) CHECK(audio::rms(synth_noise(kind, n, s)) > 0);
  const auto ref = noise_ref(NoiseKind::Pink, 77);
  CHECK(is_noise_ref(ref));
  CHECK_FALSE(is_noise_ref("spk-0-u000"));
  CHECK(resolve_noise_ref(ref, 1000).samples == synth_noise(NoiseKind::Pink, 1000, 77).samples);
  CHECK_THROWS_AS(resolve_noise_ref("noise:purple:1", 10), std::invalid_argument);
  CHECK(noise_kind_from_string(to_string(NoiseKind::BandBursts)) == NoiseKind::BandBursts);
}

TEST_CASE("make_mixture") {
  std::map<std::string, audio::Waveform> bank;
  bank["t"] = gauss_wave(4000, 1);
  bank["a"] = gauss_wave(4000, 2, 0.3);
  bank["b"] = gauss_wave(4000, 3, 0.01);
  bank["short"] = gauss_wave(3000, 4);
  bank["silent"] = audio::Waveform::zeros(4000);
  const Resolver resolve = [&](const std::string& r) { return bank.at(r); };

  SUBCASE("target only is the target, bit for bit") {
    MixSpec s;
    s.target_utt = "t";
    s.sir_db = 3;
    s.snr_db = -2;
    const auto m = make_mixture(s, resolve);
    CHECK(m.mix.samples == bank["t"].samples);
    CHECK(m.interferers.empty());
    CHECK_FALSE(m.noise.has_value());
  }
  SUBCASE("0 dB gives equal RMS") {
    MixSpec s;
    s.target_utt = "t";
    s.interferers = {"a"};
    const auto m = make_mixture(s, resolve);
    CHECK(std::abs(audio::rms(m.interferers[0]) - audio::rms(m.target)) < 1e-6);
  }
  SUBCASE("requested ratios are reproduced from the stems") {
    MixSpec s;
    s.target_utt = "t";
    s.interferers = {"a"};
    s.noise = noise_ref(NoiseKind::White, 5);
    s.sir_db = 4.2;
    s.snr_db = 11.0;
    const auto m = make_mixture(s, resolve);
    CHECK(std::abs(audio::ratio_db(m.target, m.interferers[0]) - 4.2) < 0.01);
    CHECK(std::abs(audio::ratio_db(m.target, *m.noise) - 11.0) < 0.01);
  }
  SUBCASE("random specs, reverb included") {
    Rng rng(99);
    for (int k = 0; k < 1000; ++k) {
      MixSpec s;
      s.target_utt = "t";
      const int n_interf = static_cast<int>(uniform_index(rng, 3));
      for (int j = 0; j < n_interf; ++j) s.interferers.push_back(j == 0 ? "a" : "b");
      if (uniform_index(rng, 2) == 1) s.noise = noise_ref(static_cast<NoiseKind>(uniform_index(rng, 3)), rng());
      s.sir_db = uniform(rng, -10, 20);
      s.snr_db = uniform(rng, -10, 20);
      s.reverb_target = uniform_index(rng, 4) == 0;
      s.reverb_interf = uniform_index(rng, 4) == 0;
      s.seed = rng();
      const auto m = make_mixture(s, resolve);
      REQUIRE(m.interferers.size() == s.interferers.size());
      Eigen::VectorXf sum = m.target.samples;
      for (const auto& w : m.interferers) {
        CHECK(std::abs(audio::ratio_db(m.target, w) - s.sir_db) < 0.01);
        sum += w.samples;
      }
      if (s.noise) {
        CHECK(std::abs(audio::ratio_db(m.target, *m.noise) - s.snr_db) < 0.01);
        sum += m.noise->samples;
      }
      CHECK(m.mix.size() == 4000);
      CHECK(m.mix.samples == sum);
    }
  }
  SUBCASE("reverb is deterministic in the mixture seed") {
    MixSpec s;
    s.target_utt = "t";
    s.interferers = {"a"};
    s.reverb_target = s.reverb_interf = true;
    s.seed = 12;
    const auto m1 = make_mixture(s, resolve), m2 = make_mixture(s, resolve);
    CHECK(m1.mix.samples == m2.mix.samples);
    CHECK(m1.target.samples != bank["t"].samples);
    s.seed = 13;
    CHECK(make_mixture(s, resolve).mix.samples != m1.mix.samples);
  }
  SUBCASE("errors") {
    MixSpec s;
    s.target_utt = "silent";
    CHECK_THROWS_WITH_AS(make_mixture(s, resolve), doctest::Contains("silent"), std::invalid_argument);
    s.target_utt = "t";
    s.interferers = {"silent"};
    CHECK_THROWS_WITH_AS(make_mixture(s, resolve), doctest::Contains("silent"), std::invalid_argument);
    s.interferers = {"short"};
    CHECK_THROWS_AS(make_mixture(s, resolve), std::invalid_argument);
    s.interferers = {"t"};
    CHECK_THROWS_AS(make_mixture(s, resolve), std::invalid_argument);
    s.interferers = {};
    s.sir_db = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(make_mixture(s, resolve), std::invalid_argument);
  }
}

TEST_CASE("augment_batch") {
  std::vector<audio::Waveform> waves;
  for (std::uint64_t i = 0; i < 4; ++i) waves.push_back(gauss_wave(2000, 10 + i));
  const std::vector<CleanSample> batch = {
      {"u0", "s0", &waves[0]}, {"u1", "s1", &waves[1]}, {"u2", "s0", &waves[2]}, {"u3", "s2", &waves[3]}};

  const auto two = augment_batch(std::span(batch).first(2), 5);
  REQUIRE(two.size() == 8);
  const char* names[] = {"raw", "reverb", "noisy", "interfered"};
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(to_string(two[i].variant) == names[i % 4]);
    CHECK(two[i].utt_id == batch[i / 4].utt_id);
  }
  CHECK(two[0].wave().samples == waves[0].samples);
  CHECK(two[1].spec.reverb_target);
  CHECK(two[2].spec.noise.has_value());
  CHECK(two[3].interferer_speaker == "s1");
  CHECK(two[7].interferer_speaker == "s0");

  const auto a = augment_batch(batch, 6), b = augment_batch(batch, 6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].wave().samples == b[i].wave().samples);
  for (const auto& s : a)
    if (s.variant == Variant::Interfered) {
      CHECK_FALSE(s.interferer_speaker.empty());
      CHECK(s.interferer_speaker != s.speaker_id);
    }

  CHECK_THROWS_AS(augment_batch(std::span(batch).first(1), 1), std::invalid_argument);
  const std::vector<CleanSample> same = {{"u0", "s0", &waves[0]}, {"u2", "s0", &waves[2]}};
  CHECK_THROWS_AS(augment_batch(same, 1), std::invalid_argument);
}

TEST_CASE("augmentation ratios are uniform over [0, 15] dB") {
  std::vector<audio::Waveform> waves;
  for (std::uint64_t i = 0; i < 3; ++i) waves.push_back(gauss_wave(600, 20 + i));
  const std::vector<CleanSample> pool = {{"u0", "s0", &waves[0]}, {"u1", "s1", &waves[1]}, {"u2", "s2", &waves[2]}};
  std::vector<double> sir, snr;
  int reverbed = 0;
  constexpr int kDraws = 10000;
  for (int k = 0; k < kDraws; ++k) {
    const auto seed = derive_seed(3, {static_cast<std::uint64_t>(k)});
    const auto i = augment_sample(pool[k % 3], Variant::Interfered, pool, {}, seed);
    sir.push_back(audio::ratio_db(i.mixture.target, i.mixture.interferers.at(0)));
    reverbed += i.spec.reverb_interf;
    const auto n = augment_sample(pool[k % 3], Variant::Noisy, pool, {}, seed);
    snr.push_back(audio::ratio_db(n.mixture.target, *n.mixture.noise));
  }
  const auto ks = [](std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double f = std::clamp(x[i] / 15.0, 0.0, 1.0);
      d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
  };
  CHECK(ks(sir) < 0.05);
  CHECK(ks(snr) < 0.05);
  // Binomial(10000, 0.2): five standard deviations is 200.
  CHECK(std::abs(reverbed - 2000) < 200);
}

TEST_CASE("augment_sample honours the exclusion list") {
  std::vector<audio::Waveform> waves;
  for (std::uint64_t i = 0; i < 3; ++i) waves.push_back(gauss_wave(600, 30 + i));
  const std::vector<CleanSample> pool = {{"u0", "s0", &waves[0]}, {"u1", "s1", &waves[1]}, {"u2", "s2", &waves[2]}};
  for (std::uint64_t k = 0; k < 50; ++k)
    CHECK(augment_sample(pool[0], Variant::Interfered, pool, {"s1"}, k).interferer_speaker == "s2");
  CHECK_THROWS_AS(augment_sample(pool[0], Variant::Interfered, pool, {"s1", "s2"}, 1), std::invalid_argument);
}

TEST_CASE("build_trials") {
  Manifest m;
  for (int s = 0; s < 5; ++s)
    for (int u = 0; u < 4; ++u) {
      const auto spk = "s" + std::to_string(s);
      m.push_back({spk + "-u" + std::to_string(u), spk, "x.wav", 3.0});
    }
  std::map<std::string, std::string> speaker;
  for (const auto& r : m) speaker[r.utt_id] = r.speaker_id;

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = build_trials(m, 30, 50, seed);
    CHECK(t.size() == 80);
    CHECK(std::count_if(t.begin(), t.end(), [](const Trial& x) { return x.label == 1; }) == 30);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& x : t) {
      CHECK(x.enroll != x.test);
      CHECK((x.label == 1) == (speaker.at(x.enroll) == speaker.at(x.test)));
      pairs.emplace(x.enroll, x.test);
    }
    CHECK(pairs.size() == t.size());
  }
  CHECK(build_trials(m, 30, 50, 4) == build_trials(m, 30, 50, 4));
  const auto none = build_trials(m, 0, 25, 1);
  CHECK(std::all_of(none.begin(), none.end(), [](const Trial& x) { return x.label == 0; }));
  // Every ordered same-speaker pair: 5 * 4 * 3.
  CHECK(build_trials(m, 60, 0, 1).size() == 60);
  CHECK_THROWS_AS(build_trials(m, 61, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_trials(m, 0, 5 * 4 * 16 + 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_trials(m, -1, 0, 1), std::invalid_argument);

  const auto path = temp_dir("trials") / "trials.txt";
  const auto t = build_trials(m, 10, 10, 2);
  write_trials(path, t);
  CHECK(read_trials(path) == t);
  std::ofstream(path) << "1 a\n";
  CHECK_THROWS_AS(read_trials(path), FormatError);
  std::ofstream(path) << "2 a b\n";
  CHECK_THROWS_AS(read_trials(path), FormatError);
  CHECK_THROWS_AS(read_trials(path.parent_path() / "missing.txt"), IoError);
}

TEST_CASE("build_test_sets") {
  const Corpus& c = small_corpus();
  std::set<std::string> test_spk, pool_spk;
  for (std::size_t i = 0; i < c.speakers.size(); ++i)
    (i < 4 ? test_spk : pool_spk).insert(c.speakers[i].speaker_id);
  const auto test = filter_speakers(c.manifest, test_spk);
  const auto pool = filter_speakers(c.manifest, pool_spk);
  const auto sets = build_test_sets(test, pool, 8, 12, 12);

  REQUIRE(sets.R.trials.size() == 24);
  REQUIRE(sets.N.trials.size() == 24);
  REQUIRE(sets.I.trials.size() == 24);
  CHECK(sets.R.specs.empty());
  for (std::size_t k = 0; k < 24; ++k) {
    const auto& r = sets.R.trials[k];
    CHECK(sets.N.trials[k].label == r.label);
    CHECK(sets.I.trials[k].label == r.label);
    CHECK(sets.N.trials[k].enroll == r.enroll);
    CHECK(sets.I.trials[k].enroll == r.enroll);
    CHECK(sets.N.specs[k].target_utt == r.test);
    CHECK(sets.I.specs[k].target_utt == r.test);
    CHECK(sets.N.trials[k].test == sets.N.mixture_ids[k]);

    const auto& i = sets.I.specs[k];
    REQUIRE(i.interferers.size() == 1);
    const auto interferer = c.speaker_of(i.interferers[0]);
    CHECK(pool_spk.count(interferer) == 1);
    CHECK(interferer != c.speaker_of(r.enroll));
    CHECK(interferer != c.speaker_of(r.test));
    CHECK_FALSE(i.noise.has_value());
    CHECK_FALSE(sets.N.specs[k].reverb_target);
    CHECK(sets.N.specs[k].interferers.empty());

    const auto n = make_mixture(sets.N.specs[k], corpus_resolver(c));
    const double snr = audio::ratio_db(n.target, *n.noise);
    CHECK(snr >= -0.01);
    CHECK(snr <= 5.01);
    const auto im = make_mixture(i, corpus_resolver(c));
    const double sir = audio::ratio_db(im.target, im.interferers[0]);
    CHECK(sir >= -0.01);
    CHECK(sir <= 5.01);
    CHECK(im.mix.size() == 48000);
  }
  const auto again = build_test_sets(test, pool, 8, 12, 12);
  CHECK(again.I.trials == sets.I.trials);
  CHECK(again.N.specs[3].noise == sets.N.specs[3].noise);

  CHECK_THROWS_WITH_AS(build_test_sets(test, test, 8, 4, 4), doctest::Contains("also a test speaker"),
                       std::invalid_argument);
  CHECK_THROWS_AS(build_test_sets(test, {}, 8, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_test_sets(filter_speakers(test, {*test_spk.begin()}), pool, 8, 1, 0), std::invalid_argument);

  const auto path = temp_dir("mixspec") / "I.jsonl";
  write_mixspec_log(path, sets.I);
  const auto log = read_mixspec_log(path);
  REQUIRE(log.size() == 24);
  for (std::size_t k = 0; k < 24; ++k) {
    CHECK(log[k].first == sets.I.mixture_ids[k]);
    CHECK(log[k].second.interferers == sets.I.specs[k].interferers);
    CHECK(log[k].second.sir_db == sets.I.specs[k].sir_db);
    CHECK(log[k].second.seed == sets.I.specs[k].seed);
    CHECK(make_mixture(log[k].second, corpus_resolver(c)).mix.samples ==
          make_mixture(sets.I.specs[k], corpus_resolver(c)).mix.samples);
  }
  write_mixspec_log(path, sets.N);
  CHECK(read_mixspec_log(path)[5].second.noise == sets.N.specs[5].noise);
  std::ofstream(path) << "{\"id\": 3}\n";
  CHECK_THROWS_AS(read_mixspec_log(path), FormatError);
}

TEST_CASE("corpus, manifest and split") {
  const Corpus& c = small_corpus();
  CHECK(c.manifest.size() == 18);
  CHECK(c.speakers.size() == 6);
  for (const auto& r : c.manifest) {
    CHECK(c.wave(r.utt_id).size() == 48000);
    CHECK(r.duration_s == 3.0);
    CHECK(c.speaker_of(r.utt_id) == r.speaker_id);
  }
  CHECK_THROWS_AS(c.wave("nope"), std::out_of_range);

  // Each utterance has its own stream: a smaller corpus is a prefix.
  const Corpus small = synth_corpus(2, 2, 42);
  for (const auto& r : small.manifest) CHECK(small.wave(r.utt_id).samples == c.wave(r.utt_id).samples);

  const auto dir = temp_dir("corpus");
  save_corpus(c, dir);
  const Corpus back = load_corpus(dir / "manifest.jsonl");
  CHECK(back.manifest == c.manifest);
  for (const auto& r : c.manifest)
    CHECK((back.wave(r.utt_id).samples - c.wave(r.utt_id).samples).cwiseAbs().maxCoeff() <= 1.0f / 32768.0f);

  Manifest dup = c.manifest;
  dup.push_back(dup.front());
  CHECK_THROWS_AS(validate_manifest(dup), FormatError);
  write_manifest(dir / "dup.jsonl", dup);
  CHECK_THROWS_AS(read_manifest(dir / "dup.jsonl"), FormatError);
  CHECK_THROWS_AS(read_manifest(dir / "missing.jsonl"), IoError);

  Manifest many;
  for (int s = 0; s < 50; ++s)
    many.push_back({"u" + std::to_string(s), "spk" + std::to_string(100 + s), "x.wav", 3.0});
  const auto split = split_speakers(many, 10, 0.1);
  CHECK(split.test.size() == 10);
  CHECK(split.val.size() == 4);
  CHECK(split.train.size() == 36);
  for (const auto& s : split.test) CHECK((split.train.count(s) == 0 && split.val.count(s) == 0));
  for (const auto& s : split.val) CHECK(split.train.count(s) == 0);
  CHECK(split.test.count("spk100") == 1);
  CHECK(split.test.count("spk109") == 1);
  write_split(dir / "split.json", split);
  const auto back_split = read_split(dir / "split.json");
  CHECK(back_split.train == split.train);
  CHECK(back_split.val == split.val);
  CHECK(back_split.test == split.test);
  std::filesystem::remove_all(dir);
}
