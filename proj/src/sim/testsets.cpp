// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/sim/testsets.hpp"

#include "tff/error.hpp"
#include "tff/sim/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tff::sim {

namespace {

std::map<std::string, std::vector<std::string>> group_by_speaker(const Manifest& manifest) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& r : manifest) out[r.speaker_id].push_back(r.utt_id);
  return out;
}

std::string mixture_id(const std::string& condition, std::size_t row) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%05zu", condition.c_str(), row);
  return buf;
}

}  // namespace

TrialList build_trials(const Manifest& manifest, int n_target, int n_nontarget, std::uint64_t seed) {
  if (n_target < 0 || n_nontarget < 0) throw std::invalid_argument("build_trials: negative trial count");
  const auto groups = group_by_speaker(manifest);
  std::vector<std::pair<std::string, const std::vector<std::string>*>> speakers;
  for (const auto& [spk, utts] : groups) speakers.emplace_back(spk, &utts);

  std::uint64_t max_target = 0, max_nontarget = 0;
  for (const auto& [spk, utts] : speakers) {
    const auto n = static_cast<std::uint64_t>(utts->size());
    max_target += n * (n - 1);
    max_nontarget += n * (manifest.size() - n);
  }
  if (static_cast<std::uint64_t>(n_target) > max_target)
    throw std::invalid_argument("build_trials: " + std::to_string(n_target) + " target trials requested, only " +
                                std::to_string(max_target) + " possible");
  if (static_cast<std::uint64_t>(n_nontarget) > max_nontarget)
    throw std::invalid_argument("build_trials: " + std::to_string(n_nontarget) + " nontarget trials requested, only " +
                                std::to_string(max_nontarget) + " possible");

  Rng rng(derive_seed(seed, {tag("trials")}));
  std::set<std::pair<std::string, std::string>> used;
  TrialList out;

  // Draws are weighted by utterance, so every possible pair is equally likely.
  while (out.size() < static_cast<std::size_t>(n_target)) {
    const auto& r = manifest[uniform_index(rng, manifest.size())];
    const auto& utts = groups.at(r.speaker_id);
    if (utts.size() < 2) continue;
    const auto& test = utts[uniform_index(rng, utts.size())];
    if (test == r.utt_id || !used.emplace(r.utt_id, test).second) continue;
    out.push_back({1, r.utt_id, test});
  }
  const auto n_total = static_cast<std::size_t>(n_target + n_nontarget);
  while (out.size() < n_total) {
    const auto& e = manifest[uniform_index(rng, manifest.size())];
    const auto& t = manifest[uniform_index(rng, manifest.size())];
    if (e.speaker_id == t.speaker_id || !used.emplace(e.utt_id, t.utt_id).second) continue;
    out.push_back({0, e.utt_id, t.utt_id});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

void write_trials(const std::filesystem::path& path, const TrialList& trials) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& t : trials) out << t.label << ' ' << t.enroll << ' ' << t.test << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

TrialList read_trials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  TrialList out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string label, enroll, test, extra;
    if (!(ss >> label >> enroll >> test) || (ss >> extra) || (label != "0" && label != "1"))
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected '<0|1> <enroll> <test>', got '" +
                        line + "'");
    out.push_back({label == "1" ? 1 : 0, enroll, test});
  }
  return out;
}

TestSets build_test_sets(const Manifest& test, const Manifest& interferer_pool, std::uint64_t seed, int n_target,
                         int n_nontarget) {
  const auto test_groups = group_by_speaker(test);
  if (test_groups.size() < 2) throw std::invalid_argument("build_test_sets: need at least two test speakers");
  if (interferer_pool.empty()) throw std::invalid_argument("build_test_sets: empty interferer pool");
  for (const auto& r : interferer_pool)
    if (test_groups.count(r.speaker_id) != 0)
      throw std::invalid_argument("build_test_sets: interferer speaker '" + r.speaker_id + "' is also a test speaker");

  TestSets sets;
  sets.R.name = "R";
  sets.R.trials = build_trials(test, n_target, n_nontarget, seed);
  sets.N.name = "N";
  sets.I.name = "I";
  for (std::size_t row = 0; row < sets.R.trials.size(); ++row) {
    const Trial& t = sets.R.trials[row];
    Rng rng(derive_seed(seed, {tag("condition-N"), row}));
    MixSpec n;
    n.target_utt = t.test;
    n.noise = noise_ref(static_cast<NoiseKind>(uniform_index(rng, 3)), rng());
    n.snr_db = uniform(rng, kTestMinRatioDb, kTestMaxRatioDb);
    n.seed = rng();
    sets.N.mixture_ids.push_back(mixture_id("N", row));
    sets.N.specs.push_back(n);
    sets.N.trials.push_back({t.label, t.enroll, sets.N.mixture_ids.back()});

    rng.seed(derive_seed(seed, {tag("condition-I"), row}));
    MixSpec i;
    i.target_utt = t.test;
    i.interferers = {interferer_pool[uniform_index(rng, interferer_pool.size())].utt_id};
    i.sir_db = uniform(rng, kTestMinRatioDb, kTestMaxRatioDb);
    i.seed = rng();
    sets.I.mixture_ids.push_back(mixture_id("I", row));
    sets.I.specs.push_back(i);
    sets.I.trials.push_back({t.label, t.enroll, sets.I.mixture_ids.back()});
  }
  return sets;
}

void write_mixspec_log(const std::filesystem::path& path, const TestCondition& condition) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t k = 0; k < condition.specs.size(); ++k) {
    const MixSpec& s = condition.specs[k];
    nlohmann::ordered_json j;
    j["id"] = condition.mixture_ids[k];
    j["target_utt"] = s.target_utt;
    j["interferers"] = s.interferers;
    j["noise"] = s.noise ? nlohmann::ordered_json(*s.noise) : nlohmann::ordered_json(nullptr);
    j["sir_db"] = s.sir_db;
    j["snr_db"] = s.snr_db;
    j["reverb_target"] = s.reverb_target;
    j["reverb_interf"] = s.reverb_interf;
    j["seed"] = s.seed;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::pair<std::string, MixSpec>> read_mixspec_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, MixSpec>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MixSpec s;
      s.target_utt = j.at("target_utt").get<std::string>();
      s.interferers = j.at("interferers").get<std::vector<std::string>>();
      if (!j.at("noise").is_null()) s.noise = j.at("noise").get<std::string>();
      s.sir_db = j.at("sir_db").get<double>();
      s.snr_db = j.at("snr_db").get<double>();
      s.reverb_target = j.at("reverb_target").get<bool>();
      s.reverb_interf = j.at("reverb_interf").get<bool>();
      s.seed = j.at("seed").get<std::uint64_t>();
      out.emplace_back(j.at("id").get<std::string>(), s);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tff::sim
