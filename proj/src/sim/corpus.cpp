// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/sim/corpus.hpp"

#include "tff/audio/wav.hpp"
#include "tff/error.hpp"
#include "tff/sim/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tff::sim {

using nlohmann::ordered_json;

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : manifest) {
    ordered_json j;
    j["utt_id"] = r.utt_id;
    j["speaker_id"] = r.speaker_id;
    j["path"] = r.path;
    j["duration_s"] = r.duration_s;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      m.push_back({j.at("utt_id").get<std::string>(), j.at("speaker_id").get<std::string>(),
                   j.at("path").get<std::string>(), j.at("duration_s").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  validate_manifest(m);
  return m;
}

void validate_manifest(const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& r : manifest)
    if (!seen.insert(r.utt_id).second) throw FormatError("duplicate utt_id '" + r.utt_id + "' in manifest");
}

SpeakerSplit split_speakers(const Manifest& manifest, int held_out, double val_fraction) {
  std::set<std::string> ids;
  for (const auto& r : manifest) ids.insert(r.speaker_id);
  if (held_out < 0 || static_cast<std::size_t>(held_out) >= ids.size())
    throw std::invalid_argument("split_speakers: cannot hold out " + std::to_string(held_out) + " of " +
                                std::to_string(ids.size()) + " speakers");
  SpeakerSplit split;
  std::vector<std::string> sorted(ids.begin(), ids.end());
  const std::size_t rest = sorted.size() - static_cast<std::size_t>(held_out);
  const auto n_val = static_cast<std::size_t>(std::ceil(val_fraction * static_cast<double>(rest) - 1e-9));
  if (n_val >= rest) throw std::invalid_argument("split_speakers: no training speakers left");
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i < static_cast<std::size_t>(held_out))
      split.test.insert(sorted[i]);
    else if (i < static_cast<std::size_t>(held_out) + n_val)
      split.val.insert(sorted[i]);
    else
      split.train.insert(sorted[i]);
  }
  return split;
}

void write_split(const std::filesystem::path& path, const SpeakerSplit& split) {
  ordered_json j;
  j["train"] = split.train;
  j["val"] = split.val;
  j["test"] = split.test;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

SpeakerSplit read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    return {j.at("train").get<std::set<std::string>>(), j.at("val").get<std::set<std::string>>(),
            j.at("test").get<std::set<std::string>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Manifest filter_speakers(const Manifest& manifest, const std::set<std::string>& speakers) {
  Manifest out;
  std::copy_if(manifest.begin(), manifest.end(), std::back_inserter(out),
               [&](const ManifestRecord& r) { return speakers.count(r.speaker_id) != 0; });
  return out;
}

const audio::Waveform& Corpus::wave(const std::string& utt_id) const {
  auto it = audio.find(utt_id);
  if (it == audio.end()) throw std::out_of_range("unknown utterance '" + utt_id + "'");
  return it->second;
}

std::string Corpus::speaker_of(const std::string& utt_id) const {
  for (const auto& r : manifest)
    if (r.utt_id == utt_id) return r.speaker_id;
  throw std::out_of_range("unknown utterance '" + utt_id + "'");
}

Corpus synth_corpus(int speakers, int utts_per_speaker, std::uint64_t seed) {
  if (speakers < 1 || utts_per_speaker < 1) throw std::invalid_argument("synth_corpus: counts must be positive");
  Corpus c;
  for (int s = 0; s < speakers; ++s) {
    const auto profile = synth_speaker(derive_seed(seed, {tag("corpus-speaker"), static_cast<std::uint64_t>(s)}));
    for (int u = 0; u < utts_per_speaker; ++u) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "-u%03d", u);
      const std::string utt = profile.speaker_id + suffix;
      const auto useed = derive_seed(seed, {tag("corpus-utterance"), static_cast<std::uint64_t>(s),
                                            static_cast<std::uint64_t>(u)});
      c.audio.emplace(utt, synth_utterance(profile, kSegmentSeconds, useed));
      c.manifest.push_back({utt, profile.speaker_id, "wav/" + profile.speaker_id + "/" + utt + ".wav", kSegmentSeconds});
    }
    c.speakers.push_back(profile);
  }
  validate_manifest(c.manifest);
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  for (const auto& r : corpus.manifest) {
    const auto path = dir / r.path;
    std::filesystem::create_directories(path.parent_path());
    audio::write_wav(path, corpus.wave(r.utt_id));
  }
  write_manifest(dir / "manifest.jsonl", corpus.manifest);
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  Corpus c;
  c.manifest = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  for (const auto& r : c.manifest) c.audio.emplace(r.utt_id, audio::read_wav(base / r.path));
  return c;
}

}  // namespace tff::sim
