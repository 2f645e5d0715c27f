// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tff/audio/dsp.hpp"
#include "tff/sim/speaker.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tff::sim {

inline constexpr double kSegmentSeconds = 3.0;

struct ManifestRecord {
  std::string utt_id;
  std::string speaker_id;
  std::string path;  // relative to the manifest's directory
  double duration_s = kSegmentSeconds;

  bool operator==(const ManifestRecord&) const = default;
};

using Manifest = std::vector<ManifestRecord>;

/// JSON lines, one record per utterance, keys in fixed order.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);
/// Throws on duplicate utt_ids.
void validate_manifest(const Manifest& manifest);

/// Speaker partition; the three sets are pairwise disjoint.
struct SpeakerSplit {
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;
};

/// Deterministic partition by sorted speaker id: the first `held_out`
/// speakers are test speakers, then ceil(val_fraction * rest) validation
/// speakers, the remainder training speakers.
SpeakerSplit split_speakers(const Manifest& manifest, int held_out, double val_fraction = 0.1);

void write_split(const std::filesystem::path& path, const SpeakerSplit& split);
SpeakerSplit read_split(const std::filesystem::path& path);

/// Records whose speaker is in `speakers`, in manifest order.
Manifest filter_speakers(const Manifest& manifest, const std::set<std::string>& speakers);

/// In-memory synthetic corpus.
struct Corpus {
  std::vector<SpeakerProfile> speakers;
  Manifest manifest;
  std::map<std::string, audio::Waveform> audio;  // by utt_id

  const audio::Waveform& wave(const std::string& utt_id) const;
  std::string speaker_of(const std::string& utt_id) const;
};

/// `speakers` voices with `utts_per_speaker` 3-second utterances each. Every
/// item draws from its own stream derived from (seed, item), so the result is
/// independent of generation order.
Corpus synth_corpus(int speakers, int utts_per_speaker, std::uint64_t seed);

/// Writes wav/<speaker>/<utt>.wav and manifest.jsonl under `dir`.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Loads every utterance listed in a manifest.
Corpus load_corpus(const std::filesystem::path& manifest_path);

}  // namespace tff::sim
