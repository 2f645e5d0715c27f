// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file layout (all little-endian):
//   u64 header_len | header JSON (space padded to 8 bytes) | f32 payload
// The header maps tensor names to {"dtype":"F32","shape":[...],
// "data_offsets":[begin,end]} relative to the payload start, plus a
// "__metadata__" object of string values.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tff::train {

inline constexpr const char* kCheckpointFormat = "tff-checkpoint";
inline constexpr const char* kCheckpointVersion = "1";

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;  // in file order
  std::vector<NamedTensor> tensors;                           // in file order

  const std::string& meta(const std::string& key) const;
  bool has_meta(const std::string& key) const;
  void set_meta(const std::string& key, const std::string& value);
  const NamedTensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;

  bool operator==(const Checkpoint&) const = default;
};

std::string serialize(const Checkpoint& ckpt);
/// Throws FormatError naming the byte offset of the first problem, including
/// an explicit error for a version other than kCheckpointVersion.
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tff::train
