// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/train/checkpoint.hpp"

#include "tff/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace tff::train {

using nlohmann::ordered_json;

const std::string& Checkpoint::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  throw FormatError("checkpoint metadata has no key '" + key + "'");
}

bool Checkpoint::has_meta(const std::string& key) const {
  for (const auto& kv : metadata)
    if (kv.first == key) return true;
  return false;
}

void Checkpoint::set_meta(const std::string& key, const std::string& value) {
  for (auto& kv : metadata)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  metadata.emplace_back(key, value);
}

const NamedTensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw FormatError("checkpoint has no tensor '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

std::string serialize(const Checkpoint& ckpt) {
  ordered_json header;
  ordered_json meta = ordered_json::object();
  meta["format"] = kCheckpointFormat;
  meta["version"] = kCheckpointVersion;
  for (const auto& [k, v] : ckpt.metadata)
    if (k != "format" && k != "version") meta[k] = v;
  header["__metadata__"] = meta;
  std::uint64_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    std::int64_t count = 1;
    for (auto d : t.shape) count *= d;
    if (count != static_cast<std::int64_t>(t.data.size()))
      throw std::invalid_argument("checkpoint tensor '" + t.name + "' shape does not match its data");
    if (t.name == "__metadata__") throw std::invalid_argument("reserved tensor name");
    const std::uint64_t bytes = t.data.size() * sizeof(float);
    header[t.name] = {{"dtype", "F32"}, {"shape", t.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string text = header.dump();
  text.append((8 - text.size() % 8) % 8, ' ');

  std::string out;
  out.reserve(8 + text.size() + offset);
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += text;
  for (const auto& t : ckpt.tensors)
    out.append(reinterpret_cast<const char*>(t.data.data()), t.data.size() * sizeof(float));
  return out;
}

Checkpoint deserialize(const std::string& bytes) {
  if (bytes.size() < 8) throw FormatError("checkpoint truncated: missing header length at offset 0");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data(), 8);
  if (len > bytes.size() - 8)
    throw FormatError("checkpoint header length " + std::to_string(len) + " at offset 0 exceeds file size " +
                      std::to_string(bytes.size()));
  ordered_json header;
  try {
    header = ordered_json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint header is not valid JSON at offset " + std::to_string(8 + e.byte) + ": " + e.what());
  }
  if (!header.is_object() || !header.contains("__metadata__") || !header["__metadata__"].is_object())
    throw FormatError("checkpoint header at offset 8 has no __metadata__ object");
  const auto& meta = header["__metadata__"];
  if (meta.value("format", "") != kCheckpointFormat)
    throw FormatError("not a tff checkpoint (format field at offset 8 is '" + meta.value("format", "") + "')");
  const std::string version = meta.value("version", "");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version '" + version + "' (expected " + kCheckpointVersion + ")");

  Checkpoint ckpt;
  for (const auto& [k, v] : meta.items()) {
    if (!v.is_string()) throw FormatError("checkpoint metadata '" + k + "' is not a string");
    if (k != "format" && k != "version") ckpt.metadata.emplace_back(k, v.get<std::string>());
  }
  const std::uint64_t payload = 8 + len;
  const std::uint64_t payload_size = bytes.size() - payload;
  std::uint64_t expected_begin = 0;
  for (const auto& [name, entry] : header.items()) {
    if (name == "__metadata__") continue;
    const std::string where = "checkpoint tensor '" + name + "'";
    try {
      if (entry.at("dtype").get<std::string>() != "F32") throw FormatError(where + ": unsupported dtype");
      NamedTensor t;
      t.name = name;
      t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offs = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offs.size() != 2 || offs[0] != expected_begin || offs[1] < offs[0] || offs[1] > payload_size)
        throw FormatError(where + ": bad data offsets at file offset " + std::to_string(payload + expected_begin));
      std::int64_t count = 1;
      for (auto d : t.shape) {
        if (d < 0) throw FormatError(where + ": negative dimension");
        count *= d;
      }
      if (static_cast<std::uint64_t>(count) * sizeof(float) != offs[1] - offs[0])
        throw FormatError(where + ": shape does not match byte range at file offset " + std::to_string(payload + offs[0]));
      t.data.resize(static_cast<std::size_t>(count));
      std::memcpy(t.data.data(), bytes.data() + payload + offs[0], offs[1] - offs[0]);
      expected_begin = offs[1];
      ckpt.tensors.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": malformed entry: " + e.what());
    }
  }
  if (expected_begin != payload_size)
    throw FormatError("checkpoint has " + std::to_string(payload_size - expected_begin) +
                      " trailing payload bytes at offset " + std::to_string(payload + expected_begin));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize(ckpt);
  // Write to a sibling and rename so a crash never leaves a torn file.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace tff::train
