// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/train/config.hpp"

#include "tff/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace tff::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

template <typename Int>
Int to_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("not an integer");
  return out;
}

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"mode", [](TrainConfig& c, const std::string& v) { c.mode = mode_from_string(v); }},
      {"lr", [](TrainConfig& c, const std::string& v) { c.lr = to_double(v); }},
      {"epochs", [](TrainConfig& c, const std::string& v) { c.epochs = to_int<int>(v); }},
      {"batch_size", [](TrainConfig& c, const std::string& v) { c.batch_size = to_int<int>(v); }},
      {"plateau_factor", [](TrainConfig& c, const std::string& v) { c.plateau_factor = to_double(v); }},
      {"seed", [](TrainConfig& c, const std::string& v) { c.seed = to_int<std::uint64_t>(v); }},
      {"grad_clip", [](TrainConfig& c, const std::string& v) { c.grad_clip = to_double(v); }},
      {"val_target_trials", [](TrainConfig& c, const std::string& v) { c.val_target_trials = to_int<int>(v); }},
      {"val_nontarget_trials", [](TrainConfig& c, const std::string& v) { c.val_nontarget_trials = to_int<int>(v); }},
      {"val_fraction", [](TrainConfig& c, const std::string& v) { c.val_fraction = to_double(v); }},
      {"tcn.channels", [](TrainConfig& c, const std::string& v) { c.tcn.channels = to_int<int>(v); }},
      {"tcn.bottleneck", [](TrainConfig& c, const std::string& v) { c.tcn.bottleneck = to_int<int>(v); }},
      {"tcn.hidden", [](TrainConfig& c, const std::string& v) { c.tcn.hidden = to_int<int>(v); }},
      {"tcn.kernel", [](TrainConfig& c, const std::string& v) { c.tcn.kernel = to_int<int>(v); }},
      {"tcn.blocks", [](TrainConfig& c, const std::string& v) { c.tcn.blocks = to_int<int>(v); }},
      {"tcn.repeats", [](TrainConfig& c, const std::string& v) { c.tcn.repeats = to_int<int>(v); }},
      {"asp_channels", [](TrainConfig& c, const std::string& v) { c.asp_channels = to_int<int>(v); }},
      {"embedding_dim", [](TrainConfig& c, const std::string& v) { c.embedding_dim = to_int<int>(v); }},
  };
  return table;
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::Fusion ? "fusion" : "baseline"; }

Mode mode_from_string(const std::string& s) {
  if (s == "fusion") return Mode::Fusion;
  if (s == "baseline") return Mode::Baseline;
  throw std::invalid_argument("mode must be 'fusion' or 'baseline', got '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(lr >= 0) || !std::isfinite(lr)) throw std::invalid_argument("lr must be finite and >= 0");
  if (!(plateau_factor > 0 && plateau_factor < 1)) throw std::invalid_argument("plateau_factor must be in (0, 1)");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (!(grad_clip >= 0)) throw std::invalid_argument("grad_clip must be >= 0");
  if (val_target_trials < 1 || val_nontarget_trials < 1) throw std::invalid_argument("validation trial counts must be >= 1");
  if (!(val_fraction > 0 && val_fraction < 1)) throw std::invalid_argument("val_fraction must be in (0, 1)");
  if (asp_channels < 1 || embedding_dim < 1) throw std::invalid_argument("asp_channels and embedding_dim must be >= 1");
  tcn.validate();
}

TrainConfig parse_config(const std::string& text, const std::string& origin) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto where = origin + ":" + std::to_string(lineno) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const auto it = setters().find(key);
    if (it == setters().end()) throw FormatError(where + "unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw FormatError(where + "bad value '" + value + "' for '" + key + "': " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "mode = \"" << to_string(c.mode) << "\"\n";
  out << "lr = " << number(c.lr) << "\n";
  out << "epochs = " << c.epochs << "\n";
  out << "batch_size = " << c.batch_size << "\n";
  out << "plateau_factor = " << number(c.plateau_factor) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "grad_clip = " << number(c.grad_clip) << "\n";
  out << "val_target_trials = " << c.val_target_trials << "\n";
  out << "val_nontarget_trials = " << c.val_nontarget_trials << "\n";
  out << "val_fraction = " << number(c.val_fraction) << "\n";
  out << "tcn.channels = " << c.tcn.channels << "\n";
  out << "tcn.bottleneck = " << c.tcn.bottleneck << "\n";
  out << "tcn.hidden = " << c.tcn.hidden << "\n";
  out << "tcn.kernel = " << c.tcn.kernel << "\n";
  out << "tcn.blocks = " << c.tcn.blocks << "\n";
  out << "tcn.repeats = " << c.tcn.repeats << "\n";
  out << "asp_channels = " << c.asp_channels << "\n";
  out << "embedding_dim = " << c.embedding_dim << "\n";
  return out.str();
}

SchedulerState reduce_on_plateau(SchedulerState state, double val_metric, double factor) {
  if (state.has_best && val_metric >= state.best) {
    // Patience is zero: every non-improving epoch decays, and the counter
    // restarts after each decay.
    state.lr *= factor;
    state.epochs_since_improvement = 0;
  } else {
    state.best = val_metric;
    state.has_best = true;
    state.epochs_since_improvement = 0;
  }
  return state;
}

}  // namespace tff::train
