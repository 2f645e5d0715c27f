// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tff::eval {

/// Scores of one system on one test condition, in trial order.
struct ScoreSet {
  std::string system_id;
  std::string condition;
  std::vector<double> scores;
  std::vector<int> labels;

  std::size_t size() const { return scores.size(); }
  /// Throws unless sizes match, labels are 0/1 and scores finite.
  void validate() const;
};

struct EerResult {
  double eer = 0;        // fraction in [0, 1]
  double threshold = 0;  // accept when score >= threshold
  bool flipped = false;  // scores were negated by the polarity guard
};

/// Equal error rate with FAR(t) = #{neg >= t}/n_neg and FRR(t) = #{pos < t}/n_pos
/// swept over every distinct score plus +inf, linearly interpolated at the
/// crossing. Throws if either label is missing.
EerResult compute_eer_raw(const std::vector<double>& scores, const std::vector<int>& labels);

/// As above, but if the EER exceeds 0.5 the scores are negated and the
/// result is flagged.
EerResult compute_eer(const ScoreSet& set);

/// Inverse standard normal CDF (Acklam's rational approximation).
double probit(double p);

struct DetPoint {
  double threshold;
  double far;
  double frr;
  double probit_far;
  double probit_frr;
};

/// One point per distinct score, ascending threshold. Rates are clamped into
/// [1/(2n), 1 - 1/(2n)] before the probit, n being the class count.
std::vector<DetPoint> det_curve(const ScoreSet& set);

/// `<score> <label>` per line.
void write_scores(const std::filesystem::path& path, const ScoreSet& set);
ScoreSet read_scores(const std::filesystem::path& path);

/// threshold,far,frr,probit_far,probit_frr
void write_det_csv(const std::filesystem::path& path, const std::vector<DetPoint>& curve);

struct ReportCell {
  std::string system_id;
  std::string condition;
  EerResult eer;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  std::string det_file;
};

struct Report {
  std::vector<ReportCell> cells;

  const ReportCell& cell(const std::string& system, const std::string& condition) const;
  /// Report JSON text with a stable key order and fixed-precision numbers.
  std::string to_json() const;
};

/// Computes every cell; when `det_dir` is non-empty also writes
/// det_<system>_<condition>.csv there and records the file name.
Report emit_report(const std::vector<ScoreSet>& sets, const std::filesystem::path& det_dir = {});

/// Self-contained SVG with probit axes and one labeled polyline per set.
std::string det_plot_svg(const std::vector<ScoreSet>& sets);

}  // namespace tff::eval
