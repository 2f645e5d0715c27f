// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/eval/metrics.hpp"

#include "tff/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tff::eval {

namespace {

struct RatePoint {
  double threshold;
  double far;
  double frr;
};

/// FAR/FRR at every distinct score, ascending.
std::vector<RatePoint> sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l == 1;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("EER needs both target and nontarget trials");

  std::vector<RatePoint> out;
  std::size_t pos_below = 0, neg_below = 0;
  for (std::size_t i = 0; i < n;) {
    const double t = scores[order[i]];
    out.push_back({t, static_cast<double>(n_neg - neg_below) / static_cast<double>(n_neg),
                   static_cast<double>(pos_below) / static_cast<double>(n_pos)});
    for (; i < n && scores[order[i]] == t; ++i) (labels[order[i]] == 1 ? pos_below : neg_below) += 1;
  }
  return out;
}

std::string format_number(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

void ScoreSet::validate() const {
  if (scores.size() != labels.size()) throw std::invalid_argument("ScoreSet: scores and labels differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("ScoreSet: label must be 0 or 1 (row " + std::to_string(i) + ")");
    if (!std::isfinite(scores[i])) throw std::invalid_argument("ScoreSet: non-finite score at row " + std::to_string(i));
  }
}

EerResult compute_eer_raw(const std::vector<double>& scores, const std::vector<int>& labels) {
  ScoreSet{"", "", scores, labels}.validate();
  auto pts = sweep(scores, labels);
  pts.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  // far - frr is non-increasing along the sweep, +1 at the first point and
  // -1 at +inf; take the first segment that reaches zero.
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double d0 = pts[k].far - pts[k].frr;
    const double d1 = pts[k + 1].far - pts[k + 1].frr;
    if (d1 > 0) continue;
    const double alpha = d0 / (d0 - d1);
    EerResult r;
    r.eer = pts[k].far + alpha * (pts[k + 1].far - pts[k].far);
    r.threshold = std::isfinite(pts[k + 1].threshold)
                      ? pts[k].threshold + alpha * (pts[k + 1].threshold - pts[k].threshold)
                      : pts[k].threshold;
    return r;
  }
  throw std::logic_error("compute_eer: no FAR/FRR crossing");  // unreachable
}

EerResult compute_eer(const ScoreSet& set) {
  auto r = compute_eer_raw(set.scores, set.labels);
  if (r.eer > 0.5) {
    std::vector<double> neg(set.scores.size());
    std::transform(set.scores.begin(), set.scores.end(), neg.begin(), [](double s) { return -s; });
    r = compute_eer_raw(neg, set.labels);
    r.flipped = true;
  }
  return r;
}

double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probit: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > 1 - p_low) {
    const double q = std::sqrt(-2 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

std::vector<DetPoint> det_curve(const ScoreSet& set) {
  set.validate();
  const auto pts = sweep(set.scores, set.labels);
  std::size_t n_pos = 0;
  for (int l : set.labels) n_pos += l == 1;
  const auto clamp_rate = [](double r, std::size_t n) {
    const double lo = 1.0 / (2.0 * static_cast<double>(n));
    return std::clamp(r, lo, 1.0 - lo);
  };
  std::vector<DetPoint> out;
  out.reserve(pts.size());
  for (const auto& p : pts)
    out.push_back({p.threshold, p.far, p.frr, probit(clamp_rate(p.far, set.size() - n_pos)),
                   probit(clamp_rate(p.frr, n_pos))});
  return out;
}

void write_scores(const std::filesystem::path& path, const ScoreSet& set) {
  set.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < set.size(); ++i) out << format_number("%.17g", set.scores[i]) << ' ' << set.labels[i] << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ScoreSet read_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ScoreSet set;
  set.system_id = path.stem().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string score_text, label_text, extra;
    double score = 0;
    std::size_t used = 0;
    bool ok = static_cast<bool>(ss >> score_text >> label_text) && !(ss >> extra) &&
              (label_text == "0" || label_text == "1");
    if (ok) {
      try {
        score = std::stod(score_text, &used);
      } catch (const std::exception&) {
        ok = false;
      }
      ok = ok && used == score_text.size() && std::isfinite(score);
    }
    if (!ok)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected '<score> <0|1>', got '" + line + "'");
    set.scores.push_back(score);
    set.labels.push_back(label_text == "1" ? 1 : 0);
  }
  return set;
}

void write_det_csv(const std::filesystem::path& path, const std::vector<DetPoint>& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "threshold,far,frr,probit_far,probit_frr\n";
  for (const auto& p : curve)
    out << format_number("%.17g", p.threshold) << ',' << format_number("%.17g", p.far) << ','
        << format_number("%.17g", p.frr) << ',' << format_number("%.17g", p.probit_far) << ','
        << format_number("%.17g", p.probit_frr) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

const ReportCell& Report::cell(const std::string& system, const std::string& condition) const {
  for (const auto& c : cells)
    if (c.system_id == system && c.condition == condition) return c;
  throw std::out_of_range("no report cell for " + system + "/" + condition);
}

std::string Report::to_json() const {
  using nlohmann::ordered_json;
  std::vector<std::string> systems, conditions;
  for (const auto& c : cells) {
    if (std::find(systems.begin(), systems.end(), c.system_id) == systems.end()) systems.push_back(c.system_id);
    if (std::find(conditions.begin(), conditions.end(), c.condition) == conditions.end())
      conditions.push_back(c.condition);
  }
  // Numbers go through a fixed format so the text never depends on the JSON
  // library's float printer.
  const auto fixed = [](double v) { return ordered_json::parse(format_number("%.10f", v)); };

  ordered_json j;
  j["format"] = "tff-report";
  j["version"] = 1;
  j["systems"] = systems;
  j["conditions"] = conditions;
  ordered_json matrix = ordered_json::object();
  for (const auto& s : systems) {
    ordered_json row = ordered_json::object();
    for (const auto& c : cells)
      if (c.system_id == s) row[c.condition] = fixed(100.0 * c.eer.eer);
    matrix[s] = row;
  }
  j["eer_percent"] = matrix;

  const bool paired = std::find(systems.begin(), systems.end(), "fusion") != systems.end() &&
                      std::find(systems.begin(), systems.end(), "baseline") != systems.end();
  if (paired) {
    // (baseline - fusion) / baseline, per condition present for both.
    ordered_json rel = ordered_json::object();
    for (const auto& cond : conditions) {
      const ReportCell* f = nullptr;
      const ReportCell* b = nullptr;
      for (const auto& c : cells) {
        if (c.condition != cond) continue;
        if (c.system_id == "fusion") f = &c;
        if (c.system_id == "baseline") b = &c;
      }
      if (f && b && b->eer.eer > 0) rel[cond] = fixed(100.0 * (b->eer.eer - f->eer.eer) / b->eer.eer);
    }
    j["relative_eer_reduction_percent"] = rel;
  }

  ordered_json arr = ordered_json::array();
  for (const auto& c : cells) {
    ordered_json o;
    o["system"] = c.system_id;
    o["condition"] = c.condition;
    o["eer"] = fixed(c.eer.eer);
    o["threshold"] = fixed(c.eer.threshold);
    o["polarity_flipped"] = c.eer.flipped;
    o["n_target"] = c.n_target;
    o["n_nontarget"] = c.n_nontarget;
    o["det_file"] = c.det_file;
    arr.push_back(o);
  }
  j["cells"] = arr;
  return j.dump(2) + "\n";
}

Report emit_report(const std::vector<ScoreSet>& sets, const std::filesystem::path& det_dir) {
  if (sets.empty()) throw std::invalid_argument("emit_report: no score sets");
  Report report;
  for (const auto& s : sets) {
    ReportCell cell;
    cell.system_id = s.system_id;
    cell.condition = s.condition;
    cell.eer = compute_eer(s);
    for (int l : s.labels) (l == 1 ? cell.n_target : cell.n_nontarget) += 1;
    if (!det_dir.empty()) {
      cell.det_file = "det_" + s.system_id + "_" + s.condition + ".csv";
      write_det_csv(det_dir / cell.det_file, det_curve(s));
    }
    report.cells.push_back(cell);
  }
  return report;
}

std::string det_plot_svg(const std::vector<ScoreSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("det_plot: no score sets");
  constexpr double kWidth = 640, kHeight = 560, kLeft = 70, kTop = 30, kPlot = 440;
  const double lo = probit(0.001), hi = probit(0.8);
  const auto x_of = [&](double z) { return kLeft + (std::clamp(z, lo, hi) - lo) / (hi - lo) * kPlot; };
  const auto y_of = [&](double z) { return kTop + kPlot - (std::clamp(z, lo, hi) - lo) / (hi - lo) * kPlot; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<g id=\"axes\" stroke=\"#999\" stroke-width=\"0.5\">\n";
  for (double p : {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.6, 0.8}) {
    const double x = x_of(probit(p)), y = y_of(probit(p));
    svg << "<line x1=\"" << format_number("%.2f", x) << "\" y1=\"" << kTop << "\" x2=\"" << format_number("%.2f", x)
        << "\" y2=\"" << kTop + kPlot << "\"/>\n";
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << format_number("%.2f", y) << "\" x2=\"" << kLeft + kPlot
        << "\" y2=\"" << format_number("%.2f", y) << "\"/>\n";
    const std::string label = format_number("%g", 100 * p);
    svg << "<text stroke=\"none\" fill=\"black\" x=\"" << format_number("%.2f", x) << "\" y=\"" << kTop + kPlot + 14
        << "\" text-anchor=\"middle\">" << label << "</text>\n";
    svg << "<text stroke=\"none\" fill=\"black\" x=\"" << kLeft - 6 << "\" y=\"" << format_number("%.2f", y + 4)
        << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kPlot << "\" height=\"" << kPlot
      << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "</g>\n";
  svg << "<text x=\"" << kLeft + kPlot / 2 << "\" y=\"" << kTop + kPlot + 32
      << "\" text-anchor=\"middle\">False acceptance rate (%)</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + kPlot / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + kPlot / 2 << ")\">False rejection rate (%)</text>\n";

  svg << "<g id=\"legend\">\n";
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const double y = kTop + kPlot + 50 + 14.0 * static_cast<double>(k % 3);
    const double x = kLeft + 150.0 * static_cast<double>(k / 3);
    const char* color = colors[k % 8];
    const auto eer = compute_eer(sets[k]);
    svg << "<line x1=\"" << x << "\" y1=\"" << y - 4 << "\" x2=\"" << x + 18 << "\" y2=\"" << y - 4 << "\" stroke=\""
        << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << x + 22 << "\" y=\"" << y << "\">" << sets[k].system_id << " " << sets[k].condition
        << " (EER " << format_number("%.2f", 100 * eer.eer) << "%)</text>\n";
  }
  svg << "</g>\n";

  for (std::size_t k = 0; k < sets.size(); ++k) {
    svg << "<polyline class=\"det\" data-label=\"" << sets[k].system_id << " " << sets[k].condition
        << "\" fill=\"none\" stroke=\"" << colors[k % 8] << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& p : det_curve(sets[k])) {
      svg << (first ? "" : " ") << format_number("%.2f", x_of(p.probit_far)) << ','
          << format_number("%.2f", y_of(p.probit_frr));
      first = false;
    }
    svg << "\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tff::eval
