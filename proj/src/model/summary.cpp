// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/model/summary.hpp"

#include <cstdio>

namespace tff::model {

std::vector<LayerCount> layer_breakdown(const ParameterStore<float>& store) {
  std::vector<LayerCount> out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (!p.trainable) continue;
    const auto first = p.name.find('.');
    const auto second = first == std::string::npos ? first : p.name.find('.', first + 1);
    const std::string layer = p.name.substr(0, second);
    if (out.empty() || out.back().layer != layer) out.push_back({layer, 0});
    out.back().params += p.value.size();
  }
  return out;
}

std::string model_info_report(const FusionConfig& cfg) {
  FusionModel<float> model(cfg, 0);
  const auto& t = cfg.tcn;
  std::string out;
  char line[200];
  std::snprintf(line, sizeof line, "TcnConfig {N, B, H, P, X, R} = {%d, %d, %d, %d, %d, %d}\n", t.channels,
                t.bottleneck, t.hidden, t.kernel, t.blocks, t.repeats);
  out += line;
  const int h = cfg.classifier_hidden();
  std::snprintf(line, sizeof line,
                "ASP attention channels = %d; classifier = Linear(%d, %d), 2 x LinearBlock(%d, %d), Linear(%d, 1)\n",
                cfg.asp_channels, cfg.pooled_width(), h, h, h, h);
  out += line;
  std::snprintf(line, sizeof line, "receptive field per TCN = %d frames\n\n", t.receptive_field());
  out += line;
  std::snprintf(line, sizeof line, "%-28s %12s\n", "layer", "params");
  out += line;
  for (const auto& l : layer_breakdown(model.params())) {
    std::snprintf(line, sizeof line, "%-28s %12lld\n", l.layer.c_str(), static_cast<long long>(l.params));
    out += line;
  }
  const std::int64_t total = param_count(model.params());
  std::snprintf(line, sizeof line, "%-28s %12lld\n\n", "total", static_cast<long long>(total));
  out += line;
  const double rel =
      100.0 * static_cast<double>(total - kPublishedParamCount) / static_cast<double>(kPublishedParamCount);
  std::snprintf(line, sizeof line, "deviation: total %.3fM vs published approx. 0.959M (%+.1f%%).\n",
                static_cast<double>(total) / 1e6, rel);
  out += line;
  out +=
      "The published layer list does not pin down how 0.959M is reached. This build uses residual-only TCN\n"
      "blocks (no skip path), gLN inside blocks and scalar-score ASP.\n";
  return out;
}

}  // namespace tff::model
