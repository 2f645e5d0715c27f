// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient-check cases: every differentiable op, and the tiny end-to-end
// fusion model. Shared by the unit tests and the acceptance suite.

#pragma once

#include "support/gradcheck.hpp"
#include "tff/model/fusion.hpp"
#include "tff/nn/ops.hpp"

#include <memory>
#include <vector>

namespace tff::testing {

struct OpCase {
  std::string name;
  /// Fills `store` with random inputs and returns the forward function.
  std::function<Forward(ParameterStore<double>&, std::mt19937_64&)> setup;
};

inline std::vector<OpCase> op_cases() {
  namespace op = nn;
  using G = Graph<double>;
  using S = ParameterStore<double>;
  std::vector<OpCase> cases;
  const auto unary = [&](const std::string& name, auto fn, double lo = -2.0, double hi = 2.0) {
    cases.push_back({name, [=](S& s, std::mt19937_64& rng) -> Forward {
                       random_param(s, "x", 3, 5, rng, lo, hi);
                       return [=](G& g, S& s) { return fn(g.param(s.at("x"))); };
                     }});
  };
  const auto binary = [&](const std::string& name, auto fn) {
    cases.push_back({name, [=](S& s, std::mt19937_64& rng) -> Forward {
                       random_param(s, "a", 3, 4, rng);
                       random_param(s, "b", 3, 4, rng);
                       return [=](G& g, S& s) { return fn(g.param(s.at("a")), g.param(s.at("b"))); };
                     }});
  };

  binary("add", [](auto a, auto b) { return op::add(a, b); });
  binary("sub", [](auto a, auto b) { return op::sub(a, b); });
  binary("mul", [](auto a, auto b) { return op::mul(a, b); });
  unary("scale", [](auto x) { return op::scale(x, 1.7); });
  unary("sum", [](auto x) { return op::sum(x); });
  unary("mean", [](auto x) { return op::mean(x); });
  unary("relu", [](auto x) { return op::relu(x); });
  unary("tanh", [](auto x) { return op::tanh(x); });
  unary("sigmoid", [](auto x) { return op::sigmoid(x); });
  unary("square", [](auto x) { return op::square(x); });
  unary("sqrt_floor", [](auto x) { return op::sqrt_floor(x, 1e-8); }, 0.1, 2.0);
  unary("mean_over_time", [](auto x) { return op::mean_over_time(x); });
  cases.push_back({"softmax_time", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "e", 1, 7, rng, -3, 3);
                     return [](G& g, S& s) { return op::softmax_time(g.param(s.at("e"))); };
                   }});
  cases.push_back({"matmul", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "a", 3, 4, rng);
                     random_param(s, "b", 4, 2, rng);
                     return [](G& g, S& s) { return op::matmul(g.param(s.at("a")), g.param(s.at("b"))); };
                   }});
  cases.push_back({"conv1d_pointwise", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "x", 4, 9, rng);
                     random_param(s, "w", 3, 4, rng);
                     random_param(s, "b", 3, 1, rng);
                     return [](G& g, S& s) {
                       return op::conv1d_pointwise(g.param(s.at("x")), g.param(s.at("w")), g.param(s.at("b")));
                     };
                   }});
  for (int dilation : {1, 2, 4})
    for (int kernel : {3, 5})
      cases.push_back({"conv1d_depthwise(P=" + std::to_string(kernel) + ",d=" + std::to_string(dilation) + ")",
                       [=](S& s, std::mt19937_64& rng) -> Forward {
                         random_param(s, "x", 3, 11, rng);
                         random_param(s, "k", 3, kernel, rng);
                         return [=](G& g, S& s) {
                           return op::conv1d_depthwise(g.param(s.at("x")), g.param(s.at("k")), dilation);
                         };
                       }});
  cases.push_back({"prelu", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "x", 3, 6, rng);
                     random_param(s, "a", 3, 1, rng, 0.05, 0.5);
                     return [](G& g, S& s) { return op::prelu(g.param(s.at("x")), g.param(s.at("a"))); };
                   }});
  cases.push_back({"global_layer_norm", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "x", 4, 7, rng);
                     random_param(s, "gain", 4, 1, rng, 0.5, 1.5);
                     random_param(s, "bias", 4, 1, rng);
                     return [](G& g, S& s) {
                       return op::global_layer_norm(g.param(s.at("x")), g.param(s.at("gain")), g.param(s.at("bias")));
                     };
                   }});
  cases.push_back({"global_layer_norm(floored variance)", [](S& s, std::mt19937_64& rng) -> Forward {
                     auto& x = s.add("x", {3, 5});
                     x.value.setConstant(0.3);
                     random_param(s, "gain", 3, 1, rng, 0.5, 1.5);
                     random_param(s, "bias", 3, 1, rng);
                     return [](G& g, S& s) {
                       return op::global_layer_norm(g.param(s.at("x")), g.param(s.at("gain")), g.param(s.at("bias")));
                     };
                   }});
  cases.push_back({"broadcast_mul", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "x", 4, 6, rng);
                     random_param(s, "v", 4, 1, rng);
                     return [](G& g, S& s) { return op::broadcast_mul(g.param(s.at("x")), g.param(s.at("v"))); };
                   }});
  cases.push_back({"weighted_time_sum", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "h", 3, 6, rng);
                     random_param(s, "w", 1, 6, rng, 0, 1);
                     return [](G& g, S& s) { return op::weighted_time_sum(g.param(s.at("h")), g.param(s.at("w"))); };
                   }});
  cases.push_back({"concat_rows", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "a", 3, 1, rng);
                     random_param(s, "b", 2, 1, rng);
                     return [](G& g, S& s) { return op::concat_rows(g.param(s.at("a")), g.param(s.at("b"))); };
                   }});
  cases.push_back({"stack_rows", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "a", 4, 1, rng);
                     random_param(s, "b", 4, 1, rng);
                     random_param(s, "c", 4, 1, rng);
                     return [](G& g, S& s) {
                       return op::stack_rows(std::vector<Var<double>>{g.param(s.at("a")), g.param(s.at("b")),
                                                                      g.param(s.at("c"))});
                     };
                   }});
  cases.push_back({"linear", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "x", 3, 5, rng);
                     random_param(s, "w", 2, 5, rng);
                     random_param(s, "b", 2, 1, rng);
                     return [](G& g, S& s) { return op::linear(g.param(s.at("x")), g.param(s.at("w")), g.param(s.at("b"))); };
                   }});
  for (bool training : {true, false})
    cases.push_back({std::string("batch_norm_1d(") + (training ? "train" : "eval") + ")",
                     [=](S& s, std::mt19937_64& rng) -> Forward {
                       random_param(s, "x", 5, 3, rng);
                       random_param(s, "gamma", 3, 1, rng, 0.5, 1.5);
                       random_param(s, "beta", 3, 1, rng);
                       auto& rm = s.add("rm", {3}, false);
                       auto& rv = s.add("rv", {3}, false);
                       rm.value.setConstant(0.1);
                       rv.value.setConstant(0.8);
                       return [=](G& g, S& s) {
                         // Training mode moves the running buffers on every
                         // call; reset them so each evaluation is identical.
                         s.at("rm").value.setConstant(0.1);
                         s.at("rv").value.setConstant(0.8);
                         nn::BatchNormBuffers<double> buf{&s.at("rm"), &s.at("rv")};
                         return op::batch_norm_1d(g.param(s.at("x")), g.param(s.at("gamma")), g.param(s.at("beta")), buf,
                                                  training);
                       };
                     }});
  cases.push_back({"bce_loss", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "p", 6, 1, rng, 0.05, 0.95);
                     return [](G& g, S& s) { return op::bce_loss(g.param(s.at("p")), {1, 0, 0, 1, 1, 0}); };
                   }});
  cases.push_back({"ce_loss", [](S& s, std::mt19937_64& rng) -> Forward {
                     random_param(s, "z", 4, 5, rng, -3, 3);
                     return [](G& g, S& s) { return op::ce_loss(g.param(s.at("z")), {0, 4, 2, 2}); };
                   }});
  return cases;
}

/// The tiny fusion model: N=9, B=4, H=6, X=2, R=1, ASP hidden 5, L=12, batch
/// of 3 pairs, BCE loss in training mode. A 1e-4 step often straddles a PReLU
/// kink somewhere in the three TCNs, so the default 1e-6 step is used.
struct TinyModelCheck {
  model::FusionConfig cfg{{9, 4, 6, 3, 2, 1}, 5};
  std::unique_ptr<model::FusionModel<double>> model;
  std::vector<Matrix<double>> enroll, test;

  explicit TinyModelCheck(std::uint64_t seed) : model(std::make_unique<model::FusionModel<double>>(cfg, seed)) {
    std::mt19937_64 rng(seed + 17);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 3; ++i) {
      Matrix<double> e(9, 12), t(9, 12);
      for (nn::Index k = 0; k < e.size(); ++k) e.data()[k] = n(rng);
      for (nn::Index k = 0; k < t.size(); ++k) t.data()[k] = n(rng);
      enroll.push_back(e);
      test.push_back(t);
    }
  }

  GradCheckResult run(std::uint64_t seed) {
    Forward f = [this](Graph<double>& g, ParameterStore<double>& store) {
      // Running BN buffers change on every training-mode call; reset them.
      for (std::size_t k = 0; k < store.size(); ++k) {
        auto& p = store[k];
        if (p.name.find("running_mean") != std::string::npos) p.value.setZero();
        if (p.name.find("running_var") != std::string::npos) p.value.setOnes();
      }
      std::vector<model::FusionModel<double>::Pair> pairs;
      for (std::size_t i = 0; i < enroll.size(); ++i) pairs.push_back({&enroll[i], &test[i]});
      return nn::bce_loss(model->forward(g, pairs, true), {1, 0, 1});
    };
    return grad_check(model->params(), f, seed);
  }
};

}  // namespace tff::testing
