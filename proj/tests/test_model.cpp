// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/model/baseline.hpp"
#include "tff/model/fusion.hpp"
#include "tff/model/summary.hpp"
#include "tff/nn/adam.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tff;
using namespace tff::model;
using nn::Index;

namespace {

template <typename Scalar = float>
Matrix<Scalar> random_matrix(Index r, Index c, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix<Scalar> m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(n(rng));
  return m;
}

template <typename Scalar>
Matrix<Scalar> run_tcn(const Tcn<Scalar>& tcn, const Matrix<Scalar>& x) {
  Graph<Scalar> g(false);
  return tcn.forward(g, g.constant(x)).value();
}

}  // namespace

TEST_CASE("tcn shape contract") {
  ParameterStore<float> s;
  Tcn<float> tcn(s, "tcn", TcnConfig{});
  std::mt19937_64 rng(1);
  tcn.init(rng);
  for (Index frames : {1, 2, 37, 186}) {
    const auto y = run_tcn(tcn, random_matrix(257, frames, 2));
    CHECK(y.rows() == 257);
    CHECK(y.cols() == frames);
  }
  Graph<float> g(false);
  CHECK_THROWS_AS(tcn.forward(g, g.constant(random_matrix(256, 5, 3))), std::invalid_argument);
}

TEST_CASE("tcn on silence is finite and set by the normalization biases") {
  ParameterStore<float> s;
  Tcn<float> tcn(s, "tcn", TcnConfig{});
  std::mt19937_64 rng(4);
  tcn.init(rng);
  const auto zero = run_tcn<float>(tcn, Matrix<float>::Zero(257, 20));
  CHECK(zero.allFinite());
  // Any constant input normalizes to the input-norm bias, so the output
  // cannot depend on the constant.
  CHECK(run_tcn<float>(tcn, Matrix<float>::Constant(257, 20, std::log(1e-7f))) == zero);
}

TEST_CASE("tcn receptive field") {
  const TcnConfig cfg;
  CHECK(cfg.context_radius() == 189);
  CHECK(cfg.receptive_field() == 379);
  CHECK(TcnConfig{257, 32, 64, 3, 6, 1}.receptive_field() == 127);

  ParameterStore<double> s;
  Tcn<double> tcn(s, "tcn", cfg);
  std::mt19937_64 rng(5);
  tcn.init(rng);
  const Index frames = 700, t0 = 350;
  auto x = random_matrix<double>(257, frames, 6);
  const auto base = run_tcn(tcn, x);
  x.col(t0) += random_matrix<double>(257, 1, 7, 3.0).col(0);
  const auto moved = run_tcn(tcn, x);
  double inside = 0, outside = 0;
  for (Index t = 0; t < frames; ++t) {
    const double d = (moved.col(t) - base.col(t)).cwiseAbs().maxCoeff();
    double& slot = std::abs(t - t0) <= 189 ? inside : outside;
    slot = std::max(slot, d);
  }
  // Convolutions reach exactly +-189 frames. Global layer norm pools its
  // statistics over the whole sequence, so distant frames still move by a
  // small global renormalization.
  INFO("inside " << inside << " outside " << outside);
  CHECK(inside > 0);
  CHECK(outside < 0.05 * inside);
}

TEST_CASE("enrollment embedding is the time average of the enrollment tcn") {
  FusionModel<double> m(FusionConfig{}, 8);
  const auto x = random_matrix<double>(257, 15, 9);
  const auto feats = run_tcn(m.enroll_tcn(), x);
  const auto emb = m.embedding(x);
  REQUIRE(emb.rows() == 257);
  for (Index c = 0; c < 257; ++c) {
    double acc = 0;
    for (Index t = 0; t < 15; ++t) acc += feats(c, t);
    CHECK(std::abs(emb(c, 0) - acc / 15) < 1e-9);
  }
  const auto single = random_matrix<double>(257, 1, 10);
  CHECK(m.embedding(single) == run_tcn(m.enroll_tcn(), single));
  Graph<double> g(false);
  CHECK_THROWS_AS(m.enroll_embed(g, g.constant(Matrix<double>(257, 0))), std::invalid_argument);
}

TEST_CASE("fuse") {
  Graph<double> g(false);
  const auto mix = random_matrix<double>(257, 6, 11);
  CHECK(fuse(g.constant(mix), g.constant(Matrix<double>::Ones(257, 1))).value() == mix);
  CHECK(fuse(g.constant(mix), g.constant(Matrix<double>::Zero(257, 1))).value().isZero(0));
  const auto e = random_matrix<double>(257, 1, 12);
  const auto y = fuse(g.constant(mix), g.constant(e)).value();
  for (Index c = 0; c < 257; ++c)
    for (Index t = 0; t < 6; ++t) CHECK(y(c, t) == mix(c, t) * e(c, 0));
  // Bilinear in each argument.
  const auto mix2 = random_matrix<double>(257, 6, 13);
  const Matrix<double> sum = mix + 2.0 * mix2;
  const auto lhs = fuse(g.constant(sum), g.constant(e)).value();
  const Matrix<double> rhs = y + 2.0 * fuse(g.constant(mix2), g.constant(e)).value();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(fuse(g.constant(mix), g.constant(Matrix<double>::Ones(256, 1))), std::invalid_argument);
}

TEST_CASE("attentive statistics pooling") {
  ParameterStore<double> s;
  AttentiveStatsPooling<double> asp(s, "asp", 257, 128);
  std::mt19937_64 rng(14);
  asp.init(rng);
  const double floor_sigma = std::sqrt(1e-8);

  SUBCASE("identical frames") {
    Matrix<double> h(257, 9);
    const auto frame = random_matrix<double>(257, 1, 15);
    for (Index t = 0; t < 9; ++t) h.col(t) = frame.col(0);
    Graph<double> g(false);
    const auto out = asp.forward(g, g.constant(h));
    for (Index t = 0; t < 9; ++t) CHECK(out.attention.value()(0, t) == doctest::Approx(1.0 / 9).epsilon(1e-12));
    const auto& pooled = out.pooled.value();
    REQUIRE(pooled.rows() == 514);
    for (Index c = 0; c < 257; ++c) {
      CHECK(pooled(c, 0) == frame(c, 0));
      CHECK(pooled(257 + c, 0) == floor_sigma);
    }
  }
  SUBCASE("single frame") {
    const auto h = random_matrix<double>(257, 1, 16);
    Graph<double> g(false);
    const auto out = asp.forward(g, g.constant(h));
    CHECK(out.attention.value()(0, 0) == 1.0);
    for (Index c = 0; c < 257; ++c) {
      CHECK(out.pooled.value()(c, 0) == h(c, 0));
      CHECK(out.pooled.value()(257 + c, 0) == floor_sigma);
    }
  }
  SUBCASE("random features match a scalar loop") {
    const auto h = random_matrix<double>(257, 10, 17);
    const auto& w1 = s.at("asp.attention.hidden.weight").value;
    const auto& b1 = s.at("asp.attention.hidden.bias").value;
    const auto& w2 = s.at("asp.attention.score.weight").value;
    const double b2 = s.at("asp.attention.score.bias").value(0, 0);
    std::vector<double> e(10), alpha(10);
    double top = -1e300;
    for (Index t = 0; t < 10; ++t) {
      double acc = b2;
      for (Index k = 0; k < 128; ++k) {
        double z = b1(k, 0);
        for (Index c = 0; c < 257; ++c) z += w1(k, c) * h(c, t);
        acc += w2(0, k) * std::tanh(z);
      }
      e[static_cast<std::size_t>(t)] = acc;
      top = std::max(top, acc);
    }
    double denom = 0;
    for (Index t = 0; t < 10; ++t) denom += std::exp(e[static_cast<std::size_t>(t)] - top);
    for (Index t = 0; t < 10; ++t) alpha[static_cast<std::size_t>(t)] = std::exp(e[static_cast<std::size_t>(t)] - top) / denom;
    Graph<double> g(false);
    const auto out = asp.forward(g, g.constant(h));
    for (Index c = 0; c < 257; ++c) {
      double mu = 0, second = 0;
      for (Index t = 0; t < 10; ++t) {
        mu += alpha[static_cast<std::size_t>(t)] * h(c, t);
        second += alpha[static_cast<std::size_t>(t)] * h(c, t) * h(c, t);
      }
      const double sigma = std::sqrt(std::max(second - mu * mu, 1e-8));
      CHECK(std::abs(out.pooled.value()(c, 0) - mu) < 1e-5);
      CHECK(std::abs(out.pooled.value()(257 + c, 0) - sigma) < 1e-5);
    }
  }
  SUBCASE("attention is a distribution and sigma respects the floor") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto h = random_matrix<double>(257, 3 + static_cast<Index>(seed), 100 + seed, 4.0);
      Graph<double> g(false);
      const auto out = asp.forward(g, g.constant(h));
      CHECK(std::abs(out.attention.value().sum() - 1.0) < 1e-6);
      CHECK(out.attention.value().minCoeff() >= 0);
      CHECK(out.pooled.value().bottomRows(257).minCoeff() >= floor_sigma);
    }
  }
  Graph<double> g(false);
  CHECK_THROWS_AS(asp.forward(g, g.constant(Matrix<double>(257, 0))), std::invalid_argument);
}

TEST_CASE("classifier") {
  ParameterStore<double> s;
  Classifier<double> cls(s, "classifier", 514, 257);
  std::mt19937_64 rng(18);
  cls.init(rng);
  const auto x = random_matrix<double>(4, 514, 19);
  SUBCASE("random input matches a layer-by-layer oracle in inference mode") {
    // Give the batch-norm buffers non-trivial values first.
    s.at("classifier.block1.bn.running_mean").value = random_matrix<double>(257, 1, 20, 0.1);
    s.at("classifier.block2.bn.running_var").value = random_matrix<double>(257, 1, 21).cwiseAbs();
    const auto layer = [&](const std::string& p, const Matrix<double>& in) -> Matrix<double> {
      return (in * s.at(p + ".weight").value.transpose()).rowwise() + s.at(p + ".bias").value.col(0).transpose();
    };
    const auto block = [&](const std::string& p, const Matrix<double>& in) -> Matrix<double> {
      Matrix<double> y = layer(p + ".linear", in).cwiseMax(0.0);
      for (Index f = 0; f < y.cols(); ++f) {
        const double mean = s.at(p + ".bn.running_mean").value(f, 0);
        const double var = s.at(p + ".bn.running_var").value(f, 0);
        y.col(f) = ((y.col(f).array() - mean) / std::sqrt(std::max(var, 1e-8)) * s.at(p + ".bn.gamma").value(f, 0) +
                    s.at(p + ".bn.beta").value(f, 0))
                       .matrix();
      }
      return y;
    };
    Matrix<double> z = layer("classifier.output",
                             block("classifier.block2", block("classifier.block1", layer("classifier.input", x))));
    Graph<double> g(false);
    const auto p = cls.forward(g, g.constant(x), false).value();
    for (Index r = 0; r < 4; ++r) CHECK(std::abs(p(r, 0) - 1.0 / (1.0 + std::exp(-z(r, 0)))) < 1e-5);
  }
  SUBCASE("zero final layer gives exactly 0.5") {
    cls.output_layer().weight().value.setZero();
    cls.output_layer().bias().value.setZero();
    for (bool training : {true, false}) {
      Graph<double> g(false);
      const auto p = cls.forward(g, g.constant(x), training).value();
      for (Index r = 0; r < 4; ++r) CHECK(p(r, 0) == 0.5);
    }
  }
  SUBCASE("wrong width") {
    Graph<double> g(false);
    CHECK_THROWS_AS(cls.forward(g, g.constant(random_matrix<double>(2, 513, 22)), false), std::invalid_argument);
  }
}

TEST_CASE("detect is deterministic and strictly inside (0, 1)") {
  FusionModel<float> m(FusionConfig{}, 23);
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<float> u(-0.5f, 0.5f);
  audio::Waveform a = audio::Waveform::zeros(16000), b = audio::Waveform::zeros(24000);
  for (Index i = 0; i < a.size(); ++i) a.samples(i) = u(rng);
  for (Index i = 0; i < b.size(); ++i) b.samples(i) = u(rng);
  const float p1 = m.detect(a, b);
  const float p2 = m.detect(a, b);
  CHECK(p1 == p2);
  CHECK(p1 > 0.0f);
  CHECK(p1 < 1.0f);
  CHECK(m.detect(audio::Waveform::zeros(600), b) > 0.0f);
  CHECK_THROWS_AS(m.detect(audio::Waveform::zeros(400), b), std::invalid_argument);
}

TEST_CASE("baseline embedding") {
  BaselineModel<double> m(BaselineConfig{TcnConfig{}, 128, 192, 5}, 25);
  for (Index frames : {1, 9, 40}) CHECK(m.embedding(random_matrix<double>(257, frames, 26)).size() == 192);
  const auto x = random_matrix<double>(257, 12, 27);
  CHECK(m.embedding(x) == m.embedding(x));
  Graph<double> g(false);
  const auto pooled = m.asp().forward(g, g.constant(run_tcn(m.embed_tcn(), x))).pooled;
  Graph<double> g2(false);
  const auto composed = m.projection().forward_column(g2, g2.constant(pooled.value())).value();
  CHECK((m.embedding(x) - composed.col(0)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(BaselineModel<float>(BaselineConfig{TcnConfig{}, 128, 192, 1}), std::invalid_argument);
}

TEST_CASE("cosine_score") {
  Eigen::VectorXd e = random_matrix<double>(192, 1, 28).col(0);
  CHECK(cosine_score(e, e) == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::VectorXd a = Eigen::VectorXd::Unit(4, 1), b = Eigen::VectorXd::Unit(4, 3);
  CHECK(cosine_score(a, b) == 0.0);
  const Eigen::VectorXd f = random_matrix<double>(192, 1, 29).col(0);
  for (double c : {0.5, 2.0, 1e3}) {
    CHECK(cosine_score(e, c * e) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_score(c * e, f) == doctest::Approx(cosine_score(e, f)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(cosine_score(e, Eigen::VectorXd::Zero(192)), std::invalid_argument);
  CHECK_THROWS_AS(cosine_score(e, Eigen::VectorXd::Ones(3)), std::invalid_argument);
}

TEST_CASE("parameter accounting") {
  ParameterStore<float> s;
  Linear<float> lin(s, "l", 514, 257);
  CHECK(param_count(s) == 132355);
  ParameterStore<float> c;
  Classifier<float> cls(c, "classifier", 514, 257);
  CHECK(param_count(c) == 266253);

  FusionModel<float> m(FusionConfig{}, 0);
  const auto total = param_count(m.params());
  CHECK(total >= 400000);
  CHECK(total <= 1300000);
  std::int64_t summed = 0;
  for (const auto& l : layer_breakdown(m.params())) summed += l.params;
  CHECK(summed == total);
  const auto report = model_info_report(FusionConfig{});
  CHECK(report.find("{257, 32, 64, 3, 6, 3}") != std::string::npos);
  CHECK(report.find("0.959M") != std::string::npos);
  CHECK(report.find(std::to_string(total)) != std::string::npos);
  CHECK(report.find("enroll_tcn.block17") != std::string::npos);
}

TEST_CASE("parameter names are unique and the three TCNs are disjoint") {
  FusionModel<float> m(FusionConfig{{9, 4, 6, 3, 2, 1}, 5}, 30);
  auto& store = m.params();
  const ParameterStore<float> before = store.cast<float>();
  for (std::size_t i = 0; i < store.size(); ++i)
    if (store[i].name.rfind("enroll_tcn.", 0) == 0) store[i].grad.setOnes();
  nn::AdamState<float> adam;
  nn::adam_step(store, adam, 0.01);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const bool enroll = store[i].name.rfind("enroll_tcn.", 0) == 0;
    if (!store[i].trainable) continue;
    if (enroll)
      CHECK(store[i].value != before.at(store[i].name).value);
    else
      CHECK(store[i].value == before.at(store[i].name).value);
  }
}
