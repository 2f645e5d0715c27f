// Copyright 2026 The tff Authors
// SPDX-License-Identifier: Apache-2.0

#include "tff/train/trainer.hpp"

#include "tff/error.hpp"
#include "tff/eval/metrics.hpp"
#include "tff/sim/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tff::train {

namespace {

using sim::derive_seed;
using sim::tag;

nn::Matrix<float> features(const audio::Waveform& w) { return model::to_input<float>(audio::log_spectrogram(w)); }

NamedTensor to_tensor(const std::string& name, const nn::Shape& shape, const nn::Matrix<float>& m) {
  NamedTensor t;
  t.name = name;
  t.shape = shape;
  t.data.assign(m.data(), m.data() + m.size());
  return t;
}

void from_tensor(const NamedTensor& t, const nn::Shape& shape, nn::Matrix<float>& m) {
  if (t.shape != shape)
    throw FormatError("checkpoint tensor '" + t.name + "' has shape " + nlohmann::json(t.shape).dump() + ", model expects " +
                      nlohmann::json(shape).dump());
  std::copy(t.data.begin(), t.data.end(), m.data());
}

std::string scheduler_json(const SchedulerState& s) {
  nlohmann::ordered_json j;
  j["lr"] = s.lr;
  j["best"] = s.best;
  j["has_best"] = s.has_best;
  j["epochs_since_improvement"] = s.epochs_since_improvement;
  return j.dump();
}

SchedulerState scheduler_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    return {j.at("lr").get<double>(), j.at("best").get<double>(), j.at("has_best").get<bool>(),
            j.at("epochs_since_improvement").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint scheduler state: ") + e.what());
  }
}

void require_kind(const Checkpoint& ckpt, Mode mode) {
  if (ckpt.meta("kind") != to_string(mode))
    throw FormatError("checkpoint holds a " + ckpt.meta("kind") + " model, expected " + to_string(mode));
}

int num_classes_of(const Checkpoint& ckpt) {
  try {
    return std::stoi(ckpt.meta("num_classes"));
  } catch (const std::logic_error&) {
    throw FormatError("checkpoint num_classes is not an integer");
  }
}

}  // namespace

void store_to_checkpoint(const nn::ParameterStore<float>& store, Checkpoint& ckpt, const std::string& prefix) {
  for (std::size_t i = 0; i < store.size(); ++i)
    ckpt.tensors.push_back(to_tensor(prefix + store[i].name, store[i].shape, store[i].value));
}

void store_from_checkpoint(nn::ParameterStore<float>& store, const Checkpoint& ckpt, const std::string& prefix) {
  std::size_t expected = 0;
  for (const auto& t : ckpt.tensors) expected += t.name.rfind(prefix, 0) == 0;
  if (expected != store.size())
    throw FormatError("checkpoint has " + std::to_string(expected) + " '" + prefix + "' tensors, model has " +
                      std::to_string(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i)
    from_tensor(ckpt.tensor(prefix + store[i].name), store[i].shape, store[i].value);
}

std::unique_ptr<model::FusionModel<float>> load_fusion(const Checkpoint& ckpt) {
  require_kind(ckpt, Mode::Fusion);
  const auto cfg = parse_config(ckpt.meta("config"), "checkpoint config");
  auto m = std::make_unique<model::FusionModel<float>>(cfg.fusion_config());
  store_from_checkpoint(m->params(), ckpt, "param.");
  return m;
}

std::unique_ptr<model::BaselineModel<float>> load_baseline(const Checkpoint& ckpt) {
  require_kind(ckpt, Mode::Baseline);
  const auto cfg = parse_config(ckpt.meta("config"), "checkpoint config");
  auto m = std::make_unique<model::BaselineModel<float>>(cfg.baseline_config(num_classes_of(ckpt)));
  store_from_checkpoint(m->params(), ckpt, "param.");
  return m;
}

Trainer::Trainer(const TrainConfig& cfg, const sim::Corpus& corpus, const sim::SpeakerSplit& split)
    : cfg_(cfg), corpus_(corpus), train_pool_(corpus, sim::filter_speakers(corpus.manifest, split.train)) {
  cfg_.validate();
  for (const auto& s : split.val)
    if (split.train.count(s)) throw std::invalid_argument("Trainer: speaker '" + s + "' is in both train and val");
  classes_ = train_pool_.speakers();
  for (std::size_t i = 0; i < classes_.size(); ++i) class_index_[classes_[i]] = static_cast<int>(i);

  const auto init_seed = derive_seed(cfg_.seed, {tag("model-init")});
  if (cfg_.mode == Mode::Fusion)
    fusion_ = std::make_unique<model::FusionModel<float>>(cfg_.fusion_config(), init_seed);
  else
    baseline_ = std::make_unique<model::BaselineModel<float>>(
        cfg_.baseline_config(static_cast<int>(classes_.size())), init_seed);
  sched_.lr = cfg_.lr;

  // Fixed validation list: every row's test signal is one augmentation
  // variant of the test utterance, drawn once.
  const auto val_manifest = sim::filter_speakers(corpus.manifest, split.val);
  const UtterancePool val_pool(corpus, val_manifest);
  std::map<std::string, std::size_t> val_index;
  for (std::size_t i = 0; i < val_pool.size(); ++i) val_index[val_pool[i].utt_id] = i;
  const auto trials = sim::build_trials(val_manifest, cfg_.val_target_trials, cfg_.val_nontarget_trials,
                                        derive_seed(cfg_.seed, {tag("val-trials")}));
  for (std::size_t k = 0; k < trials.size(); ++k) {
    const auto& t = trials[k];
    const auto& target = val_pool[val_index.at(t.test)];
    const std::string enroll_speaker = val_pool[val_index.at(t.enroll)].speaker_id;
    sim::Rng rng(derive_seed(cfg_.seed, {tag("val-row"), k}));
    const sim::Variant variant = sim::kAllVariants[sim::uniform_index(rng, 4)];
    const bool val_has_other = std::any_of(val_pool.samples().begin(), val_pool.samples().end(), [&](const auto& c) {
      return c.speaker_id != target.speaker_id && c.speaker_id != enroll_speaker;
    });
    const auto aug = sim::augment_sample(target, variant, val_has_other ? val_pool.samples() : train_pool_.samples(),
                                         {enroll_speaker}, rng());
    val_rows_.push_back({t.enroll, t.label, features(aug.wave())});
    if (!val_enroll_.count(t.enroll)) val_enroll_.emplace(t.enroll, features(corpus.wave(t.enroll)));
  }
}

Trainer::~Trainer() = default;

nn::ParameterStore<float>& Trainer::params() { return fusion_ ? fusion_->params() : baseline_->params(); }

const model::FusionModel<float>& Trainer::fusion() const {
  if (!fusion_) throw std::logic_error("trainer is in baseline mode");
  return *fusion_;
}

const model::BaselineModel<float>& Trainer::baseline() const {
  if (!baseline_) throw std::logic_error("trainer is in fusion mode");
  return *baseline_;
}

double Trainer::train_step(const PairBatch& batch, double lr) {
  const std::size_t b = batch.rows.size();
  std::vector<nn::Matrix<float>> enroll(b), test(b);
  for (std::size_t r = 0; r < b; ++r) {
    enroll[r] = features(corpus_.wave(batch.rows[r].enroll_utt));
    test[r] = features(batch.rows[r].test.wave());
  }
  auto& store = params();
  nn::Graph<float> g;
  nn::Var<float> loss;
  if (fusion_) {
    std::vector<model::FusionModel<float>::Pair> pairs;
    std::vector<int> labels;
    for (std::size_t r = 0; r < b; ++r) {
      pairs.push_back({&enroll[r], &test[r]});
      labels.push_back(batch.rows[r].label);
    }
    loss = nn::bce_loss(fusion_->forward(g, pairs, true), labels);
  } else {
    // Speaker classification on both sides of every pair.
    std::vector<const nn::Matrix<float>*> inputs;
    std::vector<int> classes;
    for (std::size_t r = 0; r < b; ++r) {
      inputs.push_back(&test[r]);
      classes.push_back(class_index_.at(batch.rows[r].test.speaker_id));
    }
    for (std::size_t r = 0; r < b; ++r) {
      inputs.push_back(&enroll[r]);
      classes.push_back(class_index_.at(batch.rows[r].enroll_speaker));
    }
    loss = nn::ce_loss(baseline_->logits(g, inputs), classes);
  }
  store.zero_grad();
  g.backward(loss);
  if (cfg_.grad_clip > 0) nn::clip_grad_norm(store, cfg_.grad_clip);
  nn::adam_step(store, adam_, lr);
  const double value = static_cast<double>(loss.value()(0, 0));
  if (!std::isfinite(value)) throw NumericalError("non-finite training loss");
  return value;
}

EpochStats Trainer::train_epoch() {
  const int epoch = epochs_done_ + 1;
  std::vector<std::size_t> order(train_pool_.size());
  std::iota(order.begin(), order.end(), 0);
  sim::Rng rng(derive_seed(cfg_.seed, {tag("epoch"), static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);

  const auto bs = static_cast<std::size_t>(cfg_.batch_size);
  double total = 0;
  int batches = 0;
  for (std::size_t start = 0; start + 2 <= order.size(); start += bs) {
    const std::size_t n = std::min(bs, order.size() - start);
    const std::span<const std::size_t> targets(order.data() + start, n);
    const auto batch = make_pairs(train_pool_, targets,
                                  derive_seed(cfg_.seed, {tag("batch"), static_cast<std::uint64_t>(epoch),
                                                          static_cast<std::uint64_t>(batches)}));
    total += train_step(batch, sched_.lr);
    ++batches;
  }

  EpochStats stats;
  stats.epoch = epoch;
  stats.train_loss = batches > 0 ? total / batches : 0.0;
  stats.lr = sched_.lr;
  stats.val_eer = validate();
  sched_ = reduce_on_plateau(sched_, stats.val_eer, cfg_.plateau_factor);
  epochs_done_ = epoch;
  return stats;
}

double Trainer::validate() const {
  eval::ScoreSet set;
  if (fusion_) {
    std::map<std::string, nn::Matrix<float>> emb;
    for (const auto& [utt, spec] : val_enroll_) emb.emplace(utt, fusion_->embedding(spec));
    for (const auto& row : val_rows_) {
      set.scores.push_back(static_cast<double>(fusion_->detect_with_embedding(emb.at(row.enroll), row.test)));
      set.labels.push_back(row.label);
    }
  } else {
    std::map<std::string, Eigen::VectorXd> emb;
    for (const auto& [utt, spec] : val_enroll_) emb.emplace(utt, baseline_->embedding(spec));
    for (const auto& row : val_rows_) {
      set.scores.push_back(model::cosine_score(emb.at(row.enroll), baseline_->embedding(row.test)));
      set.labels.push_back(row.label);
    }
  }
  // Raw EER: a model ranking backwards should look bad to the scheduler.
  return eval::compute_eer_raw(set.scores, set.labels).eer;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.set_meta("kind", to_string(cfg_.mode));
  ckpt.set_meta("config", to_text(cfg_));
  ckpt.set_meta("num_classes", std::to_string(classes_.size()));
  ckpt.set_meta("classes", nlohmann::json(classes_).dump());
  ckpt.set_meta("epoch", std::to_string(epochs_done_));
  ckpt.set_meta("scheduler", scheduler_json(sched_));
  ckpt.set_meta("adam_step", std::to_string(adam_.step));
  // Every random stream is derived from (seed, epoch, batch); this is the
  // whole generator state needed to continue.
  nlohmann::ordered_json rng;
  rng["scheme"] = "derived";
  rng["seed"] = cfg_.seed;
  rng["next_epoch"] = epochs_done_ + 1;
  ckpt.set_meta("rng", rng.dump());

  const auto& store = fusion_ ? fusion_->params() : baseline_->params();
  store_to_checkpoint(store, ckpt, "param.");
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (auto it = adam_.m.find(p.name); it != adam_.m.end()) {
      ckpt.tensors.push_back(to_tensor("adam.m." + p.name, p.shape, it->second));
      ckpt.tensors.push_back(to_tensor("adam.v." + p.name, p.shape, adam_.v.at(p.name)));
    }
  }
  return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
  require_kind(ckpt, cfg_.mode);
  const auto saved = parse_config(ckpt.meta("config"), "checkpoint config");
  if (!(saved.fusion_config() == cfg_.fusion_config()) || saved.embedding_dim != cfg_.embedding_dim)
    throw FormatError("checkpoint model shape differs from the configured model");
  if (num_classes_of(ckpt) != static_cast<int>(classes_.size()))
    throw FormatError("checkpoint was trained on " + ckpt.meta("num_classes") + " speakers, corpus split has " +
                      std::to_string(classes_.size()));
  auto& store = params();
  store_from_checkpoint(store, ckpt, "param.");
  adam_ = nn::AdamState<float>{};
  adam_.step = std::stoll(ckpt.meta("adam_step"));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    if (!ckpt.has_tensor("adam.m." + p.name)) continue;
    from_tensor(ckpt.tensor("adam.m." + p.name), p.shape, adam_.m[p.name] = nn::Matrix<float>(p.value.rows(), p.value.cols()));
    from_tensor(ckpt.tensor("adam.v." + p.name), p.shape, adam_.v[p.name] = nn::Matrix<float>(p.value.rows(), p.value.cols()));
  }
  sched_ = scheduler_from_json(ckpt.meta("scheduler"));
  epochs_done_ = std::stoi(ckpt.meta("epoch"));
}

}  // namespace tff::train
