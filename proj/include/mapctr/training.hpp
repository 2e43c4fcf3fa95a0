#pragma once

#include <algorithm>
#include <utility>

#include "mapctr/adam.hpp"
#include "mapctr/checkpoint.hpp"
#include "mapctr/dataset.hpp"
#include "mapctr/metrics.hpp"
#include "mapctr/pretext.hpp"

namespace mapctr {

struct TrainConfig {
  Eigen::Index batch_size = 1024;
  double lr = 1e-3;
  LrSchedule lr_schedule = LrSchedule::cosine;
  double weight_decay = 0.01;
  int max_epochs = 15;
  int patience = 2;   // early stop after this many non-improving evaluations
  int val_steps = 0;  // additional mid-epoch validation cadence; 0 = per epoch only
  std::uint64_t seed = 0;
  bool update_embedding = true;
  bool update_fi = true;
};

struct EvalPoint {
  int epoch = 0;
  std::uint64_t step = 0;
  double auc = 0.0;
  double logloss = 0.0;
};

// Stop once the metric has failed to improve on the best value for
// `patience` consecutive evaluations; the best evaluation wins.
struct EarlyStopTracker {
  explicit EarlyStopTracker(int patience_in) : patience(patience_in) {}

  // Returns true when training should stop after this evaluation.
  bool update(double metric) {
    ++evals;
    if (metric > best) {
      best = metric;
      best_eval = evals;
      stale = 0;
      return false;
    }
    return ++stale >= patience;
  }

  bool improved_last() const { return stale == 0; }

  int patience;
  double best = -1e300;
  int best_eval = 0;
  int evals = 0;
  int stale = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EvalPoint> history;
  double best_auc = 0.0;
  int best_epoch = 0;
};

inline nlohmann::json backbone_json(const BackboneConfig& c) {
  nlohmann::json j;
  j["operator"] = c.operator_string();
  j["embedding_dim"] = c.embedding_dim;
  j["mlp_width"] = c.mlp_width;
  j["mlp_depth"] = c.mlp_depth;
  j["cross_depth"] = c.cross_depth;
  j["dropout"] = c.dropout;
  return j;
}

inline BackboneConfig backbone_from_json(const nlohmann::json& j) {
  BackboneConfig c;
  c.members = BackboneConfig::parse_operator(j.at("operator").get<std::string>());
  c.embedding_dim = j.at("embedding_dim").get<Eigen::Index>();
  c.mlp_width = j.at("mlp_width").get<Eigen::Index>();
  c.mlp_depth = j.at("mlp_depth").get<int>();
  c.cross_depth = j.at("cross_depth").get<int>();
  c.dropout = j.at("dropout").get<double>();
  return c;
}

inline void check_backbone_match(const nlohmann::json& ckpt_backbone, const BackboneConfig& cur) {
  nlohmann::json now = backbone_json(cur);
  for (auto it = now.begin(); it != now.end(); ++it) {
    if (!ckpt_backbone.contains(it.key()) || ckpt_backbone.at(it.key()) != it.value())
      throw Error::config("checkpoint/config mismatch in model field '" + it.key() + "': checkpoint has " +
                          (ckpt_backbone.contains(it.key()) ? ckpt_backbone.at(it.key()).dump()
                                                            : std::string("nothing")) +
                          ", current config has " + it.value().dump());
  }
}

template <class S>
Checkpoint make_checkpoint(CtrModel<S>& model, PretextModel<S>* pretext, const std::string& stage,
                           const FeatureMap& fm, nlohmann::json config_echo) {
  Checkpoint ck;
  ck.stage = stage;
  ck.fmap_hash = fm.hash();
  ck.fmap_snapshot = fmap_snapshot_json(fm);
  config_echo["backbone"] = backbone_json(model.cfg);
  ck.config_echo = std::move(config_echo);
  std::vector<Parameter<S>*> params;
  model.collect_params(params, true, true, stage != "pretrained");
  if (pretext)
    for (auto* p : pretext->head_params()) params.push_back(p);
  for (auto* p : params) ck.tensors.push_back(to_blob(*p));
  return ck;
}

// Loads embedding and interaction tensors from a checkpoint. The CTR head
// is never loaded here; callers keep their fresh head. Pretext head tensors
// in pretrained checkpoints are ignored.
template <class S>
void warm_start(const Checkpoint& ck, CtrModel<S>& model, const FeatureMap& fm) {
  if (ck.fmap_hash != fm.hash())
    throw Error::config("checkpoint was built over a different feature map (hash mismatch)");
  check_backbone_match(ck.config_echo.at("backbone"), model.cfg);
  std::vector<Parameter<S>*> params;
  model.collect_params(params, true, true, false);
  for (auto* p : params) {
    const TensorBlob* blob = ck.find(p->name);
    if (!blob) throw Error::data("checkpoint is missing tensor '" + p->name + "'");
    from_blob(*blob, *p);
  }
}

// Loads a complete model (including the CTR head) from a finetuned/scratch
// checkpoint, reconstructing the backbone from the header.
template <class S>
CtrModel<S> model_from_checkpoint(const Checkpoint& ck, const FeatureMap& fm) {
  if (ck.stage == "pretrained")
    throw Error::config("checkpoint stage 'pretrained' has no CTR head; finetune it first");
  if (ck.fmap_hash != fm.hash())
    throw Error::config("checkpoint was built over a different feature map (hash mismatch)");
  BackboneConfig cfg = backbone_from_json(ck.config_echo.at("backbone"));
  CtrModel<S> model;
  model.init(cfg, static_cast<Eigen::Index>(fm.num_fields()), fm.global_size, 0);
  for (auto* p : model.all_params()) {
    const TensorBlob* blob = ck.find(p->name);
    if (!blob) throw Error::data("checkpoint is missing tensor '" + p->name + "'");
    from_blob(*blob, *p);
  }
  return model;
}

template <class S>
std::vector<double> predict_rows(CtrModel<S>& model, const Dataset& ds,
                                 const std::vector<Eigen::Index>& rows, Eigen::Index batch_size) {
  std::vector<double> scores;
  scores.reserve(rows.size());
  Rng no_drop(0);
  Tape<S> tape;
  tape.set_grad_enabled(false);
  for (std::size_t at = 0; at < rows.size(); at += static_cast<std::size_t>(batch_size)) {
    std::size_t count = std::min<std::size_t>(batch_size, rows.size() - at);
    IdxMatrix batch = gather_rows(ds, rows, at, count);
    Var<S> preds = model.predict(tape, batch, false, no_drop);
    for (Eigen::Index i = 0; i < preds.rows(); ++i)
      scores.push_back(static_cast<double>(preds.value()(i, 0)));
    tape.reset();
  }
  return scores;
}

template <class S>
MetricReport evaluate_split(CtrModel<S>& model, const Dataset& ds, Split split,
                            Eigen::Index batch_size) {
  std::vector<Eigen::Index> rows = ds.split_rows(split);
  if (rows.empty()) throw Error::data(std::string("split '") + split_to_string(split) + "' is empty");
  std::vector<double> scores = predict_rows(model, ds, rows, batch_size);
  std::vector<std::uint8_t> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = ds.labels[rows[i]];
  MetricReport r;
  r.auc = auc(scores, labels);
  r.logloss = logloss(scores, labels);
  r.n = rows.size();
  r.split = split_to_string(split);
  return r;
}

namespace detail {

template <class S>
std::vector<Mat<S>> snapshot_values(const std::vector<Parameter<S>*>& params) {
  std::vector<Mat<S>> out;
  out.reserve(params.size());
  for (auto* p : params) out.push_back(p->value);
  return out;
}

template <class S>
void restore_values(const std::vector<Parameter<S>*>& params, const std::vector<Mat<S>>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

inline void shuffle_rows(std::vector<Eigen::Index>& rows, std::uint64_t seed, std::uint64_t epoch) {
  Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::shuffle), epoch));
  for (std::size_t i = rows.size(); i > 1; --i)
    std::swap(rows[i - 1], rows[rng.uniform_int(i)]);
}

}  // namespace detail

// Supervised training: scratch when `warm` is null, otherwise finetuning
// from a pretrained checkpoint (embedding + interaction initialized from it,
// CTR head fresh, freeze flags honored). Early-stops on validation AUC and
// returns the parameters of the best evaluation.
template <class S>
TrainResult train_supervised(const Dataset& ds, const BackboneConfig& bcfg, const TrainConfig& tcfg,
                             const Checkpoint* warm, nlohmann::json config_echo) {
  CtrModel<S> model;
  model.init(bcfg, static_cast<Eigen::Index>(ds.fmap.num_fields()), ds.fmap.global_size, tcfg.seed);
  if (warm) warm_start(*warm, model, ds.fmap);

  std::vector<Eigen::Index> train_rows = ds.split_rows(Split::train);
  std::vector<Eigen::Index> val_rows = ds.split_rows(Split::val);
  if (train_rows.empty()) throw Error::data("training split is empty");
  if (val_rows.empty()) throw Error::data("validation split is empty");

  std::vector<Parameter<S>*> optimized;
  model.collect_params(optimized, tcfg.update_embedding, tcfg.update_fi, true);
  const std::uint64_t steps_per_epoch =
      (train_rows.size() + tcfg.batch_size - 1) / tcfg.batch_size;
  AdamConfig acfg;
  acfg.base_lr = tcfg.lr;
  acfg.weight_decay = tcfg.weight_decay;
  acfg.schedule = tcfg.lr_schedule;
  acfg.total_steps = steps_per_epoch * static_cast<std::uint64_t>(tcfg.max_epochs);
  Adam<S> opt(optimized, acfg);

  auto all_params = model.all_params();
  TrainResult result;
  result.best_auc = -1.0;
  std::vector<Mat<S>> best_values = detail::snapshot_values(all_params);
  EarlyStopTracker tracker(tcfg.patience);
  bool stop = false;
  std::uint64_t global_step = 0;
  Tape<S> tape;

  auto evaluate_now = [&](int epoch) {
    MetricReport r = evaluate_split(model, ds, Split::val, tcfg.batch_size);
    result.history.push_back({epoch, global_step, r.auc, r.logloss});
    stop = tracker.update(r.auc);
    if (tracker.improved_last()) {
      result.best_auc = r.auc;
      result.best_epoch = epoch;
      best_values = detail::snapshot_values(all_params);
    }
  };

  for (int epoch = 1; epoch <= tcfg.max_epochs && !stop; ++epoch) {
    detail::shuffle_rows(train_rows, tcfg.seed, static_cast<std::uint64_t>(epoch));
    for (std::uint64_t b = 0; b < steps_per_epoch && !stop; ++b) {
      std::size_t at = b * tcfg.batch_size;
      std::size_t count = std::min<std::size_t>(tcfg.batch_size, train_rows.size() - at);
      IdxMatrix batch = gather_rows(ds, train_rows, at, count);
      Mat<S> labels = gather_labels<S>(ds, train_rows, at, count);
      Rng drop_rng(derive_stream(tcfg.seed ^ (static_cast<std::uint64_t>(StreamTag::dropout_supervised) << 56),
                                 static_cast<std::uint64_t>(epoch), b,
                                 static_cast<std::uint64_t>(StreamTag::dropout_supervised)));
      tape.reset();
      opt.zero_grads();
      Var<S> loss = bce_loss(model.predict(tape, batch, true, drop_rng), labels);
      tape.backward(loss);
      opt.step();
      ++global_step;
      if (tcfg.val_steps > 0 && global_step % static_cast<std::uint64_t>(tcfg.val_steps) == 0)
        evaluate_now(epoch);
    }
    if (!stop) evaluate_now(epoch);
  }

  detail::restore_values(all_params, best_values);
  result.checkpoint =
      make_checkpoint(model, static_cast<PretextModel<S>*>(nullptr),
                      warm ? "finetuned" : "scratch", ds.fmap, std::move(config_echo));
  return result;
}

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;  // mean pretext loss per epoch, report only
};

// Pretraining: fixed epoch budget, cosine decay over the full step count, no
// early stopping. The checkpoint carries embedding, interaction, and pretext
// head parameters.
template <class S>
PretrainResult pretrain_model(const Dataset& ds, const BackboneConfig& bcfg,
                              const PretextConfig& pcfg, const TrainConfig& tcfg,
                              nlohmann::json config_echo) {
  CtrModel<S> model;
  model.init(bcfg, static_cast<Eigen::Index>(ds.fmap.num_fields()), ds.fmap.global_size, tcfg.seed);
  PretextModel<S> pretext;
  pretext.init(model, ds.fmap, pcfg, tcfg.seed);

  std::vector<Eigen::Index> train_rows = ds.split_rows(Split::train);
  if (train_rows.empty()) throw Error::data("training split is empty");

  std::vector<Parameter<S>*> optimized = model.all_params();
  for (auto* p : pretext.head_params()) optimized.push_back(p);
  const std::uint64_t steps_per_epoch =
      (train_rows.size() + tcfg.batch_size - 1) / tcfg.batch_size;
  AdamConfig acfg;
  acfg.base_lr = tcfg.lr;
  acfg.weight_decay = tcfg.weight_decay;
  acfg.schedule = tcfg.lr_schedule;
  acfg.total_steps = steps_per_epoch * static_cast<std::uint64_t>(tcfg.max_epochs);
  Adam<S> opt(optimized, acfg);

  PretrainResult result;
  Tape<S> tape;
  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    detail::shuffle_rows(train_rows, tcfg.seed, static_cast<std::uint64_t>(epoch));
    double loss_sum = 0.0;
    for (std::uint64_t b = 0; b < steps_per_epoch; ++b) {
      std::size_t at = b * tcfg.batch_size;
      std::size_t count = std::min<std::size_t>(tcfg.batch_size, train_rows.size() - at);
      IdxMatrix batch = gather_rows(ds, train_rows, at, count);
      tape.reset();
      opt.zero_grads();
      Var<S> loss = pretext.batch_loss(tape, batch, ds.fmap, static_cast<std::uint64_t>(epoch), b);
      loss_sum += static_cast<double>(loss.scalar());
      tape.backward(loss);
      opt.step();
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(steps_per_epoch));
  }
  result.checkpoint = make_checkpoint(model, &pretext, "pretrained", ds.fmap, std::move(config_echo));
  return result;
}

}  // namespace mapctr
