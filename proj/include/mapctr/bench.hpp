#pragma once

#include <chrono>

#include "mapctr/training.hpp"

namespace mapctr {

// Pretraining efficiency measurement over the whole loop: corruption, noise
// sampling, forward, backward, optimizer. Parameter counts follow the
// above-the-embedding convention (interaction members plus pretext head;
// the embedding table is excluded).
struct BenchReport {
  std::string task;
  std::string backbone;
  std::uint64_t params_above_embedding = 0;
  double seconds_per_epoch = 0.0;  // median of the timed epochs
  std::vector<double> epoch_seconds;
  std::uint64_t M = 0;
  Eigen::Index B = 0;
  int K = 0;
  double gamma = 0.0;
  Eigen::Index num_fields = 0;
  std::uint64_t rows = 0;
  int m = 0;
  int warmup_epochs = 1;
  int timed_epochs = 3;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["task"] = task;
    j["backbone"] = backbone;
    j["params_above_embedding"] = params_above_embedding;
    j["seconds_per_epoch"] = seconds_per_epoch;
    j["epoch_seconds"] = epoch_seconds;
    j["M"] = M;
    j["B"] = B;
    j["K"] = K;
    j["gamma"] = gamma;
    j["num_fields"] = num_fields;
    j["rows"] = rows;
    j["m"] = m;
    j["warmup_epochs"] = warmup_epochs;
    j["timed_epochs"] = timed_epochs;
    return j;
  }
};

template <class S>
BenchReport run_bench(const Dataset& ds, const BackboneConfig& bcfg, const PretextConfig& pcfg,
                      Eigen::Index batch_size, double lr, int warmup, int timed,
                      std::uint64_t seed) {
  CtrModel<S> model;
  model.init(bcfg, static_cast<Eigen::Index>(ds.fmap.num_fields()), ds.fmap.global_size, seed);
  PretextModel<S> pretext;
  pretext.init(model, ds.fmap, pcfg, seed);

  std::vector<Eigen::Index> train_rows = ds.split_rows(Split::train);
  if (train_rows.empty()) throw Error::data("training split is empty");
  std::vector<Parameter<S>*> optimized = model.all_params();
  for (auto* p : pretext.head_params()) optimized.push_back(p);
  const std::uint64_t steps_per_epoch =
      (train_rows.size() + batch_size - 1) / batch_size;
  AdamConfig acfg;
  acfg.base_lr = lr;
  acfg.schedule = LrSchedule::cosine;
  acfg.total_steps = steps_per_epoch * static_cast<std::uint64_t>(warmup + timed);
  Adam<S> opt(optimized, acfg);

  BenchReport report;
  report.task = pretext_task_to_string(pcfg.task);
  report.backbone = bcfg.operator_string();
  report.M = ds.fmap.global_size;
  report.B = batch_size;
  report.K = pcfg.k;
  report.gamma = pcfg.gamma;
  report.num_fields = static_cast<Eigen::Index>(ds.fmap.num_fields());
  report.rows = train_rows.size();
  report.m = corrupted_field_count(pcfg.gamma, report.num_fields);
  report.warmup_epochs = warmup;
  report.timed_epochs = timed;
  std::uint64_t fi_params = 0;
  {
    std::vector<Parameter<S>*> fi;
    model.collect_params(fi, false, true, false);
    for (auto* p : fi) fi_params += static_cast<std::uint64_t>(p->size());
  }
  report.params_above_embedding = fi_params + pretext.head_param_count();

  Tape<S> tape;
  for (int epoch = 1; epoch <= warmup + timed; ++epoch) {
    detail::shuffle_rows(train_rows, seed, static_cast<std::uint64_t>(epoch));
    auto start = std::chrono::steady_clock::now();
    for (std::uint64_t b = 0; b < steps_per_epoch; ++b) {
      std::size_t at = b * batch_size;
      std::size_t count = std::min<std::size_t>(batch_size, train_rows.size() - at);
      IdxMatrix batch = gather_rows(ds, train_rows, at, count);
      tape.reset();
      opt.zero_grads();
      Var<S> loss = pretext.batch_loss(tape, batch, ds.fmap, static_cast<std::uint64_t>(epoch), b);
      tape.backward(loss);
      opt.step();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (epoch > warmup) report.epoch_seconds.push_back(secs);
  }
  std::vector<double> sorted = report.epoch_seconds;
  std::sort(sorted.begin(), sorted.end());
  report.seconds_per_epoch = sorted[sorted.size() / 2];
  return report;
}

}  // namespace mapctr
