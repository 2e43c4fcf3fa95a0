#pragma once

#include <string>

#include "json.hpp"
#include "mapctr/backbones.hpp"
#include "mapctr/pretext.hpp"
#include "mapctr/training.hpp"

namespace mapctr {

// The run-config document. Every key has a default; unknown keys are
// rejected. The effective (post-default) form is echoed into checkpoints
// and reports via to_json().
struct RunConfig {
  struct Data {
    std::string path;
    std::string schema;
    std::uint64_t min_count = 2;
  } data;

  struct Model {
    std::string op = "mlp";
    Eigen::Index d = 16;
    Eigen::Index width = 256;
    int depth = 3;
    double dropout = 0.0;
  } model;

  struct Pretrain {
    std::string task = "rfd";
    double gamma = 0.3;
    std::string strategy = "field-frequency";
    int k = 25;
    double alpha = 0.1;
    int epochs = 10;
    double lr = 1e-3;
    double weight_decay = 0.05;
    Eigen::Index batch_size = 1024;
  } pretrain;

  struct Finetune {
    int epochs = 15;
    double lr = 1e-3;
    double weight_decay = 0.01;
    int patience = 2;
    bool update_embedding = true;
    bool update_fi = true;
    Eigen::Index batch_size = 1024;
    std::string lr_schedule = "cosine";
    int val_steps = 0;
  } finetune;

  struct Bench {
    int warmup_epochs = 1;
    int timed_epochs = 3;
  } bench;

  std::uint64_t seed = 0;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;

  BackboneConfig backbone() const;
  PretextConfig pretext() const;
  TrainConfig pretrain_train() const;   // cosine decay, no early stop semantics
  TrainConfig supervised_train() const; // shared by scratch and finetune
};

}  // namespace mapctr
