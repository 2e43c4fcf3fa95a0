#include "mapctr/config.hpp"

#include <fstream>
#include <sstream>

namespace mapctr {

namespace {

// Pulls `key` out of `section`, enforcing presence of defaults by only
// reading known keys; complains about anything left over.
class SectionReader {
 public:
  SectionReader(nlohmann::json j, std::string name) : j_(std::move(j)), name_(std::move(name)) {}

  template <class T>
  void read(const char* key, T& into) {
    if (!j_.contains(key)) return;
    try {
      into = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error::config("config: bad value type for " + name_ + "." + key);
    }
    seen_.push_back(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      bool known = false;
      for (const auto& k : seen_)
        if (k == it.key()) known = true;
      if (!known) throw Error::config("config: unknown key '" + name_ + "." + it.key() + "'");
    }
  }

 private:
  nlohmann::json j_;
  std::string name_;
  std::vector<std::string> seen_;
};

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error::config(std::string("config JSON parse failure: ") + e.what());
  }
  RunConfig c;
  std::vector<std::string> top_seen;
  auto section = [&](const char* name) -> nlohmann::json {
    top_seen.push_back(name);
    return j.contains(name) ? j.at(name) : nlohmann::json::object();
  };

  {
    SectionReader r(section("data"), "data");
    r.read("path", c.data.path);
    r.read("schema", c.data.schema);
    r.read("min_count", c.data.min_count);
    r.finish();
  }
  {
    SectionReader r(section("model"), "model");
    r.read("operator", c.model.op);
    r.read("d", c.model.d);
    r.read("width", c.model.width);
    r.read("depth", c.model.depth);
    r.read("dropout", c.model.dropout);
    r.finish();
  }
  {
    SectionReader r(section("pretrain"), "pretrain");
    r.read("task", c.pretrain.task);
    r.read("gamma", c.pretrain.gamma);
    r.read("strategy", c.pretrain.strategy);
    r.read("k", c.pretrain.k);
    r.read("alpha", c.pretrain.alpha);
    r.read("epochs", c.pretrain.epochs);
    r.read("lr", c.pretrain.lr);
    r.read("weight_decay", c.pretrain.weight_decay);
    r.read("batch_size", c.pretrain.batch_size);
    r.finish();
  }
  {
    SectionReader r(section("finetune"), "finetune");
    r.read("epochs", c.finetune.epochs);
    r.read("lr", c.finetune.lr);
    r.read("weight_decay", c.finetune.weight_decay);
    r.read("patience", c.finetune.patience);
    r.read("update_embedding", c.finetune.update_embedding);
    r.read("update_fi", c.finetune.update_fi);
    r.read("batch_size", c.finetune.batch_size);
    r.read("lr_schedule", c.finetune.lr_schedule);
    r.read("val_steps", c.finetune.val_steps);
    r.finish();
  }
  {
    SectionReader r(section("bench"), "bench");
    r.read("warmup_epochs", c.bench.warmup_epochs);
    r.read("timed_epochs", c.bench.timed_epochs);
    r.finish();
  }
  if (j.contains("seed")) {
    c.seed = j.at("seed").get<std::uint64_t>();
    top_seen.push_back("seed");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = it.key() == "seed";
    for (const auto& k : top_seen)
      if (k == it.key()) known = true;
    if (!known) throw Error::config("config: unknown key '" + it.key() + "'");
  }

  // Validation of value ranges happens here so every command agrees.
  (void)c.backbone();
  (void)c.pretext();
  if (c.pretrain.epochs < 0 || c.finetune.epochs < 0) throw Error::config("config: epochs must be >= 0");
  if (c.finetune.patience < 1) throw Error::config("config: patience must be >= 1");
  if (c.pretrain.batch_size < 1 || c.finetune.batch_size < 1)
    throw Error::config("config: batch_size must be >= 1");
  if (c.finetune.lr_schedule != "cosine" && c.finetune.lr_schedule != "constant")
    throw Error::config("config: lr_schedule must be cosine or constant");
  if (c.bench.warmup_epochs < 0 || c.bench.timed_epochs < 1)
    throw Error::config("config: bench epochs invalid");
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["data"] = {{"path", data.path}, {"schema", data.schema}, {"min_count", data.min_count}};
  j["model"] = {{"operator", model.op},
                {"d", model.d},
                {"width", model.width},
                {"depth", model.depth},
                {"dropout", model.dropout}};
  j["pretrain"] = {{"task", pretrain.task},
                   {"gamma", pretrain.gamma},
                   {"strategy", pretrain.strategy},
                   {"k", pretrain.k},
                   {"alpha", pretrain.alpha},
                   {"epochs", pretrain.epochs},
                   {"lr", pretrain.lr},
                   {"weight_decay", pretrain.weight_decay},
                   {"batch_size", pretrain.batch_size}};
  j["finetune"] = {{"epochs", finetune.epochs},
                   {"lr", finetune.lr},
                   {"weight_decay", finetune.weight_decay},
                   {"patience", finetune.patience},
                   {"update_embedding", finetune.update_embedding},
                   {"update_fi", finetune.update_fi},
                   {"batch_size", finetune.batch_size},
                   {"lr_schedule", finetune.lr_schedule},
                   {"val_steps", finetune.val_steps}};
  j["bench"] = {{"warmup_epochs", bench.warmup_epochs}, {"timed_epochs", bench.timed_epochs}};
  return j;
}

BackboneConfig RunConfig::backbone() const {
  BackboneConfig b;
  b.members = BackboneConfig::parse_operator(model.op);
  b.embedding_dim = model.d;
  b.mlp_width = model.width;
  b.mlp_depth = model.depth;
  b.cross_depth = model.depth;  // tied, matching the assembled-depth rule
  b.dropout = model.dropout;
  b.validate();
  return b;
}

PretextConfig RunConfig::pretext() const {
  PretextConfig p;
  p.task = pretext_task_from_string(pretrain.task);
  p.gamma = pretrain.gamma;
  p.strategy = replace_strategy_from_string(pretrain.strategy);
  p.k = pretrain.k;
  p.alpha = pretrain.alpha;
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw Error::config("config: pretrain.gamma must lie in (0,1)");
  if (p.alpha < 0.0 || p.alpha > 1.0) throw Error::config("config: pretrain.alpha must lie in [0,1]");
  if (p.k < 1) throw Error::config("config: pretrain.k must be >= 1");
  return p;
}

TrainConfig RunConfig::pretrain_train() const {
  TrainConfig t;
  t.batch_size = pretrain.batch_size;
  t.lr = pretrain.lr;
  t.lr_schedule = LrSchedule::cosine;
  t.weight_decay = pretrain.weight_decay;
  t.max_epochs = pretrain.epochs;
  t.seed = seed;
  return t;
}

TrainConfig RunConfig::supervised_train() const {
  TrainConfig t;
  t.batch_size = finetune.batch_size;
  t.lr = finetune.lr;
  t.lr_schedule = finetune.lr_schedule == "cosine" ? LrSchedule::cosine : LrSchedule::constant;
  t.weight_decay = finetune.weight_decay;
  t.max_epochs = finetune.epochs;
  t.patience = finetune.patience;
  t.val_steps = finetune.val_steps;
  t.seed = seed;
  t.update_embedding = finetune.update_embedding;
  t.update_fi = finetune.update_fi;
  return t;
}

}  // namespace mapctr
