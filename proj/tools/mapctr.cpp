#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mapctr/bench.hpp"
#include "mapctr/config.hpp"
#include "mapctr/synth.hpp"

using namespace mapctr;

namespace {

std::string now_iso8601() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void emit(nlohmann::json j) {
  j["timestamp"] = now_iso8601();
  std::cout << j.dump(2) << "\n";
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot reopen '" + path + "' for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

nlohmann::json history_json(const std::vector<EvalPoint>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : history)
    arr.push_back({{"epoch", e.epoch}, {"step", e.step}, {"auc", e.auc}, {"logloss", e.logloss}});
  return arr;
}

int cmd_preprocess(const std::string& input, const std::string& schema_path, std::uint64_t min_count,
                   const std::string& out) {
  Schema schema = Schema::from_json_file(schema_path);
  Dataset ds = preprocess_csv(input, schema, min_count);
  ds.save(out);
  std::uint64_t train = ds.split_rows(Split::train).size(), val = ds.split_rows(Split::val).size(),
                test = ds.split_rows(Split::test).size();
  emit({{"command", "preprocess"},
        {"fields", ds.fmap.num_fields()},
        {"features", ds.fmap.global_size},
        {"rows", ds.num_rows()},
        {"rows_train", train},
        {"rows_val", val},
        {"rows_test", test},
        {"min_count", min_count},
        {"fmap_hash", ds.fmap.hash()},
        {"out", out}});
  return 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out) {
  SynthSpec spec = SynthSpec::from_json_file(spec_path);
  SynthResult res = generate_synth(spec);
  res.dataset.save(out);
  emit({{"command", "synth"},
        {"rows", res.dataset.num_rows()},
        {"fields", res.dataset.fmap.num_fields()},
        {"features", res.dataset.fmap.global_size},
        {"bayes_auc", res.bayes_auc},
        {"label_rate", res.label_rate},
        {"rules", spec.rules.size()},
        {"file_hash", file_hash(out)},
        {"out", out}});
  return 0;
}

template <class S>
int cmd_train(const std::string& config_path, const std::string& data_path, const std::string& out,
              const std::string& from) {
  RunConfig cfg = RunConfig::from_json_file(config_path);
  Dataset ds = Dataset::load(data_path);
  Checkpoint warm;
  const bool finetune = !from.empty();
  if (finetune) warm = Checkpoint::load(from);
  TrainResult res = train_supervised<S>(ds, cfg.backbone(), cfg.supervised_train(),
                                        finetune ? &warm : nullptr, cfg.to_json());
  res.checkpoint.save(out);
  emit({{"command", finetune ? "finetune" : "train"},
        {"stage", res.checkpoint.stage},
        {"best_val_auc", res.best_auc},
        {"best_epoch", res.best_epoch},
        {"history", history_json(res.history)},
        {"config", cfg.to_json()},
        {"out", out}});
  return 0;
}

template <class S>
int cmd_pretrain(const std::string& config_path, const std::string& data_path, const std::string& out) {
  RunConfig cfg = RunConfig::from_json_file(config_path);
  Dataset ds = Dataset::load(data_path);
  PretrainResult res = pretrain_model<S>(ds, cfg.backbone(), cfg.pretext(), cfg.pretrain_train(),
                                         cfg.to_json());
  res.checkpoint.save(out);
  emit({{"command", "pretrain"},
        {"stage", "pretrained"},
        {"task", cfg.pretrain.task},
        {"epoch_losses", res.epoch_losses},
        {"config", cfg.to_json()},
        {"out", out}});
  return 0;
}

template <class S>
int cmd_eval(const std::string& ckpt_path, const std::string& data_path, const std::string& split) {
  Split which = split_from_string(split);
  Checkpoint ck = Checkpoint::load(ckpt_path);
  Dataset ds = Dataset::load(data_path);
  CtrModel<S> model = model_from_checkpoint<S>(ck, ds.fmap);
  MetricReport r = evaluate_split(model, ds, which, 4096);
  emit({{"command", "eval"},
        {"auc", r.auc},
        {"logloss", r.logloss},
        {"n", r.n},
        {"split", r.split},
        {"stage", ck.stage},
        {"config", ck.config_echo},
        {"ckpt", ckpt_path}});
  return 0;
}

template <class S>
int cmd_bench(const std::string& config_path, const std::string& data_path, const std::string& csv) {
  RunConfig cfg = RunConfig::from_json_file(config_path);
  Dataset ds = Dataset::load(data_path);
  BenchReport r = run_bench<S>(ds, cfg.backbone(), cfg.pretext(), cfg.pretrain.batch_size,
                               cfg.pretrain.lr, cfg.bench.warmup_epochs, cfg.bench.timed_epochs,
                               cfg.seed);
  nlohmann::json j = r.to_json();
  j["command"] = "bench";
  j["config"] = cfg.to_json();
  emit(j);
  std::fprintf(stderr, "%-10s %-14s %14s %16s %10s %6s %4s\n", "task", "backbone", "params>emb",
               "sec/epoch", "M", "B", "K");
  std::fprintf(stderr, "%-10s %-14s %14llu %16.4f %10llu %6lld %4d\n", r.task.c_str(),
               r.backbone.c_str(), static_cast<unsigned long long>(r.params_above_embedding),
               r.seconds_per_epoch, static_cast<unsigned long long>(r.M),
               static_cast<long long>(r.B), r.K);
  if (!csv.empty()) {
    bool fresh = !std::ifstream(csv).good();
    std::ofstream out(csv, std::ios::app);
    if (!out) throw Error::data("cannot open '" + csv + "' for writing");
    if (fresh) out << "task,backbone,params_above_embedding,seconds_per_epoch,M,B,K,gamma,rows\n";
    out << r.task << ',' << r.backbone << ',' << r.params_above_embedding << ','
        << r.seconds_per_epoch << ',' << r.M << ',' << r.B << ',' << r.K << ',' << r.gamma << ','
        << r.rows << "\n";
  }
  return 0;
}

template <class S>
int dispatch(const std::string& sub, const std::string& config, const std::string& data,
             const std::string& input, const std::string& schema, std::uint64_t min_count,
             const std::string& spec, const std::string& out, const std::string& from,
             const std::string& ckpt, const std::string& split, const std::string& csv) {
  if (sub == "preprocess") return cmd_preprocess(input, schema, min_count, out);
  if (sub == "synth") return cmd_synth(spec, out);
  if (sub == "train") return cmd_train<S>(config, data, out, "");
  if (sub == "pretrain") return cmd_pretrain<S>(config, data, out);
  if (sub == "finetune") return cmd_train<S>(config, data, out, from);
  if (sub == "eval") return cmd_eval<S>(ckpt, data, split);
  if (sub == "bench") return cmd_bench<S>(config, data, csv);
  throw Error::usage("unknown subcommand '" + sub + "'");
}

}  // namespace

int main(int argc, char** argv) {
  Eigen::setNbThreads(static_cast<int>(env_u64("MAP_THREADS", 1)));

  CLI::App app{"Self-supervised pretraining toolkit for multi-field categorical CTR data"};
  app.require_subcommand(1);
  std::string config, data, input, schema, spec, out, from, ckpt, csv;
  std::string split = "test";
  std::uint64_t min_count = 2;

  auto* pre = app.add_subcommand("preprocess", "Build a binary dataset from CSV");
  pre->add_option("--input", input, "CSV input file")->required();
  pre->add_option("--schema", schema, "schema JSON")->required();
  pre->add_option("--min-count", min_count, "vocabulary threshold (default 2)");
  pre->add_option("--out", out, "output dataset file")->required();

  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset");
  syn->add_option("--spec", spec, "synth spec JSON")->required();
  syn->add_option("--out", out, "output dataset file")->required();

  auto* tr = app.add_subcommand("train", "Supervised training from scratch");
  tr->add_option("--config", config, "run config JSON")->required();
  tr->add_option("--data", data, "dataset file")->required();
  tr->add_option("--out", out, "output checkpoint")->required();

  auto* pt = app.add_subcommand("pretrain", "Self-supervised pretraining");
  pt->add_option("--config", config, "run config JSON")->required();
  pt->add_option("--data", data, "dataset file")->required();
  pt->add_option("--out", out, "output checkpoint")->required();

  auto* ft = app.add_subcommand("finetune", "Finetune from a pretrained checkpoint");
  ft->add_option("--config", config, "run config JSON")->required();
  ft->add_option("--data", data, "dataset file")->required();
  ft->add_option("--from", from, "pretrained checkpoint")->required();
  ft->add_option("--out", out, "output checkpoint")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  ev->add_option("--ckpt", ckpt, "checkpoint file")->required();
  ev->add_option("--data", data, "dataset file")->required();
  ev->add_option("--split", split, "train|val|test (default test)");

  auto* be = app.add_subcommand("bench", "Pretraining efficiency benchmark");
  be->add_option("--config", config, "run config JSON")->required();
  be->add_option("--data", data, "dataset file")->required();
  be->add_option("--csv", csv, "append a CSV row to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    std::string sub = app.get_subcommands().front()->get_name();
    if (env_flag("MAP_F64"))
      return dispatch<double>(sub, config, data, input, schema, min_count, spec, out, from, ckpt,
                              split, csv);
    return dispatch<float>(sub, config, data, input, schema, min_count, spec, out, from, ckpt,
                           split, csv);
  } catch (const Error& e) {
    std::cerr << "error: " << kind_name(e.kind()) << ": " << e.what() << "\n";
    return e.kind() == Error::Kind::usage || e.kind() == Error::Kind::config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << "\n";
    return 1;
  }
}
