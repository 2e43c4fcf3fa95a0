#pragma once

#include <functional>
#include <optional>

#include "mapctr/backbones.hpp"
#include "mapctr/corruption.hpp"
#include "mapctr/sampler.hpp"

namespace mapctr {

enum class PretextTask { mfp, mfp_full, rfd, joint };

inline PretextTask pretext_task_from_string(const std::string& s) {
  if (s == "mfp") return PretextTask::mfp;
  if (s == "mfp-full") return PretextTask::mfp_full;
  if (s == "rfd") return PretextTask::rfd;
  if (s == "joint") return PretextTask::joint;
  throw Error::config("unknown pretext task '" + s + "' (want mfp|mfp-full|rfd|joint)");
}

inline const char* pretext_task_to_string(PretextTask t) {
  switch (t) {
    case PretextTask::mfp: return "mfp";
    case PretextTask::mfp_full: return "mfp-full";
    case PretextTask::rfd: return "rfd";
    case PretextTask::joint: return "joint";
  }
  return "?";
}

struct PretextConfig {
  PretextTask task = PretextTask::rfd;
  double gamma = 0.3;
  ReplaceStrategy strategy = ReplaceStrategy::field_frequency;
  int k = 25;
  double alpha = 0.1;  // joint: alpha * MFP + (1 - alpha) * RFD
};

// Masked-feature-prediction head: one independent two-layer perceptron per
// field produces a hidden vector, scored against a shared M x h output
// table. Full mode evaluates all M logits; NCE mode only the positive plus
// K noise logits, so head cost is O(K m) per instance instead of O(M).
template <class S>
struct MfpHead {
  static constexpr Eigen::Index kHidden = 32;

  struct FieldNet {
    Linear<S> l1, l2;
  };
  std::vector<FieldNet> nets;
  Parameter<S> out_table;  // M x kHidden; mask row deliberately absent
  std::uint64_t M = 0;
  bool full = false;
  int K = 25;

  // Fills `out` with K noise indices for one positive target.
  using NoiseProvider = std::function<void(std::uint32_t target, std::vector<std::uint32_t>& out)>;

  void init(Eigen::Index num_fields, Eigen::Index q_dim, std::uint64_t global_size, bool full_mode,
            int noise_k, std::uint64_t seed) {
    M = global_size;
    full = full_mode;
    K = noise_k;
    if (full && M > 1000000) throw Error::config("full-softmax head refused for M > 1e6");
    if (!full && static_cast<std::uint64_t>(K) >= M)
      throw Error::config("nce: K=" + std::to_string(K) + " must be < M=" + std::to_string(M));
    if (!full && K < 1) throw Error::config("nce: K must be >= 1");
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::head_init), 1));
    for (Eigen::Index f = 0; f < num_fields; ++f) {
      FieldNet net;
      std::string base = "head.mfp.field" + std::to_string(f);
      net.l1.init(base + ".l1", q_dim, kHidden, rng, std::sqrt(2.0 / static_cast<double>(q_dim)), 0.01);
      net.l2.init(base + ".l2", kHidden, kHidden, rng, std::sqrt(2.0 / static_cast<double>(kHidden)), 0.01);
      nets.push_back(std::move(net));
    }
    out_table.name = "head.mfp.out_table";
    out_table.resize(static_cast<Eigen::Index>(M), kHidden);
    out_table.row_sparse = true;
    out_table.init_normal(rng, 0.05);
  }

  // Mean over instances of (1 / |masked|) * sum over masked fields of the
  // per-field recovery loss, grouped by field so each group runs its own
  // perceptron once.
  Var<S> loss(Tape<S>& t, Var<S> q_corrupt, const CorruptionPlan& plan,
              const NoiseProvider& noise) {
    if (plan.mode != CorruptMode::mask)
      throw Error::config("mfp loss requires a mask-mode corruption plan");
    const Eigen::Index n = plan.fields.rows();
    const S weight = S(1) / static_cast<S>(static_cast<double>(plan.m) * static_cast<double>(n));
    Var<S> total;
    std::vector<std::uint32_t> noise_buf;
    for (std::size_t f = 0; f < nets.size(); ++f) {
      std::vector<Eigen::Index> rows;
      std::vector<std::uint32_t> targets;
      for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < plan.m; ++j)
          if (plan.fields(i, j) == static_cast<Eigen::Index>(f)) {
            rows.push_back(i);
            std::uint32_t target = plan.originals(i, j);
            if (target >= M)
              throw Error::contract("mfp target " + std::to_string(target) + " is not a real feature");
            targets.push_back(target);
          }
      if (rows.empty()) continue;
      const Eigen::Index slots = static_cast<Eigen::Index>(rows.size());
      const FieldNet& net = nets[f];
      Var<S> h = net.l2.forward(t, relu(net.l1.forward(t, take_rows(q_corrupt, std::move(rows)))));
      Mat<S> w = Mat<S>::Constant(slots, 1, weight);
      Var<S> term;
      if (full) {
        term = softmax_xent_gathered(h, t.leaf(out_table), targets, w);
      } else {
        IdxMatrix idx(slots, K + 1);
        for (Eigen::Index s = 0; s < slots; ++s) {
          idx(s, 0) = targets[s];
          noise(targets[s], noise_buf);
          if (static_cast<int>(noise_buf.size()) != K)
            throw Error::contract("noise provider returned " + std::to_string(noise_buf.size()) +
                                  " indices, want " + std::to_string(K));
          for (int k = 0; k < K; ++k) idx(s, k + 1) = noise_buf[k];
        }
        term = nce_binary_loss(rows_dot(t.leaf(out_table), idx, h), w);
      }
      total = total ? total + term : term;
    }
    if (!total) throw Error::contract("mfp loss: plan contains no masked fields");
    return total;
  }

  void collect_params(std::vector<Parameter<S>*>& out) {
    for (auto& net : nets) {
      net.l1.collect(out);
      net.l2.collect(out);
    }
    out.push_back(&out_table);
  }

  std::uint64_t param_count() const {
    std::uint64_t c = 0;
    for (const auto& net : nets)
      c += net.l1.W.size() + net.l1.b.size() + net.l2.W.size() + net.l2.b.size();
    return c + out_table.size();
  }
};

// Replaced-feature-detection head: two-layer perceptron from q to F logits,
// elementwise sigmoid, binary cross-entropy against the replacement labels
// over all F fields.
template <class S>
struct RfdHead {
  static constexpr Eigen::Index kHidden = 32;

  Linear<S> l1, l2;
  Eigen::Index num_fields = 0;

  void init(Eigen::Index fields, Eigen::Index q_dim, std::uint64_t seed) {
    num_fields = fields;
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::head_init), 2));
    l1.init("head.rfd.l1", q_dim, kHidden, rng, std::sqrt(2.0 / static_cast<double>(q_dim)), 0.01);
    l2.init("head.rfd.l2", kHidden, fields, rng, std::sqrt(2.0 / static_cast<double>(kHidden)));
  }

  Var<S> probabilities(Tape<S>& t, Var<S> q_corrupt) const {
    return sigmoid(l2.forward(t, relu(l1.forward(t, q_corrupt))));
  }

  Var<S> loss(Tape<S>& t, Var<S> q_corrupt, const CorruptionPlan& plan) {
    if (plan.mode != CorruptMode::replace)
      throw Error::config("rfd loss requires a replace-mode corruption plan");
    Mat<S> labels = plan.rfd_labels.template cast<S>();
    return bce_loss(probabilities(t, q_corrupt), labels);
  }

  void collect_params(std::vector<Parameter<S>*>& out) {
    l1.collect(out);
    l2.collect(out);
  }

  std::uint64_t param_count() const {
    return static_cast<std::uint64_t>(l1.W.size() + l1.b.size() + l2.W.size() + l2.b.size());
  }
};

// Backbone plus the heads a pretext task needs, with per-batch stream
// derivation. Skipped paths never consume randomness, so the joint loss at
// its alpha boundaries coincides bitwise with the single-task runs.
template <class S>
struct PretextModel {
  CtrModel<S>* base = nullptr;
  PretextConfig cfg;
  std::optional<MfpHead<S>> mfp;
  std::optional<RfdHead<S>> rfd;
  std::optional<ReplacementSamplers> replace_samplers;
  std::optional<FrequencySampler> noise_sampler;
  std::uint64_t seed = 0;

  bool uses_mfp() const {
    return cfg.task == PretextTask::mfp || cfg.task == PretextTask::mfp_full ||
           (cfg.task == PretextTask::joint && cfg.alpha > 0.0);
  }
  bool uses_rfd() const {
    return cfg.task == PretextTask::rfd || (cfg.task == PretextTask::joint && cfg.alpha < 1.0);
  }

  void init(CtrModel<S>& model, const FeatureMap& fm, const PretextConfig& config,
            std::uint64_t seed_in) {
    base = &model;
    cfg = config;
    seed = seed_in;
    if (cfg.task == PretextTask::joint && (cfg.alpha < 0.0 || cfg.alpha > 1.0))
      throw Error::config("joint alpha must lie in [0,1]");
    const Eigen::Index q = model.cfg.q_dim(model.num_fields);
    if (uses_mfp()) {
      mfp.emplace();
      mfp->init(model.num_fields, q, model.M, cfg.task == PretextTask::mfp_full, cfg.k, seed);
      if (!mfp->full) noise_sampler.emplace(FrequencySampler::global_frequency(fm));
    }
    if (uses_rfd()) {
      rfd.emplace();
      rfd->init(model.num_fields, q, seed);
      replace_samplers.emplace(ReplacementSamplers::build(fm, cfg.strategy));
    }
  }

  // One pretraining loss evaluation for a clean batch. Streams are derived
  // from (seed, epoch, batch index, purpose).
  Var<S> batch_loss(Tape<S>& t, const IdxMatrix& batch, const FeatureMap& fm, std::uint64_t epoch,
                    std::uint64_t batch_index) {
    Var<S> mfp_term, rfd_term;
    if (uses_mfp()) {
      Rng corrupt_rng(stream(StreamTag::mask_corrupt, epoch, batch_index));
      Rng drop_rng(stream(StreamTag::dropout_mask_path, epoch, batch_index));
      Rng noise_rng(stream(StreamTag::nce_noise, epoch, batch_index));
      CorruptionPlan plan = corrupt_mask(batch, fm, cfg.gamma, corrupt_rng);
      Var<S> q = base->representation(t, plan.corrupted, true, drop_rng);
      typename MfpHead<S>::NoiseProvider provider = [&](std::uint32_t target,
                                                        std::vector<std::uint32_t>& out) {
        out.resize(static_cast<std::size_t>(mfp->K));
        for (auto& v : out)
          v = static_cast<std::uint32_t>(noise_sampler->draw_excluding_fast(noise_rng, target));
      };
      mfp_term = mfp->loss(t, q, plan, provider);
    }
    if (uses_rfd()) {
      Rng corrupt_rng(stream(StreamTag::replace_corrupt, epoch, batch_index));
      Rng drop_rng(stream(StreamTag::dropout_replace_path, epoch, batch_index));
      CorruptionPlan plan = corrupt_replace(batch, fm, cfg.gamma, *replace_samplers, corrupt_rng);
      Var<S> q = base->representation(t, plan.corrupted, true, drop_rng);
      rfd_term = rfd->loss(t, q, plan);
    }
    switch (cfg.task) {
      case PretextTask::mfp:
      case PretextTask::mfp_full: return mfp_term;
      case PretextTask::rfd: return rfd_term;
      case PretextTask::joint:
        if (!mfp_term) return rfd_term;  // alpha == 0
        if (!rfd_term) return mfp_term;  // alpha == 1
        return scale(mfp_term, static_cast<S>(cfg.alpha)) +
               scale(rfd_term, static_cast<S>(1.0 - cfg.alpha));
    }
    throw Error::contract("unreachable pretext task");
  }

  std::vector<Parameter<S>*> head_params() {
    std::vector<Parameter<S>*> out;
    if (mfp) mfp->collect_params(out);
    if (rfd) rfd->collect_params(out);
    return out;
  }

  std::uint64_t head_param_count() const {
    std::uint64_t c = 0;
    if (mfp) c += mfp->param_count();
    if (rfd) c += rfd->param_count();
    return c;
  }

 private:
  std::uint64_t stream(StreamTag tag, std::uint64_t epoch, std::uint64_t batch_index) const {
    return derive_stream(seed ^ (static_cast<std::uint64_t>(tag) << 56), epoch, batch_index,
                         static_cast<std::uint64_t>(tag));
  }
};

}  // namespace mapctr
