#pragma once

#include <string>
#include <variant>
#include <vector>

#include "mapctr/featuremap.hpp"
#include "mapctr/ops.hpp"

namespace mapctr {

// Three-layer CTR model: embedding layer, feature interaction layer
// (pluggable operators, possibly assembled), linear prediction head.

struct BackboneConfig {
  enum class Op { mlp, crossnet, fm };

  std::vector<Op> members = {Op::mlp};
  Eigen::Index embedding_dim = 16;
  Eigen::Index mlp_width = 256;
  int mlp_depth = 3;
  int cross_depth = 3;  // forced equal to mlp_depth when assembled with an mlp
  double dropout = 0.0;

  static Op op_from_string(const std::string& s) {
    if (s == "mlp") return Op::mlp;
    if (s == "crossnet") return Op::crossnet;
    if (s == "fm") return Op::fm;
    throw Error::config("unknown interaction operator '" + s + "'");
  }

  static const char* op_to_string(Op op) {
    switch (op) {
      case Op::mlp: return "mlp";
      case Op::crossnet: return "crossnet";
      case Op::fm: return "fm";
    }
    return "?";
  }

  // "mlp", "fm", "mlp+crossnet", "mlp+fm", ... in member order.
  static std::vector<Op> parse_operator(const std::string& spec) {
    std::vector<Op> ops;
    std::size_t start = 0;
    for (;;) {
      std::size_t pos = spec.find('+', start);
      std::string tok = pos == std::string::npos ? spec.substr(start) : spec.substr(start, pos - start);
      ops.push_back(op_from_string(tok));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return ops;
  }

  std::string operator_string() const {
    std::string s;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i) s += '+';
      s += op_to_string(members[i]);
    }
    return s;
  }

  void validate() const {
    if (members.empty()) throw Error::config("backbone: no interaction members");
    if (embedding_dim <= 0 || mlp_width <= 0 || mlp_depth <= 0 || cross_depth <= 0)
      throw Error::config("backbone: sizes must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw Error::config("backbone: dropout must lie in [0,1)");
  }

  Eigen::Index member_q_dim(Op op, Eigen::Index num_fields) const {
    switch (op) {
      case Op::mlp: return mlp_width;
      case Op::crossnet: return num_fields * embedding_dim;
      case Op::fm: return 2;  // second-order scalar + first-order scalar
    }
    return 0;
  }

  Eigen::Index q_dim(Eigen::Index num_fields) const {
    Eigen::Index q = 0;
    for (Op op : members) q += member_q_dim(op, num_fields);
    return q;
  }
};

template <class S>
struct Linear {
  Parameter<S> W;  // out x in
  Parameter<S> b;  // 1 x out

  // Hidden relu layers take a small positive bias so units never start dead
  // on the kink; logit layers keep zero bias.
  void init(const std::string& name, Eigen::Index in, Eigen::Index out, Rng& rng, double stddev,
            double bias_init = 0.0) {
    W.name = name + ".W";
    b.name = name + ".b";
    W.resize(out, in);
    b.resize(1, out);
    W.init_normal(rng, stddev);
    if (bias_init != 0.0) b.value.setConstant(static_cast<S>(bias_init));
  }

  Var<S> forward(Tape<S>& t, Var<S> x) const {
    return add_rowvec(matmul_nt(x, t.leaf(const_cast<Parameter<S>&>(W))),
                      t.leaf(const_cast<Parameter<S>&>(b)));
  }

  void collect(std::vector<Parameter<S>*>& out) {
    out.push_back(&W);
    out.push_back(&b);
  }
};

template <class S>
struct MlpBlock {
  std::vector<Linear<S>> layers;
  double dropout = 0.0;

  void init(const std::string& name, Eigen::Index in, Eigen::Index width, int depth, double drop,
            Rng& rng) {
    dropout = drop;
    Eigen::Index d = in;
    for (int l = 0; l < depth; ++l) {
      Linear<S> lin;
      lin.init(name + "." + std::to_string(l), d, width, rng, std::sqrt(2.0 / static_cast<double>(d)),
               0.01);
      layers.push_back(std::move(lin));
      d = width;
    }
  }

  Var<S> forward(Tape<S>& t, Var<S> x, bool train, Rng& drop_rng) const {
    Var<S> h = x;
    for (const auto& lin : layers) h = mapctr::dropout(relu(lin.forward(t, h)), dropout, drop_rng, train);
    return h;
  }

  void collect(std::vector<Parameter<S>*>& out) {
    for (auto& l : layers) l.collect(out);
  }
};

// DCNv2-style cross layers: x_{l+1} = x0 .* (W_l x_l + b_l) + x_l.
template <class S>
struct CrossBlock {
  std::vector<Linear<S>> layers;

  void init(const std::string& name, Eigen::Index dim, int depth, Rng& rng) {
    for (int l = 0; l < depth; ++l) {
      Linear<S> lin;
      lin.init(name + "." + std::to_string(l), dim, dim, rng, std::sqrt(1.0 / static_cast<double>(dim)));
      layers.push_back(std::move(lin));
    }
  }

  Var<S> forward(Tape<S>& t, Var<S> x0) const {
    Var<S> x = x0;
    for (const auto& lin : layers) x = x0 * lin.forward(t, x) + x;
    return x;
  }

  void collect(std::vector<Parameter<S>*>& out) {
    for (auto& l : layers) l.collect(out);
  }
};

// FM member: [second-order interaction scalar, first-order scalar], each a
// one-dimensional block so assembled concatenation treats them uniformly.
template <class S>
struct FmBlock {
  Parameter<S> first_order;  // (M+1) x 1
  Eigen::Index fields = 0, dim = 0;

  void init(const std::string& name, std::uint64_t M, Eigen::Index F, Eigen::Index d, Rng& rng) {
    fields = F;
    dim = d;
    first_order.name = name + ".first_order";
    first_order.resize(static_cast<Eigen::Index>(M) + 1, 1);
    first_order.row_sparse = true;
    first_order.init_normal(rng, 0.01);
  }

  Var<S> forward(Tape<S>& t, Var<S> emb, const IdxMatrix& batch) const {
    Var<S> so = fm_second_order(emb, fields, dim);
    Var<S> fo = rowsum(embedding_rows(t.leaf(const_cast<Parameter<S>&>(first_order)), batch));
    return concat_cols<S>({so, fo});
  }

  void collect(std::vector<Parameter<S>*>& out) { out.push_back(&first_order); }
};

// Parameter groups, for finetune freezing.
enum class ParamGroup { embedding, interaction, head };

template <class S>
struct CtrModel {
  BackboneConfig cfg;
  Eigen::Index num_fields = 0;
  std::uint64_t M = 0;

  Parameter<S> embedding;  // (M+1) x d, row mask_index trainable like any other
  std::vector<std::variant<MlpBlock<S>, CrossBlock<S>, FmBlock<S>>> members;
  Linear<S> head;  // 1 x q_dim

  void init(const BackboneConfig& config, Eigen::Index F, std::uint64_t global_size,
            std::uint64_t seed) {
    config.validate();
    cfg = config;
    num_fields = F;
    M = global_size;
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::init)));
    embedding.name = "embedding.table";
    embedding.resize(static_cast<Eigen::Index>(M) + 1, cfg.embedding_dim);
    embedding.row_sparse = true;
    embedding.init_normal(rng, 0.05);
    const Eigen::Index flat = F * cfg.embedding_dim;
    for (std::size_t i = 0; i < cfg.members.size(); ++i) {
      std::string name = "fi." + std::to_string(i);
      switch (cfg.members[i]) {
        case BackboneConfig::Op::mlp: {
          MlpBlock<S> b;
          b.init(name + ".mlp", flat, cfg.mlp_width, cfg.mlp_depth, cfg.dropout, rng);
          members.emplace_back(std::move(b));
          break;
        }
        case BackboneConfig::Op::crossnet: {
          CrossBlock<S> b;
          b.init(name + ".cross", flat, cfg.cross_depth, rng);
          members.emplace_back(std::move(b));
          break;
        }
        case BackboneConfig::Op::fm: {
          FmBlock<S> b;
          b.init(name + ".fm", M, F, cfg.embedding_dim, rng);
          members.emplace_back(std::move(b));
          break;
        }
      }
    }
    init_head(seed);
  }

  // The CTR head is initialized from its own stream so finetuning can draw a
  // fresh head without disturbing anything else.
  void init_head(std::uint64_t seed) {
    Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::head_init)));
    Eigen::Index q = cfg.q_dim(num_fields);
    head = Linear<S>();
    head.init("head.ctr", q, 1, rng, std::sqrt(1.0 / static_cast<double>(q)));
  }

  Var<S> embed(Tape<S>& t, const IdxMatrix& batch) {
    if (batch.cols() != num_fields)
      throw Error::contract("embed: batch has " + std::to_string(batch.cols()) + " fields, model wants " +
                            std::to_string(num_fields));
    return embedding_rows(t.leaf(embedding), batch);
  }

  // Compact representation q; assembled members concatenate in config order.
  Var<S> representation(Tape<S>& t, const IdxMatrix& batch, bool train, Rng& drop_rng) {
    Var<S> emb = embed(t, batch);
    std::vector<Var<S>> outs;
    for (auto& m : members) {
      if (auto* mlp = std::get_if<MlpBlock<S>>(&m))
        outs.push_back(mlp->forward(t, emb, train, drop_rng));
      else if (auto* cross = std::get_if<CrossBlock<S>>(&m))
        outs.push_back(cross->forward(t, emb));
      else
        outs.push_back(std::get<FmBlock<S>>(m).forward(t, emb, batch));
    }
    return outs.size() == 1 ? outs[0] : concat_cols(outs);
  }

  Var<S> predict(Tape<S>& t, const IdxMatrix& batch, bool train, Rng& drop_rng) {
    return sigmoid(head.forward(t, representation(t, batch, train, drop_rng)));
  }

  void collect_params(std::vector<Parameter<S>*>& out, bool with_embedding, bool with_interaction,
                      bool with_head) {
    if (with_embedding) out.push_back(&embedding);
    if (with_interaction)
      for (auto& m : members)
        std::visit([&](auto& block) { block.collect(out); }, m);
    if (with_head) head.collect(out);
  }

  std::vector<Parameter<S>*> all_params() {
    std::vector<Parameter<S>*> out;
    collect_params(out, true, true, true);
    return out;
  }
};

}  // namespace mapctr
