#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "mapctr/adam.hpp"
#include "mapctr/gradcheck.hpp"
#include "mapctr/pretext.hpp"
#include "oracles.hpp"

using namespace mapctr;

namespace {

FeatureMap small_fmap(const std::vector<std::uint64_t>& cards) {
  FeatureMap fm;
  std::uint64_t at = 0;
  for (auto c : cards) {
    fm.field_offsets.push_back(at);
    fm.field_cardinalities.push_back(c);
    at += c;
  }
  fm.global_size = at;
  fm.frequencies.assign(at, 1);
  return fm;
}

BackboneConfig mini_backbone(Eigen::Index d = 2, Eigen::Index width = 6, int depth = 1) {
  BackboneConfig cfg;
  cfg.members = {BackboneConfig::Op::mlp};
  cfg.embedding_dim = d;
  cfg.mlp_width = width;
  cfg.mlp_depth = depth;
  return cfg;
}

// A mask plan naming specific fields, as the corruption layer would emit.
CorruptionPlan manual_mask_plan(const IdxMatrix& batch, const FeatureMap& fm,
                                const std::vector<std::vector<Eigen::Index>>& fields) {
  CorruptionPlan plan;
  plan.mode = CorruptMode::mask;
  plan.m = static_cast<int>(fields[0].size());
  plan.corrupted = batch;
  plan.fields.resize(batch.rows(), plan.m);
  plan.originals.resize(batch.rows(), plan.m);
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < plan.m; ++j) {
      Eigen::Index f = fields[i][j];
      plan.fields(i, j) = f;
      plan.originals(i, j) = batch(i, f);
      plan.corrupted(i, f) = static_cast<std::uint32_t>(fm.mask_index());
    }
  return plan;
}

// Forces the field nets to emit a constant hidden vector (relu-safe).
template <class S>
void pin_hidden(MfpHead<S>& head, const Mat<S>& hidden_row) {
  for (auto& net : head.nets) {
    net.l1.W.value.setZero();
    net.l1.b.value.setOnes();
    net.l2.W.value.setZero();
    net.l2.b.value = hidden_row;
  }
}

}  // namespace

TEST_CASE("mfp full-softmax: uniform logits give ln M") {
  FeatureMap fm = small_fmap({2, 2});  // M = 4
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 1);
  MfpHead<double> head;
  head.init(2, model.cfg.q_dim(2), fm.global_size, true, 1, 1);
  head.out_table.value.setZero();
  IdxMatrix batch(1, 2);
  batch << 1, 3;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{0}});
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  double loss = head.loss(t, q, plan, {}).scalar();
  CHECK(loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("mfp full-softmax: dominant target logit saturates to zero loss") {
  FeatureMap fm = small_fmap({2, 2});
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 2);
  MfpHead<double> head;
  head.init(2, model.cfg.q_dim(2), fm.global_size, true, 1, 2);
  Mat<double> hidden = Mat<double>::Zero(1, MfpHead<double>::kHidden);
  hidden(0, 0) = 1.0;
  pin_hidden(head, hidden);
  head.out_table.value.setZero();
  IdxMatrix batch(1, 2);
  batch << 1, 2;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{0}});
  head.out_table.value(1, 0) = 30.0;  // target logit 30, rest 0
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  double loss = head.loss(t, q, plan, {}).scalar();
  CHECK(loss < 1e-9);
}

TEST_CASE("mfp full-softmax matches an independent scalar-loop oracle") {
  FeatureMap fm = small_fmap({3, 3});  // M = 6
  const Eigen::Index F = 2, N = 3;
  CtrModel<double> model;
  model.init(mini_backbone(2, 5, 1), F, fm.global_size, 3);
  MfpHead<double> head;
  head.init(F, model.cfg.q_dim(F), fm.global_size, true, 1, 3);
  IdxMatrix batch(N, F);
  batch << 0, 4, 1, 5, 2, 3;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{0, 1}, {0, 1}, {1, 0}});
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  double got = head.loss(t, q, plan, {}).scalar();

  // Oracle: scalar loops straight off the parameter arrays.
  auto hidden_of = [&](Eigen::Index f, const std::vector<double>& qrow) {
    const auto& net = head.nets[f];
    std::vector<double> h1(MfpHead<double>::kHidden), h2(MfpHead<double>::kHidden);
    for (Eigen::Index o = 0; o < MfpHead<double>::kHidden; ++o) {
      double acc = net.l1.b.value(0, o);
      for (std::size_t i = 0; i < qrow.size(); ++i) acc += net.l1.W.value(o, i) * qrow[i];
      h1[o] = std::max(acc, 0.0);
    }
    for (Eigen::Index o = 0; o < MfpHead<double>::kHidden; ++o) {
      double acc = net.l2.b.value(0, o);
      for (Eigen::Index i = 0; i < MfpHead<double>::kHidden; ++i) acc += net.l2.W.value(o, i) * h1[i];
      h2[o] = acc;
    }
    return h2;
  };
  double expect = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    std::vector<double> qrow(q.value().cols());
    for (Eigen::Index c = 0; c < q.value().cols(); ++c) qrow[c] = q.value()(i, c);
    double per_instance = 0.0;
    for (int j = 0; j < plan.m; ++j) {
      Eigen::Index f = plan.fields(i, j);
      auto h = hidden_of(f, qrow);
      std::vector<double> logits(fm.global_size);
      for (std::uint64_t c = 0; c < fm.global_size; ++c) {
        double acc = 0.0;
        for (Eigen::Index k = 0; k < MfpHead<double>::kHidden; ++k)
          acc += head.out_table.value(static_cast<Eigen::Index>(c), k) * h[k];
        logits[c] = acc;
      }
      per_instance += oracle::softmax_xent_row(logits, plan.originals(i, j));
    }
    expect += per_instance / plan.m;
  }
  expect /= static_cast<double>(N);
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("mfp nce: all-zero logits with K=2 give 3 ln 2") {
  FeatureMap fm = small_fmap({2, 2});
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 4);
  MfpHead<double> head;
  head.init(2, model.cfg.q_dim(2), fm.global_size, false, 2, 4);
  head.out_table.value.setZero();
  IdxMatrix batch(1, 2);
  batch << 0, 2;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{1}});
  auto provider = [](std::uint32_t target, std::vector<std::uint32_t>& out) {
    out = {0, 1};
    (void)target;
  };
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  double loss = head.loss(t, q, plan, provider).scalar();
  CHECK(loss == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("mfp nce: saturated logits give near-zero loss; noise order is irrelevant") {
  FeatureMap fm = small_fmap({4, 4});  // M = 8
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 5);
  MfpHead<double> head;
  head.init(2, model.cfg.q_dim(2), fm.global_size, false, 5, 5);
  Mat<double> hidden = Mat<double>::Zero(1, MfpHead<double>::kHidden);
  hidden(0, 0) = 1.0;
  pin_hidden(head, hidden);
  head.out_table.value.setZero();
  IdxMatrix batch(1, 2);
  batch << 2, 6;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{0}});
  head.out_table.value.col(0).setConstant(-30.0);
  head.out_table.value(2, 0) = 30.0;  // target saturated up, noise down

  auto run = [&](std::vector<std::uint32_t> noise) {
    auto provider = [&](std::uint32_t, std::vector<std::uint32_t>& out) { out = noise; };
    Rng rng(0);
    Tape<double> t;
    Var<double> q = model.representation(t, plan.corrupted, false, rng);
    return head.loss(t, q, plan, provider).scalar();
  };
  CHECK(run({0, 1, 3, 4, 5}) < 1e-9);
  CHECK(run({0, 1, 3, 4, 5}) == doctest::Approx(run({5, 4, 3, 1, 0})).epsilon(1e-15));
}

TEST_CASE("mfp nce loss is decreasing in the target logit and increasing in noise logits") {
  FeatureMap fm = small_fmap({3, 3});
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 6);
  MfpHead<double> head;
  head.init(2, model.cfg.q_dim(2), fm.global_size, false, 2, 6);
  Mat<double> hidden = Mat<double>::Zero(1, MfpHead<double>::kHidden);
  hidden(0, 0) = 1.0;
  pin_hidden(head, hidden);
  IdxMatrix batch(1, 2);
  batch << 1, 4;
  CorruptionPlan plan = manual_mask_plan(batch, fm, {{0}});
  auto provider = [](std::uint32_t, std::vector<std::uint32_t>& out) { out = {0, 2}; };
  auto loss_with = [&](double target_logit, double noise_logit) {
    head.out_table.value.setZero();
    head.out_table.value(1, 0) = target_logit;
    head.out_table.value(0, 0) = noise_logit;
    head.out_table.value(2, 0) = noise_logit;
    Rng rng(0);
    Tape<double> t;
    Var<double> q = model.representation(t, plan.corrupted, false, rng);
    return head.loss(t, q, plan, provider).scalar();
  };
  CHECK(loss_with(1.0, 0.0) < loss_with(0.5, 0.0));
  CHECK(loss_with(0.5, 0.5) > loss_with(0.5, 0.0));
}

TEST_CASE("rfd: half probabilities give ln 2; saturation gives near zero") {
  FeatureMap fm = small_fmap({2, 2});
  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 7);
  RfdHead<double> head;
  head.init(2, model.cfg.q_dim(2), 7);
  head.l2.W.value.setZero();
  head.l2.b.value.setZero();  // logits 0 -> p = 0.5 everywhere
  IdxMatrix batch(1, 2);
  batch << 1, 3;
  IdxMatrix corrupted = batch;
  corrupted(0, 0) = 0;
  CorruptionPlan plan;
  plan.mode = CorruptMode::replace;
  plan.m = 1;
  plan.corrupted = corrupted;
  plan.fields.resize(1, 1);
  plan.fields(0, 0) = 0;
  plan.originals.resize(1, 1);
  plan.originals(0, 0) = 1;
  plan.rfd_labels.setZero(1, 2);
  plan.rfd_labels(0, 0) = 1;

  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  CHECK(head.loss(t, q, plan).scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Saturated logits matching the labels.
  head.l2.b.value(0, 0) = 30.0;
  head.l2.b.value(0, 1) = -30.0;
  // Hidden layer forced to zero so the bias rules the logits.
  head.l1.W.value.setZero();
  head.l1.b.value.setConstant(-1.0);
  Tape<double> t2;
  Var<double> q2 = model.representation(t2, plan.corrupted, false, rng);
  // The prediction clamp floors bce at -ln(1 - 1e-7) per element.
  CHECK(head.loss(t2, q2, plan).scalar() < 1e-6);
}

TEST_CASE("rfd loss equals a scalar-loop bce oracle on its own probabilities") {
  FeatureMap fm = small_fmap(std::vector<std::uint64_t>(10, 4));
  const Eigen::Index F = 10, N = 16;
  CtrModel<double> model;
  model.init(mini_backbone(3, 12, 2), F, fm.global_size, 8);
  RfdHead<double> head;
  head.init(F, model.cfg.q_dim(F), 8);
  Rng data_rng(17);
  IdxMatrix batch(N, F);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index f = 0; f < F; ++f)
      batch(i, f) = static_cast<std::uint32_t>(fm.field_offsets[f] + data_rng.uniform_int(4));
  Rng corrupt_rng(18);
  CorruptionPlan plan = corrupt_replace(batch, fm, 0.3, ReplaceStrategy::field_uniform, corrupt_rng);
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  Var<double> probs = head.probabilities(t, q);
  double got = head.loss(t, q, plan).scalar();
  std::vector<double> p, r;
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index f = 0; f < F; ++f) {
      p.push_back(probs.value()(i, f));
      r.push_back(plan.rfd_labels(i, f));
    }
  CHECK(got == doctest::Approx(oracle::bce(p, r)).epsilon(1e-12));
}

TEST_CASE("rfd loss is equivariant to field permutation with matching head wiring") {
  FeatureMap fm = small_fmap({3, 3, 3, 3});
  const Eigen::Index F = 4;
  CtrModel<double> model;
  model.init(mini_backbone(), F, fm.global_size, 9);
  RfdHead<double> head;
  head.init(F, model.cfg.q_dim(F), 9);
  Rng data_rng(3);
  IdxMatrix batch(8, F);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index f = 0; f < F; ++f)
      batch(i, f) = static_cast<std::uint32_t>(fm.field_offsets[f] + data_rng.uniform_int(3));
  Rng corrupt_rng(4);
  CorruptionPlan plan = corrupt_replace(batch, fm, 0.4, ReplaceStrategy::field_uniform, corrupt_rng);
  Rng rng(0);
  Tape<double> t;
  Var<double> q = model.representation(t, plan.corrupted, false, rng);
  double base = head.loss(t, q, plan).scalar();

  // Permute the label columns and the head's output wiring together.
  std::vector<Eigen::Index> perm = {2, 0, 3, 1};
  RfdHead<double> permuted = head;
  CorruptionPlan pplan = plan;
  for (Eigen::Index f = 0; f < F; ++f) {
    permuted.l2.W.value.row(f) = head.l2.W.value.row(perm[f]);
    permuted.l2.b.value(0, f) = head.l2.b.value(0, perm[f]);
    for (Eigen::Index i = 0; i < 8; ++i) pplan.rfd_labels(i, f) = plan.rfd_labels(i, perm[f]);
  }
  Tape<double> t2;
  Var<double> q2 = model.representation(t2, plan.corrupted, false, rng);
  CHECK(permuted.loss(t2, q2, pplan).scalar() == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("joint loss: boundary alphas reproduce the single tasks bitwise") {
  FeatureMap fm = small_fmap({4, 4, 4});
  const Eigen::Index F = 3;
  Rng data_rng(10);
  IdxMatrix batch(16, F);
  for (Eigen::Index i = 0; i < 16; ++i)
    for (Eigen::Index f = 0; f < F; ++f)
      batch(i, f) = static_cast<std::uint32_t>(fm.field_offsets[f] + data_rng.uniform_int(4));

  auto loss_for = [&](PretextTask task, double alpha) {
    CtrModel<double> model;
    model.init(mini_backbone(), F, fm.global_size, 11);
    PretextConfig pc;
    pc.task = task;
    pc.alpha = alpha;
    pc.gamma = 0.34;
    pc.k = 3;
    PretextModel<double> pm;
    pm.init(model, fm, pc, 11);
    Tape<double> t;
    return pm.batch_loss(t, batch, fm, 0, 0).scalar();
  };
  CHECK(loss_for(PretextTask::joint, 0.0) == loss_for(PretextTask::rfd, 0.1));
  CHECK(loss_for(PretextTask::joint, 1.0) == loss_for(PretextTask::mfp, 0.5));

  // Interior alpha is the stated convex combination.
  double l_mfp = loss_for(PretextTask::mfp, 0.5);
  double l_rfd = loss_for(PretextTask::rfd, 0.5);
  double l_joint = loss_for(PretextTask::joint, 0.1);
  CHECK(l_joint == doctest::Approx(0.1 * l_mfp + 0.9 * l_rfd).epsilon(1e-12));
}

TEST_CASE("joint alpha arithmetic at op level") {
  Tape<double> t;
  Mat<double> a(1, 1), b(1, 1);
  a << 2.0;
  b << 0.5;
  auto combo = scale(t.constant(a), 0.1) + scale(t.constant(b), 0.9);
  CHECK(combo.scalar() == doctest::Approx(0.65).epsilon(1e-15));
}

TEST_CASE("gradcheck through backbone plus each head") {
  FeatureMap fm = small_fmap({3, 4});
  const Eigen::Index F = 2;
  Rng data_rng(12);
  IdxMatrix batch(5, F);
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index f = 0; f < F; ++f)
      batch(i, f) = static_cast<std::uint32_t>(fm.field_offsets[f] +
                                               data_rng.uniform_int(fm.field_cardinalities[f]));

  for (PretextTask task : {PretextTask::mfp, PretextTask::mfp_full, PretextTask::rfd,
                           PretextTask::joint}) {
    CtrModel<double> model;
    model.init(mini_backbone(2, 4, 1), F, fm.global_size, 13);
    Rng scale_rng(99);
    model.embedding.init_normal(scale_rng, 0.5);
    PretextConfig pc;
    pc.task = task;
    pc.k = 2;
    pc.alpha = 0.3;
    pc.gamma = 0.4;
    PretextModel<double> pm;
    pm.init(model, fm, pc, 13);
    std::vector<Parameter<double>*> params = model.all_params();
    auto heads = pm.head_params();
    params.insert(params.end(), heads.begin(), heads.end());
    auto loss = [&](bool wg) {
      Tape<double> t;
      t.set_grad_enabled(wg);
      Var<double> l = pm.batch_loss(t, batch, fm, 0, 0);
      if (wg) t.backward(l);
      return static_cast<double>(l.scalar());
    };
    CHECK(gradcheck<double>(loss, params) < 1e-4);
  }
}

TEST_CASE("nce touches only K+1 output rows per slot; full softmax touches all") {
  FeatureMap fm = small_fmap({50, 50});  // M = 100
  const Eigen::Index F = 2;
  CtrModel<float> model;
  model.init(mini_backbone(2, 4, 1), F, fm.global_size, 14);
  Rng data_rng(15);
  IdxMatrix batch(8, F);
  for (Eigen::Index i = 0; i < 8; ++i)
    for (Eigen::Index f = 0; f < F; ++f)
      batch(i, f) = static_cast<std::uint32_t>(fm.field_offsets[f] + data_rng.uniform_int(50));

  for (bool full : {false, true}) {
    PretextConfig pc;
    pc.task = full ? PretextTask::mfp_full : PretextTask::mfp;
    pc.k = 3;
    pc.gamma = 0.5;
    PretextModel<float> pm;
    pm.init(model, fm, pc, 14);
    pm.mfp->out_table.zero_grad();
    Tape<float> t;
    Var<float> l = pm.batch_loss(t, batch, fm, 0, 0);
    t.backward(l);
    if (full) {
      CHECK(pm.mfp->out_table.dense_touched);
    } else {
      auto touched = pm.mfp->out_table.touched;
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      CHECK(touched.size() <= 8u * 1u * 4u);  // slots * (K+1)
      CHECK(touched.size() < 100u);
      CHECK(!pm.mfp->out_table.dense_touched);
    }
  }
}

TEST_CASE("configuration errors: K vs M, full-softmax cap, task/mode mismatches") {
  FeatureMap fm = small_fmap({2, 2});
  MfpHead<double> head;
  CHECK_THROWS_AS(head.init(2, 4, fm.global_size, false, 4, 0), Error);  // K >= M

  MfpHead<double> big;
  CHECK_THROWS_AS(big.init(2, 4, 2'000'000, true, 1, 0), Error);  // M cap

  CtrModel<double> model;
  model.init(mini_backbone(), 2, fm.global_size, 15);
  MfpHead<double> ok;
  ok.init(2, model.cfg.q_dim(2), fm.global_size, false, 2, 15);
  RfdHead<double> rfd;
  rfd.init(2, model.cfg.q_dim(2), 15);
  IdxMatrix batch(1, 2);
  batch << 0, 2;
  Rng rng(0);
  CorruptionPlan replace_plan = corrupt_replace(batch, fm, 0.5, ReplaceStrategy::field_uniform, rng);
  CorruptionPlan mask_plan = corrupt_mask(batch, fm, 0.5, rng);
  Tape<double> t;
  Var<double> q = model.representation(t, batch, false, rng);
  CHECK_THROWS_AS((void)ok.loss(t, q, replace_plan, {}), Error);
  CHECK_THROWS_AS((void)rfd.loss(t, q, mask_plan), Error);
}

TEST_CASE("with K=M-1 and exhaustive noise, training ranks the target first") {
  // Field 1 determines field 0; masking either field leaves the answer
  // recoverable from the other.
  FeatureMap fm = small_fmap({3, 3});  // M = 6
  const Eigen::Index F = 2;
  CtrModel<double> model;
  model.init(mini_backbone(4, 16, 2), F, fm.global_size, 16);
  MfpHead<double> head;
  head.init(F, model.cfg.q_dim(F), fm.global_size, false, 5, 16);
  auto exhaustive = [&](std::uint32_t target, std::vector<std::uint32_t>& out) {
    out.clear();
    for (std::uint32_t j = 0; j < fm.global_size; ++j)
      if (j != target) out.push_back(j);
  };

  std::vector<Parameter<double>*> params = model.all_params();
  head.collect_params(params);
  AdamConfig acfg;
  acfg.base_lr = 5e-3;
  Adam<double> opt(params, acfg);
  Rng loop_rng(77);
  IdxMatrix batch(32, F);
  double first_loss = -1, last_loss = -1;
  for (int step = 0; step < 400; ++step) {
    for (Eigen::Index i = 0; i < 32; ++i) {
      std::uint32_t v = static_cast<std::uint32_t>(loop_rng.uniform_int(3));
      batch(i, 0) = v;
      batch(i, 1) = 3 + v;
    }
    Rng corrupt_rng(derive_stream(1000, step));
    CorruptionPlan plan = corrupt_mask(batch, fm, 0.5, corrupt_rng);
    Tape<double> t;
    opt.zero_grads();
    Rng drop(0);
    Var<double> q = model.representation(t, plan.corrupted, true, drop);
    Var<double> l = head.loss(t, q, plan, exhaustive);
    if (first_loss < 0) first_loss = l.scalar();
    last_loss = l.scalar();
    t.backward(l);
    opt.step();
  }
  CHECK(last_loss < first_loss);

  // At the optimum the target must outrank all other features.
  int correct = 0, total = 0;
  for (std::uint32_t v = 0; v < 3; ++v) {
    for (Eigen::Index masked_field = 0; masked_field < 2; ++masked_field) {
      IdxMatrix one(1, F);
      one << v, 3 + v;
      CorruptionPlan plan = manual_mask_plan(one, fm, {{masked_field}});
      Tape<double> t;
      Rng drop(0);
      Var<double> q = model.representation(t, plan.corrupted, false, drop);
      const auto& net = head.nets[masked_field];
      Var<double> h = net.l2.forward(t, relu(net.l1.forward(t, q)));
      Eigen::Index best = -1;
      double best_score = -1e30;
      for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(fm.global_size); ++j) {
        double score = head.out_table.value.row(j).dot(h.value().row(0));
        if (score > best_score) {
          best_score = score;
          best = j;
        }
      }
      total += 1;
      correct += best == static_cast<Eigen::Index>(plan.originals(0, 0));
    }
  }
  CHECK(correct == total);
}
