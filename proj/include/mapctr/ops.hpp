#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mapctr/tensor.hpp"

namespace mapctr {

// Differentiable operations over tape vars. All free functions; each
// validates shapes, computes the forward value, and registers a backward
// closure that accumulates into parent gradients.

namespace detail {

inline double softplus(double x) {
  // max(x,0) + log1p(exp(-|x|)), stable at both tails
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Creates the node first, then wires a backward closure that knows its own
// node id. bw(tape, self_id) runs only if the node requires grad.
template <class S, class F>
Var<S> make_op(Tape<S>& t, Mat<S> out, bool rg, F&& bw) {
  Var<S> v = t.make(std::move(out), rg, nullptr);
  if (v.requires_grad()) {
    int self = v.id();
    t.node(self).backward = [self, f = std::forward<F>(bw)](Tape<S>& tp) { f(tp, self); };
  }
  return v;
}

template <class S>
void touch_rows_if_sparse(Parameter<S>* p, const std::uint32_t* rows, Eigen::Index n) {
  if (p && p->row_sparse)
    for (Eigen::Index i = 0; i < n; ++i) p->touch_row(static_cast<Eigen::Index>(rows[i]));
}

}  // namespace detail

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape();
  const Mat<S>&av = a.value(), &bv = b.value();
  if (av.cols() != bv.rows())
    throw Error::contract("matmul: incompatible shapes " + shape_str(av) + " and " + shape_str(bv));
  bool rg = a.requires_grad() || b.requires_grad();
  int ai = a.id(), bi = b.id();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return detail::make_op(t, Mat<S>(av * bv), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    if (ga) tp.grad_buf(ai).noalias() += g * tp.value(bi).transpose();
    if (gb) tp.grad_buf(bi).noalias() += tp.value(ai).transpose() * g;
  });
}

// a [m x k] times b^T where b is [n x k]; the natural shape for x * W^T with
// weights stored out-by-in.
template <class S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape();
  const Mat<S>&av = a.value(), &bv = b.value();
  if (av.cols() != bv.cols())
    throw Error::contract("matmul_nt: incompatible shapes " + shape_str(av) + " and " + shape_str(bv));
  bool rg = a.requires_grad() || b.requires_grad();
  int ai = a.id(), bi = b.id();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return detail::make_op(t, Mat<S>(av * bv.transpose()), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    if (ga) tp.grad_buf(ai).noalias() += g * tp.value(bi);
    if (gb) tp.grad_buf(bi).noalias() += g.transpose() * tp.value(ai);
  });
}

template <class S>
Var<S> operator+(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape();
  const Mat<S>&av = a.value(), &bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw Error::contract("add: shape mismatch " + shape_str(av) + " vs " + shape_str(bv));
  bool rg = a.requires_grad() || b.requires_grad();
  int ai = a.id(), bi = b.id();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return detail::make_op(t, Mat<S>(av + bv), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    if (ga) tp.grad_buf(ai) += g;
    if (gb) tp.grad_buf(bi) += g;
  });
}

// Elementwise product.
template <class S>
Var<S> operator*(Var<S> a, Var<S> b) {
  Tape<S>& t = *a.tape();
  const Mat<S>&av = a.value(), &bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols())
    throw Error::contract("mul: shape mismatch " + shape_str(av) + " vs " + shape_str(bv));
  bool rg = a.requires_grad() || b.requires_grad();
  int ai = a.id(), bi = b.id();
  bool ga = a.requires_grad(), gb = b.requires_grad();
  return detail::make_op(t, Mat<S>(av.cwiseProduct(bv)), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    if (ga) tp.grad_buf(ai) += g.cwiseProduct(tp.value(bi));
    if (gb) tp.grad_buf(bi) += g.cwiseProduct(tp.value(ai));
  });
}

template <class S>
Var<S> scale(Var<S> a, S c) {
  Tape<S>& t = *a.tape();
  int ai = a.id();
  return detail::make_op(t, Mat<S>(a.value() * c), a.requires_grad(), [=](Tape<S>& tp, int self) {
    tp.grad_buf(ai) += tp.grad_buf(self) * c;
  });
}

// Adds a 1 x n row vector to every row of x.
template <class S>
Var<S> add_rowvec(Var<S> x, Var<S> rowvec) {
  Tape<S>& t = *x.tape();
  const Mat<S>&xv = x.value(), &bv = rowvec.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols())
    throw Error::contract("add_rowvec: " + shape_str(bv) + " does not broadcast over " + shape_str(xv));
  bool rg = x.requires_grad() || rowvec.requires_grad();
  int xi = x.id(), bi = rowvec.id();
  bool gx = x.requires_grad(), gb = rowvec.requires_grad();
  Mat<S> out = xv;
  out.rowwise() += bv.row(0);
  return detail::make_op(t, std::move(out), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    if (gx) tp.grad_buf(xi) += g;
    if (gb) tp.grad_buf(bi).row(0) += g.colwise().sum();
  });
}

template <class S>
Var<S> relu(Var<S> x) {
  Tape<S>& t = *x.tape();
  int xi = x.id();
  return detail::make_op(t, Mat<S>(x.value().cwiseMax(S(0))), x.requires_grad(),
                         [=](Tape<S>& tp, int self) {
                           const Mat<S>& g = tp.grad_buf(self);
                           const Mat<S>& v = tp.value(xi);
                           tp.grad_buf(xi) += (v.array() > S(0)).template cast<S>().matrix().cwiseProduct(g);
                         });
}

template <class S>
Var<S> sigmoid(Var<S> x) {
  Tape<S>& t = *x.tape();
  int xi = x.id();
  Mat<S> out = x.value().unaryExpr([](S v) { return static_cast<S>(detail::sigmoid_d(static_cast<double>(v))); });
  return detail::make_op(t, std::move(out), x.requires_grad(), [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    const Mat<S>& y = tp.value(self);
    tp.grad_buf(xi).array() += g.array() * y.array() * (S(1) - y.array());
  });
}

// Concatenates along columns; all parts must share a row count. Output
// column order follows the argument order.
template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw Error::contract("concat_cols: no inputs");
  Tape<S>& t = *parts[0].tape();
  Eigen::Index rows = parts[0].rows(), cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.rows() != rows)
      throw Error::contract("concat_cols: row mismatch " + shape_str(p.value()) + " vs " +
                            shape_str(rows, parts[0].cols()));
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Mat<S> out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offs, widths;
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    offs.push_back(at);
    widths.push_back(p.cols());
    at += p.cols();
  }
  return detail::make_op(t, std::move(out), rg,
                         [ids, offs, widths](Tape<S>& tp, int self) {
                           const Mat<S>& g = tp.grad_buf(self);
                           for (std::size_t k = 0; k < ids.size(); ++k)
                             if (tp.node(ids[k]).requires_grad)
                               tp.grad_buf(ids[k]) += g.middleCols(offs[k], widths[k]);
                         });
}

// Row selection (duplicates allowed); backward scatter-adds.
template <class S>
Var<S> take_rows(Var<S> x, std::vector<Eigen::Index> rows) {
  Tape<S>& t = *x.tape();
  const Mat<S>& xv = x.value();
  for (Eigen::Index r : rows)
    if (r < 0 || r >= xv.rows()) throw Error::contract("take_rows: row " + std::to_string(r) + " out of range");
  Mat<S> out(static_cast<Eigen::Index>(rows.size()), xv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = xv.row(rows[i]);
  int xi = x.id();
  return detail::make_op(t, std::move(out), x.requires_grad(),
                         [xi, rows = std::move(rows)](Tape<S>& tp, int self) {
                           const Mat<S>& g = tp.grad_buf(self);
                           Mat<S>& gx = tp.grad_buf(xi);
                           for (std::size_t i = 0; i < rows.size(); ++i)
                             gx.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
                         });
}

// Embedding lookup: rows of `table` gathered by a batch of indices, laid out
// as one row per instance with the F gathered vectors side by side.
// Backward scatter-adds into the table gradient row by row.
template <class S>
Var<S> embedding_rows(Var<S> table, const IdxMatrix& idx) {
  Tape<S>& t = *table.tape();
  const Mat<S>& tv = table.value();
  const Eigen::Index n = idx.rows(), f = idx.cols(), d = tv.cols();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < f; ++j)
      if (idx(i, j) >= tv.rows())
        throw Error::contract("embedding_rows: index " + std::to_string(idx(i, j)) + " out of range for table " +
                              shape_str(tv));
  Mat<S> out(n, f * d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < f; ++j)
      out.row(i).segment(j * d, d) = tv.row(static_cast<Eigen::Index>(idx(i, j)));
  int ti = table.id();
  return detail::make_op(t, std::move(out), table.requires_grad(),
                         [ti, idx, f, d](Tape<S>& tp, int self) {
                           const Mat<S>& g = tp.grad_buf(self);
                           Mat<S>& gt = tp.grad_buf(ti);
                           Parameter<S>* p = tp.node(ti).param;
                           for (Eigen::Index i = 0; i < g.rows(); ++i)
                             for (Eigen::Index j = 0; j < f; ++j) {
                               Eigen::Index r = static_cast<Eigen::Index>(idx(i, j));
                               gt.row(r) += g.row(i).segment(j * d, d);
                               if (p && p->row_sparse) p->touch_row(r);
                             }
                         });
}

// out(r, c) = table.row(idx(r, c)) dot h.row(r). The sparse-logit primitive:
// only the referenced table rows participate, forward or backward.
template <class S>
Var<S> rows_dot(Var<S> table, const IdxMatrix& idx, Var<S> h) {
  Tape<S>& t = *table.tape();
  const Mat<S>&tv = table.value(), &hv = h.value();
  if (idx.rows() != hv.rows())
    throw Error::contract("rows_dot: index rows " + std::to_string(idx.rows()) + " vs h " + shape_str(hv));
  if (tv.cols() != hv.cols())
    throw Error::contract("rows_dot: width mismatch " + shape_str(tv) + " vs " + shape_str(hv));
  const Eigen::Index r = idx.rows(), c = idx.cols();
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (idx(i, j) >= tv.rows())
        throw Error::contract("rows_dot: index " + std::to_string(idx(i, j)) + " out of range for table " +
                              shape_str(tv));
  Mat<S> out(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      out(i, j) = tv.row(static_cast<Eigen::Index>(idx(i, j))).dot(hv.row(i));
  bool rg = table.requires_grad() || h.requires_grad();
  int ti = table.id(), hi = h.id();
  bool gt = table.requires_grad(), gh = h.requires_grad();
  return detail::make_op(t, std::move(out), rg, [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    const Mat<S>& tv2 = tp.value(ti);
    const Mat<S>& hv2 = tp.value(hi);
    Parameter<S>* p = tp.node(ti).param;
    Mat<S>* gtab = gt ? &tp.grad_buf(ti) : nullptr;
    Mat<S>* gvecs = gh ? &tp.grad_buf(hi) : nullptr;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        Eigen::Index row = static_cast<Eigen::Index>(idx(i, j));
        S gv = g(i, j);
        if (gv == S(0)) continue;
        if (gtab) {
          gtab->row(row) += gv * hv2.row(i);
          if (p && p->row_sparse) p->touch_row(row);
        }
        if (gvecs) gvecs->row(i) += gv * tv2.row(row);
      }
  });
}

template <class S>
Var<S> rowsum(Var<S> x) {
  Tape<S>& t = *x.tape();
  int xi = x.id();
  Mat<S> out = x.value().rowwise().sum();
  return detail::make_op(t, std::move(out), x.requires_grad(), [=](Tape<S>& tp, int self) {
    const Mat<S>& g = tp.grad_buf(self);
    tp.grad_buf(xi).colwise() += g.col(0);
  });
}

template <class S>
Var<S> reduce_sum(Var<S> x) {
  Tape<S>& t = *x.tape();
  int xi = x.id();
  Mat<S> out(1, 1);
  out(0, 0) = x.value().sum();
  return detail::make_op(t, std::move(out), x.requires_grad(), [=](Tape<S>& tp, int self) {
    tp.grad_buf(xi).array() += tp.grad_buf(self)(0, 0);
  });
}

template <class S>
Var<S> reduce_mean(Var<S> x) {
  Tape<S>& t = *x.tape();
  if (x.value().size() == 0) throw Error::contract("reduce_mean: empty tensor");
  int xi = x.id();
  S inv = S(1) / static_cast<S>(x.value().size());
  Mat<S> out(1, 1);
  out(0, 0) = x.value().sum() * inv;
  return detail::make_op(t, std::move(out), x.requires_grad(), [=](Tape<S>& tp, int self) {
    tp.grad_buf(xi).array() += tp.grad_buf(self)(0, 0) * inv;
  });
}

// Inverted-scaling dropout: kept entries are divided by the keep rate so the
// expectation matches the deterministic pass. Identity when disabled.
template <class S>
Var<S> dropout(Var<S> x, double rate, Rng& rng, bool enabled) {
  if (!enabled || rate <= 0.0) return x;
  if (rate >= 1.0) throw Error::contract("dropout: rate must be < 1");
  Tape<S>& t = *x.tape();
  const Mat<S>& xv = x.value();
  S scale_keep = static_cast<S>(1.0 / (1.0 - rate));
  Mat<S> mask(xv.rows(), xv.cols());
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      mask(i, j) = rng.uniform() < rate ? S(0) : scale_keep;
  int xi = x.id();
  Mat<S> out = xv.cwiseProduct(mask);
  return detail::make_op(t, std::move(out), x.requires_grad(),
                         [xi, mask = std::move(mask)](Tape<S>& tp, int self) {
                           tp.grad_buf(xi) += tp.grad_buf(self).cwiseProduct(mask);
                         });
}

// Mean binary cross-entropy over all entries. Predictions are clamped to
// [1e-7, 1 - 1e-7]; clamped entries get zero gradient.
template <class S>
Var<S> bce_loss(Var<S> preds, const Mat<S>& labels) {
  Tape<S>& t = *preds.tape();
  const Mat<S>& pv = preds.value();
  if (pv.size() == 0) throw Error::contract("bce_loss: empty prediction tensor");
  if (pv.rows() != labels.rows() || pv.cols() != labels.cols())
    throw Error::contract("bce_loss: shape mismatch " + shape_str(pv) + " vs " + shape_str(labels));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    S y = labels(i / labels.cols(), i % labels.cols());
    if (y != S(0) && y != S(1)) throw Error::contract("bce_loss: labels must be 0 or 1");
  }
  const double lo = 1e-7, hi = 1.0 - 1e-7;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pv.rows(); ++i)
    for (Eigen::Index j = 0; j < pv.cols(); ++j) {
      double p = std::clamp(static_cast<double>(pv(i, j)), lo, hi);
      double y = static_cast<double>(labels(i, j));
      acc -= y * std::log(p) + (1.0 - y) * std::log1p(-p);
    }
  Mat<S> out(1, 1);
  const double n = static_cast<double>(pv.size());
  out(0, 0) = static_cast<S>(acc / n);
  int pi = preds.id();
  return detail::make_op(t, std::move(out), preds.requires_grad(),
                         [pi, labels, lo, hi, n](Tape<S>& tp, int self) {
                           S g = tp.grad_buf(self)(0, 0);
                           const Mat<S>& pv2 = tp.value(pi);
                           Mat<S>& gp = tp.grad_buf(pi);
                           for (Eigen::Index i = 0; i < pv2.rows(); ++i)
                             for (Eigen::Index j = 0; j < pv2.cols(); ++j) {
                               double p = static_cast<double>(pv2(i, j));
                               if (p < lo || p > hi) continue;  // clamped: no gradient
                               double y = static_cast<double>(labels(i, j));
                               gp(i, j) += static_cast<S>(static_cast<double>(g) * (p - y) / (p * (1.0 - p) * n));
                             }
                         });
}

// FM second-order interaction: input is N x (F*d) per-field embeddings; the
// output column is 0.5 * sum_j [ (sum_f v_fj)^2 - sum_f v_fj^2 ] per row.
template <class S>
Var<S> fm_second_order(Var<S> emb, Eigen::Index fields, Eigen::Index dim) {
  Tape<S>& t = *emb.tape();
  const Mat<S>& ev = emb.value();
  if (ev.cols() != fields * dim)
    throw Error::contract("fm_second_order: got " + shape_str(ev) + ", want cols = " +
                          std::to_string(fields * dim));
  const Eigen::Index n = ev.rows();
  Mat<S> sum = Mat<S>::Zero(n, dim), sumsq = Mat<S>::Zero(n, dim);
  for (Eigen::Index f = 0; f < fields; ++f) {
    auto block = ev.middleCols(f * dim, dim);
    sum += block;
    sumsq += block.cwiseProduct(block);
  }
  Mat<S> out(n, 1);
  out.col(0) = S(0.5) * (sum.cwiseProduct(sum) - sumsq).rowwise().sum();
  int ei = emb.id();
  return detail::make_op(t, std::move(out), emb.requires_grad(),
                         [ei, fields, dim, sum = std::move(sum)](Tape<S>& tp, int self) {
                           const Mat<S>& g = tp.grad_buf(self);
                           const Mat<S>& ev2 = tp.value(ei);
                           Mat<S>& ge = tp.grad_buf(ei);
                           for (Eigen::Index f = 0; f < fields; ++f) {
                             auto block = ev2.middleCols(f * dim, dim);
                             ge.middleCols(f * dim, dim) +=
                                 ((sum - block).array().colwise() * g.col(0).array()).matrix();
                           }
                         });
}

// Sum over rows of weighted NCE terms. Column 0 holds the positive logit,
// remaining columns the noise logits:
//   loss = sum_r w_r * ( softplus(-z_{r,0}) + sum_{k>0} softplus(z_{r,k}) ).
template <class S>
Var<S> nce_binary_loss(Var<S> logits, const Mat<S>& row_weights) {
  Tape<S>& t = *logits.tape();
  const Mat<S>& zv = logits.value();
  if (row_weights.rows() != zv.rows() || row_weights.cols() != 1)
    throw Error::contract("nce_binary_loss: weights " + shape_str(row_weights) + " vs logits " + shape_str(zv));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < zv.rows(); ++i) {
    double row = detail::softplus(-static_cast<double>(zv(i, 0)));
    for (Eigen::Index j = 1; j < zv.cols(); ++j) row += detail::softplus(static_cast<double>(zv(i, j)));
    acc += static_cast<double>(row_weights(i, 0)) * row;
  }
  Mat<S> out(1, 1);
  out(0, 0) = static_cast<S>(acc);
  int zi = logits.id();
  return detail::make_op(t, std::move(out), logits.requires_grad(),
                         [zi, row_weights](Tape<S>& tp, int self) {
                           S g = tp.grad_buf(self)(0, 0);
                           const Mat<S>& zv2 = tp.value(zi);
                           Mat<S>& gz = tp.grad_buf(zi);
                           for (Eigen::Index i = 0; i < zv2.rows(); ++i) {
                             double w = static_cast<double>(row_weights(i, 0)) * static_cast<double>(g);
                             gz(i, 0) += static_cast<S>(w * (detail::sigmoid_d(static_cast<double>(zv2(i, 0))) - 1.0));
                             for (Eigen::Index j = 1; j < zv2.cols(); ++j)
                               gz(i, j) += static_cast<S>(w * detail::sigmoid_d(static_cast<double>(zv2(i, j))));
                           }
                         });
}

// Full softmax cross-entropy against every row of `table`:
//   loss = sum_r w_r * ( logsumexp_j(table_j . h_r) - table_{t_r} . h_r ).
// Logits are never materialized whole; rows are processed in chunks sized to
// a bounded scratch buffer, and the backward pass recomputes each chunk.
// The table gradient is dense (every row participates in the softmax).
template <class S>
Var<S> softmax_xent_gathered(Var<S> h, Var<S> table, const std::vector<std::uint32_t>& targets,
                             const Mat<S>& row_weights) {
  Tape<S>& t = *h.tape();
  const Mat<S>&hv = h.value(), &tv = table.value();
  const Eigen::Index r = hv.rows(), m = tv.rows();
  if (static_cast<Eigen::Index>(targets.size()) != r)
    throw Error::contract("softmax_xent_gathered: " + std::to_string(targets.size()) + " targets for " +
                          std::to_string(r) + " rows");
  if (hv.cols() != tv.cols())
    throw Error::contract("softmax_xent_gathered: width mismatch " + shape_str(hv) + " vs " + shape_str(tv));
  for (std::uint32_t tg : targets)
    if (tg >= static_cast<std::uint32_t>(m))
      throw Error::contract("softmax_xent_gathered: target " + std::to_string(tg) + " out of range");

  // Chunk rows sized to a ~128 MB logit buffer: big enough for efficient
  // GEMM shapes, bounded enough that M = 1e6 never materializes all logits.
  const Eigen::Index chunk = std::max<Eigen::Index>(1, (Eigen::Index(128) << 20) / std::max<Eigen::Index>(1, m));
  double acc = 0.0;
  Mat<S> z;
  for (Eigen::Index at = 0; at < r; at += chunk) {
    Eigen::Index rows = std::min(chunk, r - at);
    z.noalias() = hv.middleRows(at, rows) * tv.transpose();
    for (Eigen::Index i = 0; i < rows; ++i) {
      double zmax = static_cast<double>(z.row(i).maxCoeff());
      double sum = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) sum += std::exp(static_cast<double>(z(i, j)) - zmax);
      double lse = zmax + std::log(sum);
      double zt = static_cast<double>(z(i, static_cast<Eigen::Index>(targets[at + i])));
      acc += static_cast<double>(row_weights(at + i, 0)) * (lse - zt);
    }
  }
  Mat<S> out(1, 1);
  out(0, 0) = static_cast<S>(acc);
  bool rg = h.requires_grad() || table.requires_grad();
  int hi = h.id(), ti = table.id();
  bool gh = h.requires_grad(), gt = table.requires_grad();
  return detail::make_op(t, std::move(out), rg, [=, targets = targets](Tape<S>& tp, int self) {
    S g = tp.grad_buf(self)(0, 0);
    const Mat<S>& hv2 = tp.value(hi);
    const Mat<S>& tv2 = tp.value(ti);
    Mat<S>* ghm = gh ? &tp.grad_buf(hi) : nullptr;
    Mat<S>* gtm = gt ? &tp.grad_buf(ti) : nullptr;
    Parameter<S>* p = tp.node(ti).param;
    if (gt && p && p->row_sparse) p->touch_all();
    Mat<S> z;
    for (Eigen::Index at = 0; at < hv2.rows(); at += chunk) {
      Eigen::Index rows = std::min(chunk, hv2.rows() - at);
      z.noalias() = hv2.middleRows(at, rows) * tv2.transpose();
      for (Eigen::Index i = 0; i < rows; ++i) {
        double zmax = static_cast<double>(z.row(i).maxCoeff());
        double sum = 0.0;
        for (Eigen::Index j = 0; j < z.cols(); ++j) sum += std::exp(static_cast<double>(z(i, j)) - zmax);
        double w = static_cast<double>(row_weights(at + i, 0)) * static_cast<double>(g);
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
          double soft = std::exp(static_cast<double>(z(i, j)) - zmax) / sum;
          z(i, j) = static_cast<S>(w * soft);
        }
        z(i, static_cast<Eigen::Index>(targets[at + i])) -= static_cast<S>(w);
      }
      if (ghm) ghm->middleRows(at, rows).noalias() += z * tv2;
      if (gtm) gtm->noalias() += z.transpose() * hv2.middleRows(at, rows);
    }
  });
}

}  // namespace mapctr
