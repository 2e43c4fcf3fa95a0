#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mapctr/common.hpp"

namespace mapctr {

// Dense storage. Rows index instances, columns index features/dimensions;
// row-major so one instance's data is contiguous.
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Batches of global feature indices, one row per instance, one column per
// field. Column-major: a field's column is contiguous.
using IdxMatrix = Eigen::Matrix<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic>;

inline std::string shape_str(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

template <class S>
std::string shape_str(const Mat<S>& m) {
  return shape_str(m.rows(), m.cols());
}

// A trainable tensor that outlives any single tape. Gradients accumulate
// here across backward passes until zero_grad().
//
// row_sparse marks embedding-style tables whose gradient is nonzero only in
// rows touched by gather/scatter ops; the touched list lets the optimizer
// and zero_grad() skip the rest of the (possibly huge) buffer.
template <class S>
struct Parameter {
  std::string name;
  Mat<S> value;
  Mat<S> grad;
  bool row_sparse = false;
  bool dense_touched = false;
  std::vector<Eigen::Index> touched;  // may contain duplicates

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value.setZero(rows, cols);
    grad.setZero(rows, cols);
  }

  void init_normal(Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < value.rows(); ++i)
      for (Eigen::Index j = 0; j < value.cols(); ++j)
        value(i, j) = static_cast<S>(rng.normal() * stddev);
  }

  void touch_row(Eigen::Index r) { touched.push_back(r); }
  void touch_all() { dense_touched = true; }

  void zero_grad() {
    if (row_sparse && !dense_touched) {
      for (Eigen::Index r : touched) grad.row(r).setZero();
      touched.clear();
    } else {
      grad.setZero();
      touched.clear();
      dense_touched = false;
    }
  }

  Eigen::Index size() const { return value.size(); }
};

template <class S>
class Tape;

// Handle to a tape node. Cheap to copy; valid until the owning tape resets.
template <class S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  const Mat<S>& value() const;
  Mat<S>& grad() const;
  bool requires_grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  S scalar() const {
    if (value().size() != 1) throw Error::contract("scalar() on tensor of shape " + shape_str(value()));
    return value()(0, 0);
  }

  Tape<S>* tape() const { return tape_; }
  int id() const { return id_; }
  explicit operator bool() const { return tape_ != nullptr; }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape. Operations append nodes in topological order; backward
// walks them in reverse, accumulating (never overwriting) into parent grads.
// Reset between batches; parameters live outside the tape and are attached
// as leaves.
template <class S>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape<S>&)>;

  struct Node {
    Mat<S> value;                     // owned unless param != nullptr
    Mat<S> grad;
    Parameter<S>* param = nullptr;
    bool requires_grad = false;
    bool grad_live = false;           // grad buffer initialized this backward
    BackwardFn backward;
  };

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }

  Var<S> leaf(Parameter<S>& p) {
    Node n;
    n.param = &p;
    n.requires_grad = grad_enabled_;
    nodes_.push_back(std::move(n));
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var<S> constant(Mat<S> v) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = false;
    nodes_.push_back(std::move(n));
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  Var<S> make(Mat<S> v, bool requires_grad, BackwardFn bw) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad && grad_enabled_;
    if (n.requires_grad) n.backward = std::move(bw);
    nodes_.push_back(std::move(n));
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  const Mat<S>& value(int id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  // Gradient buffer for accumulation; sized and zeroed on first use within a
  // backward pass (parameter grads are managed by zero_grad instead).
  Mat<S>& grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.param) {
      n.grad_live = true;
      return n.param->grad;
    }
    if (!n.grad_live) {
      n.grad.setZero(n.value.rows(), n.value.cols());
      n.grad_live = true;
    }
    return n.grad;
  }

  bool grad_live(int id) const { return nodes_[id].grad_live; }
  Node& node(int id) { return nodes_[id]; }

  // Seeds the root gradient with `seed` and propagates. The root must be a
  // 1x1 tensor. Multiple calls on one tape accumulate into parameter grads.
  void backward(Var<S> root, S seed = S(1)) {
    if (root.tape() != this) throw Error::contract("backward: root from another tape");
    const Mat<S>& rv = value(root.id());
    if (rv.size() != 1) throw Error::contract("backward: root has shape " + shape_str(rv) + ", want 1x1");
    // Parameter grads persist across passes; intermediate buffers restart.
    for (auto& n : nodes_)
      if (!n.param) n.grad_live = false;
    grad_buf(root.id())(0, 0) += seed;
    for (int id = root.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.requires_grad && n.backward && n.grad_live) n.backward(*this);
    }
  }

  void reset() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

template <class S>
const Mat<S>& Var<S>::value() const {
  return tape_->value(id_);
}

template <class S>
Mat<S>& Var<S>::grad() const {
  return tape_->grad_buf(id_);
}

template <class S>
bool Var<S>::requires_grad() const {
  return tape_->node(id_).requires_grad;
}

}  // namespace mapctr
