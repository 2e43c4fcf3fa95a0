#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mapctr/tensor.hpp"

namespace mapctr {

enum class LrSchedule { constant, cosine };

struct AdamConfig {
  double base_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
  LrSchedule schedule = LrSchedule::constant;
  std::uint64_t total_steps = 0;  // required for cosine
};

// lr(t) = base * 0.5 * (1 + cos(pi * t / total)), t in [0, total].
inline double schedule_lr(const AdamConfig& c, std::uint64_t t) {
  if (c.schedule == LrSchedule::constant) return c.base_lr;
  if (c.total_steps == 0) throw Error::config("cosine schedule requires total_steps > 0");
  double frac = static_cast<double>(std::min(t, c.total_steps)) / static_cast<double>(c.total_steps);
  return c.base_lr * 0.5 * (1.0 + std::cos(M_PI * frac));
}

// Adam with decoupled weight decay. Row-sparse parameters receive lazy
// updates: only rows touched since the last zero_grad are advanced, with
// bias correction by the global step count.
template <class S>
class Adam {
 public:
  Adam(std::vector<Parameter<S>*> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    slots_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      slots_[i].m.setZero(params_[i]->value.rows(), params_[i]->value.cols());
      slots_[i].v.setZero(params_[i]->value.rows(), params_[i]->value.cols());
    }
  }

  std::uint64_t step_count() const { return step_; }
  double current_lr() const { return schedule_lr(cfg_, step_); }
  const AdamConfig& config() const { return cfg_; }

  void zero_grads() {
    for (auto* p : params_) p->zero_grad();
  }

  void step() {
    const double lr = schedule_lr(cfg_, step_);
    const std::uint64_t t = step_ + 1;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<S>& p = *params_[i];
      if (p.row_sparse && !p.dense_touched) {
        std::sort(p.touched.begin(), p.touched.end());
        p.touched.erase(std::unique(p.touched.begin(), p.touched.end()), p.touched.end());
        for (Eigen::Index r : p.touched) apply_row(p, slots_[i], r, lr, bc1, bc2);
      } else {
        if (!p.grad.allFinite())
          throw Error::runtime("non-finite gradient in parameter '" + p.name + "'");
        auto& m = slots_[i].m;
        auto& v = slots_[i].v;
        m = static_cast<S>(cfg_.beta1) * m + static_cast<S>(1.0 - cfg_.beta1) * p.grad;
        v.array() = static_cast<S>(cfg_.beta2) * v.array() +
                    static_cast<S>(1.0 - cfg_.beta2) * p.grad.array().square();
        p.value.array() -= static_cast<S>(lr) * ((m.array() / static_cast<S>(bc1)) /
                           ((v.array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(cfg_.eps)));
        if (cfg_.weight_decay != 0.0)
          p.value.array() -= static_cast<S>(lr * cfg_.weight_decay) * p.value.array();
      }
    }
    ++step_;
  }

 private:
  struct Slot {
    Mat<S> m, v;
  };

  void apply_row(Parameter<S>& p, Slot& s, Eigen::Index r, double lr, double bc1, double bc2) {
    if (!p.grad.row(r).allFinite())
      throw Error::runtime("non-finite gradient in parameter '" + p.name + "' row " + std::to_string(r));
    s.m.row(r) = static_cast<S>(cfg_.beta1) * s.m.row(r) + static_cast<S>(1.0 - cfg_.beta1) * p.grad.row(r);
    s.v.row(r).array() = static_cast<S>(cfg_.beta2) * s.v.row(r).array() +
                         static_cast<S>(1.0 - cfg_.beta2) * p.grad.row(r).array().square();
    p.value.row(r).array() -= static_cast<S>(lr) * ((s.m.row(r).array() / static_cast<S>(bc1)) /
                              ((s.v.row(r).array() / static_cast<S>(bc2)).sqrt() + static_cast<S>(cfg_.eps)));
    if (cfg_.weight_decay != 0.0)
      p.value.row(r).array() -= static_cast<S>(lr * cfg_.weight_decay) * p.value.row(r).array();
  }

  std::vector<Parameter<S>*> params_;
  AdamConfig cfg_;
  std::vector<Slot> slots_;
  std::uint64_t step_ = 0;
};

}  // namespace mapctr
