#pragma once

#include <functional>
#include <vector>

#include "mapctr/tensor.hpp"

namespace mapctr {

// Central finite-difference check of analytic gradients.
//
// `loss` evaluates the model: loss(true) must run forward + backward and
// leave gradients accumulated in the given parameters (zeroed here first);
// loss(false) is forward-only. Both must be deterministic (fix any rng used
// inside). Returns the max relative error over every parameter coordinate,
// with denominator max(|analytic|, |numeric|, 1e-8).
//
// Meaningful only in a 64-bit instantiation; float truncation drowns the
// difference quotient.
template <class S>
double gradcheck(const std::function<double(bool)>& loss, const std::vector<Parameter<S>*>& params,
                 double eps = 1e-5) {
  for (auto* p : params) {
    p->dense_touched = false;
    p->touched.clear();
    p->grad.setZero();
  }
  (void)loss(true);
  std::vector<Mat<S>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<S>& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.rows(); ++i)
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        S saved = p.value(i, j);
        p.value(i, j) = saved + static_cast<S>(eps);
        double up = loss(false);
        p.value(i, j) = saved - static_cast<S>(eps);
        double down = loss(false);
        p.value(i, j) = saved;
        double numeric = (up - down) / (2.0 * eps);
        double a = static_cast<double>(analytic[k](i, j));
        double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(a - numeric) / denom);
      }
  }
  return max_rel;
}

}  // namespace mapctr
