#include "mapctr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mapctr/common.hpp"

namespace mapctr {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error::contract("auc: score/label size mismatch");
  const std::size_t n = scores.size();
  std::uint64_t positives = 0;
  for (auto y : labels) positives += y;
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw Error::data("auc undefined: need at least one positive and one negative");

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Tied block [i, j) shares the midrank (1-based).
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) positive_rank_sum += midrank;
    i = j;
  }
  double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw Error::contract("logloss: score/label size mismatch");
  if (scores.empty()) throw Error::data("logloss undefined on empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double pr = std::clamp(scores[i], 1e-7, 1.0 - 1e-7);
    acc -= labels[i] ? std::log(pr) : std::log1p(-pr);
  }
  return acc / static_cast<double>(scores.size());
}

}  // namespace mapctr
