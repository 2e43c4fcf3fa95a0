#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace mapctr {

struct MetricReport {
  double auc = 0.0;
  double logloss = 0.0;
  std::uint64_t n = 0;
  std::string split;
};

// Rank-based AUC with midranks for ties, O(n log n):
//   (sum of positive ranks - P(P+1)/2) / (P * N).
// Throws on single-class input.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean binary cross-entropy with the same 1e-7 clamp as the training loss,
// accumulated in double.
double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace mapctr
