#pragma once

#include <cstdint>
#include <vector>

#include "mapctr/featuremap.hpp"
#include "mapctr/sampler.hpp"
#include "mapctr/tensor.hpp"

namespace mapctr {

enum class CorruptMode { mask, replace };

enum class ReplaceStrategy { field_frequency, field_uniform, global_frequency, global_uniform };

ReplaceStrategy replace_strategy_from_string(const std::string& s);
const char* replace_strategy_to_string(ReplaceStrategy s);

// Number of corrupted fields per instance: max(1, round-half-up(gamma * F)),
// constant across instances.
int corrupted_field_count(double gamma, Eigen::Index num_fields);

// Per-batch corruption record: which fields were corrupted, the original
// values there, the corrupted batch, and (replace mode) the detection
// labels.
struct CorruptionPlan {
  CorruptMode mode = CorruptMode::mask;
  int m = 0;
  IdxMatrix corrupted;  // N x F
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> fields;  // N x m
  IdxMatrix originals;                                                 // N x m
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> rfd_labels;  // N x F, replace only
};

// Masks m uniformly chosen fields per instance with the shared mask token.
CorruptionPlan corrupt_mask(const IdxMatrix& batch, const FeatureMap& fm, double gamma, Rng& rng);

// Prebuilt replacement samplers for one (feature map, strategy) pair; the
// per-field tables are O(M) to construct, so trainers build them once.
struct ReplacementSamplers {
  ReplaceStrategy strategy;
  std::vector<FrequencySampler> per_field;  // field-scoped strategies
  std::vector<FrequencySampler> global;     // single entry for global strategies

  static ReplacementSamplers build(const FeatureMap& fm, ReplaceStrategy strategy);
  const FrequencySampler& for_field(std::size_t field) const {
    return global.empty() ? per_field[field] : global.front();
  }
};

// Replaces m uniformly chosen eligible fields per instance with a draw from
// the strategy's support, original excluded, so every replacement changes
// the value. Fields of cardinality 1 are never selected; m shrinks if fewer
// eligible fields exist.
CorruptionPlan corrupt_replace(const IdxMatrix& batch, const FeatureMap& fm, double gamma,
                               const ReplacementSamplers& samplers, Rng& rng);

// Convenience overload that builds samplers on the fly (tests, small maps).
CorruptionPlan corrupt_replace(const IdxMatrix& batch, const FeatureMap& fm, double gamma,
                               ReplaceStrategy strategy, Rng& rng);

}  // namespace mapctr
