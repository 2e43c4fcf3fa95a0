#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mapctr/common.hpp"
#include "mapctr/featuremap.hpp"

namespace mapctr {

// Weighted sampling over a contiguous global-index range, O(1) per draw via
// an alias table after O(n) construction. Exclusion draws follow the exact
// law renormalized without the excluded index.
class FrequencySampler {
 public:
  static FrequencySampler from_weights(std::uint64_t begin, std::vector<double> weights);
  static FrequencySampler uniform_range(std::uint64_t begin, std::uint64_t count);

  static FrequencySampler field_frequency(const FeatureMap& fm, std::size_t field);
  static FrequencySampler field_uniform(const FeatureMap& fm, std::size_t field);
  static FrequencySampler global_frequency(const FeatureMap& fm);
  static FrequencySampler global_uniform(const FeatureMap& fm);

  std::uint64_t begin() const { return begin_; }
  std::uint64_t end() const { return begin_ + count_; }
  std::uint64_t size() const { return count_; }
  double total_weight() const { return total_; }
  double weight(std::uint64_t global_index) const;

  std::uint64_t draw(Rng& rng) const;

  // Exact renormalized draw avoiding `exclude`, by inverse CDF over prefix
  // sums with the excluded mass cut out. O(log n), no retry loop.
  std::uint64_t draw_excluding(Rng& rng, std::uint64_t exclude) const;

  // Same law, tuned for hot paths: a few alias attempts (each attempt,
  // conditioned on missing the excluded index, already has the target law)
  // before falling back to draw_excluding. Expected O(1).
  std::uint64_t draw_excluding_fast(Rng& rng, std::uint64_t exclude) const;

 private:
  std::uint64_t local_excluding(Rng& rng, std::uint64_t e_local) const;

  std::uint64_t begin_ = 0;
  std::uint64_t count_ = 0;
  bool uniform_ = true;
  double total_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> prefix_;  // inclusive cumulative weights
  std::vector<double> prob_;    // alias acceptance
  std::vector<std::uint32_t> alias_;
};

// Draws k noise indices, independent given the rng state, optionally
// excluding one index (the positive). Support size must exceed 1 when an
// exclusion inside the support is requested.
std::vector<std::uint32_t> sample_noise(const FrequencySampler& sampler, std::size_t k,
                                        std::optional<std::uint64_t> exclude, Rng& rng);

}  // namespace mapctr
