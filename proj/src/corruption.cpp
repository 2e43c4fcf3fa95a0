#include "mapctr/corruption.hpp"

#include <cmath>

namespace mapctr {

ReplaceStrategy replace_strategy_from_string(const std::string& s) {
  if (s == "field-frequency") return ReplaceStrategy::field_frequency;
  if (s == "field-uniform") return ReplaceStrategy::field_uniform;
  if (s == "global-frequency") return ReplaceStrategy::global_frequency;
  if (s == "global-uniform") return ReplaceStrategy::global_uniform;
  throw Error::config("unknown replacement strategy '" + s + "'");
}

const char* replace_strategy_to_string(ReplaceStrategy s) {
  switch (s) {
    case ReplaceStrategy::field_frequency: return "field-frequency";
    case ReplaceStrategy::field_uniform: return "field-uniform";
    case ReplaceStrategy::global_frequency: return "global-frequency";
    case ReplaceStrategy::global_uniform: return "global-uniform";
  }
  return "?";
}

int corrupted_field_count(double gamma, Eigen::Index num_fields) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error::config("corrupt ratio must lie in (0,1)");
  // The epsilon keeps exact halves (e.g. 0.3 * 25) rounding up despite
  // binary representation of gamma falling a hair short.
  int m = static_cast<int>(std::floor(gamma * static_cast<double>(num_fields) + 0.5 + 1e-9));
  return std::max(1, m);
}

namespace {

// Uniform m-subset of `pool` via partial Fisher-Yates into `chosen`.
void choose_fields(const std::vector<Eigen::Index>& pool, int m, Rng& rng,
                   std::vector<Eigen::Index>& scratch, std::vector<Eigen::Index>& chosen) {
  scratch = pool;
  chosen.clear();
  for (int j = 0; j < m; ++j) {
    std::uint64_t pick = j + rng.uniform_int(scratch.size() - j);
    std::swap(scratch[j], scratch[pick]);
    chosen.push_back(scratch[j]);
  }
}

}  // namespace

CorruptionPlan corrupt_mask(const IdxMatrix& batch, const FeatureMap& fm, double gamma, Rng& rng) {
  const Eigen::Index n = batch.rows(), F = batch.cols();
  if (F != static_cast<Eigen::Index>(fm.num_fields()))
    throw Error::contract("corrupt_mask: batch width != field count");
  const int m = corrupted_field_count(gamma, F);
  CorruptionPlan plan;
  plan.mode = CorruptMode::mask;
  plan.m = m;
  plan.corrupted = batch;
  plan.fields.resize(n, m);
  plan.originals.resize(n, m);
  std::vector<Eigen::Index> pool(F), scratch, chosen;
  for (Eigen::Index f = 0; f < F; ++f) pool[f] = f;
  const std::uint32_t mask = static_cast<std::uint32_t>(fm.mask_index());
  for (Eigen::Index i = 0; i < n; ++i) {
    choose_fields(pool, m, rng, scratch, chosen);
    for (int j = 0; j < m; ++j) {
      Eigen::Index f = chosen[j];
      plan.fields(i, j) = f;
      plan.originals(i, j) = batch(i, f);
      plan.corrupted(i, f) = mask;
    }
  }
  return plan;
}

ReplacementSamplers ReplacementSamplers::build(const FeatureMap& fm, ReplaceStrategy strategy) {
  ReplacementSamplers rs;
  rs.strategy = strategy;
  switch (strategy) {
    case ReplaceStrategy::field_frequency:
      for (std::size_t f = 0; f < fm.num_fields(); ++f)
        rs.per_field.push_back(FrequencySampler::field_frequency(fm, f));
      break;
    case ReplaceStrategy::field_uniform:
      for (std::size_t f = 0; f < fm.num_fields(); ++f)
        rs.per_field.push_back(FrequencySampler::field_uniform(fm, f));
      break;
    case ReplaceStrategy::global_frequency:
      rs.global.push_back(FrequencySampler::global_frequency(fm));
      break;
    case ReplaceStrategy::global_uniform:
      rs.global.push_back(FrequencySampler::global_uniform(fm));
      break;
  }
  return rs;
}

CorruptionPlan corrupt_replace(const IdxMatrix& batch, const FeatureMap& fm, double gamma,
                               const ReplacementSamplers& samplers, Rng& rng) {
  const Eigen::Index n = batch.rows(), F = batch.cols();
  if (F != static_cast<Eigen::Index>(fm.num_fields()))
    throw Error::contract("corrupt_replace: batch width != field count");
  std::vector<Eigen::Index> eligible;
  for (Eigen::Index f = 0; f < F; ++f)
    if (fm.field_cardinalities[f] > 1) eligible.push_back(f);
  if (eligible.empty()) throw Error::data("corrupt_replace: every field has cardinality 1");
  const int m = std::min<int>(corrupted_field_count(gamma, F), static_cast<int>(eligible.size()));

  CorruptionPlan plan;
  plan.mode = CorruptMode::replace;
  plan.m = m;
  plan.corrupted = batch;
  plan.fields.resize(n, m);
  plan.originals.resize(n, m);
  plan.rfd_labels.setZero(n, F);
  std::vector<Eigen::Index> scratch, chosen;
  for (Eigen::Index i = 0; i < n; ++i) {
    choose_fields(eligible, m, rng, scratch, chosen);
    for (int j = 0; j < m; ++j) {
      Eigen::Index f = chosen[j];
      std::uint32_t orig = batch(i, f);
      plan.fields(i, j) = f;
      plan.originals(i, j) = orig;
      plan.corrupted(i, f) =
          static_cast<std::uint32_t>(samplers.for_field(f).draw_excluding(rng, orig));
      plan.rfd_labels(i, f) = 1;
    }
  }
  return plan;
}

CorruptionPlan corrupt_replace(const IdxMatrix& batch, const FeatureMap& fm, double gamma,
                               ReplaceStrategy strategy, Rng& rng) {
  return corrupt_replace(batch, fm, gamma, ReplacementSamplers::build(fm, strategy), rng);
}

}  // namespace mapctr
