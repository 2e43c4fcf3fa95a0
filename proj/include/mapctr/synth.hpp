#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mapctr/dataset.hpp"

namespace mapctr {

// Pairwise label rule: when fields (field_a, field_b) hold one of the listed
// local-index pairs, `boost` is added to the label logit.
struct SynthRule {
  Eigen::Index field_a = 0, field_b = 1;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  double boost = 0.0;
};

// Synthetic multi-field categorical data with planted pairwise structure.
// Features follow a per-field Zipf profile so frequency-weighted sampling
// has skew to work with; labels are Bernoulli(sigmoid(logit / temperature)).
// co_draw plants the same pairs into the feature joint: with that
// probability per rule per row, the rule's fields are overwritten by one of
// its pairs, giving the pretext tasks real cross-field structure to learn.
struct SynthSpec {
  Eigen::Index num_fields = 20;
  std::uint64_t cardinality = 50;  // per field, including local 0
  std::uint64_t rows = 200000;
  double base_logit = -1.0;
  double temperature = 1.0;
  double zipf_exponent = 1.1;
  double co_draw = 0.3;
  std::uint64_t seed = 0;
  std::vector<SynthRule> rules;

  static SynthSpec from_json_text(const std::string& text);
  static SynthSpec from_json_file(const std::string& path);
  void validate() const;
};

// Deterministic rule generation: `count` rules over distinct field pairs,
// each with `pairs_per_rule` feature pairs and alternating +/- boost.
std::vector<SynthRule> make_rules(Eigen::Index num_fields, std::uint64_t cardinality, int count,
                                  int pairs_per_rule, double boost, std::uint64_t seed);

struct SynthResult {
  Dataset dataset;
  double bayes_auc = 0.0;   // test-split AUC of the generator's own logit
  double label_rate = 0.0;  // positive fraction over all rows
};

SynthResult generate_synth(const SynthSpec& spec);

}  // namespace mapctr
