#include "mapctr/synth.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mapctr/metrics.hpp"
#include "mapctr/sampler.hpp"

namespace mapctr {

void SynthSpec::validate() const {
  if (num_fields < 2) throw Error::config("synth: num_fields must be >= 2");
  if (cardinality < 2) throw Error::config("synth: cardinality must be >= 2");
  if (rows < 10) throw Error::config("synth: rows must be >= 10");
  if (temperature <= 0.0) throw Error::config("synth: temperature must be > 0");
  if (co_draw < 0.0 || co_draw > 1.0) throw Error::config("synth: co_draw must lie in [0,1]");
  for (const auto& r : rules) {
    if (r.field_a < 0 || r.field_a >= num_fields || r.field_b < 0 || r.field_b >= num_fields ||
        r.field_a == r.field_b)
      throw Error::config("synth: rule references invalid field pair");
    if (r.pairs.empty()) throw Error::config("synth: rule has no feature pairs");
    for (auto [a, b] : r.pairs)
      if (a >= cardinality || b >= cardinality)
        throw Error::config("synth: rule feature pair out of cardinality range");
  }
}

std::vector<SynthRule> make_rules(Eigen::Index num_fields, std::uint64_t cardinality, int count,
                                  int pairs_per_rule, double boost, std::uint64_t seed) {
  Rng rng(derive_stream(seed, static_cast<std::uint64_t>(StreamTag::synth), 1));
  std::vector<SynthRule> rules;
  std::set<std::pair<Eigen::Index, Eigen::Index>> used;
  // Feature pairs sit in the mid-frequency ranks so they both occur often
  // enough to matter and are not the degenerate most-common values.
  const std::uint64_t lo = 1, hi = std::min<std::uint64_t>(cardinality, 12);
  for (int r = 0; r < count; ++r) {
    SynthRule rule;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 1000) throw Error::config("synth: cannot place distinct rule field pairs");
      Eigen::Index a = static_cast<Eigen::Index>(rng.uniform_int(num_fields));
      Eigen::Index b = static_cast<Eigen::Index>(rng.uniform_int(num_fields));
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (used.count({a, b})) continue;
      used.insert({a, b});
      rule.field_a = a;
      rule.field_b = b;
      break;
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    while (static_cast<int>(rule.pairs.size()) < pairs_per_rule) {
      std::uint32_t a = static_cast<std::uint32_t>(lo + rng.uniform_int(hi - lo));
      std::uint32_t b = static_cast<std::uint32_t>(lo + rng.uniform_int(hi - lo));
      if (seen.insert({a, b}).second) rule.pairs.emplace_back(a, b);
    }
    rule.boost = (r % 2 == 0 ? 1.0 : -1.0) * boost;
    rules.push_back(std::move(rule));
  }
  return rules;
}

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error::config(std::string("synth spec JSON parse failure: ") + e.what());
  }
  SynthSpec s;
  int auto_count = 0, auto_pairs = 4;
  double auto_boost = 2.0;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "num_fields")
      s.num_fields = it.value().get<Eigen::Index>();
    else if (key == "cardinality")
      s.cardinality = it.value().get<std::uint64_t>();
    else if (key == "rows")
      s.rows = it.value().get<std::uint64_t>();
    else if (key == "base_logit")
      s.base_logit = it.value().get<double>();
    else if (key == "temperature")
      s.temperature = it.value().get<double>();
    else if (key == "zipf_exponent")
      s.zipf_exponent = it.value().get<double>();
    else if (key == "co_draw")
      s.co_draw = it.value().get<double>();
    else if (key == "seed")
      s.seed = it.value().get<std::uint64_t>();
    else if (key == "rules") {
      for (const auto& jr : it.value()) {
        SynthRule r;
        r.field_a = jr.at("fields").at(0).get<Eigen::Index>();
        r.field_b = jr.at("fields").at(1).get<Eigen::Index>();
        for (const auto& pr : jr.at("pairs"))
          r.pairs.emplace_back(pr.at(0).get<std::uint32_t>(), pr.at(1).get<std::uint32_t>());
        r.boost = jr.at("boost").get<double>();
        s.rules.push_back(std::move(r));
      }
    } else if (key == "auto_rules") {
      const auto& ar = it.value();
      for (auto ait = ar.begin(); ait != ar.end(); ++ait) {
        if (ait.key() == "count")
          auto_count = ait.value().get<int>();
        else if (ait.key() == "pairs_per_rule")
          auto_pairs = ait.value().get<int>();
        else if (ait.key() == "boost")
          auto_boost = ait.value().get<double>();
        else
          throw Error::config("synth spec: unknown auto_rules key '" + ait.key() + "'");
      }
    } else {
      throw Error::config("synth spec: unknown key '" + key + "'");
    }
  }
  if (auto_count > 0) {
    auto generated = make_rules(s.num_fields, s.cardinality, auto_count, auto_pairs, auto_boost, s.seed);
    s.rules.insert(s.rules.end(), generated.begin(), generated.end());
  }
  s.validate();
  return s;
}

SynthSpec SynthSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::data("cannot open synth spec '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

SynthResult generate_synth(const SynthSpec& spec) {
  spec.validate();
  const Eigen::Index F = spec.num_fields;
  const std::uint64_t C = spec.cardinality;

  FeatureMap fm;
  for (Eigen::Index f = 0; f < F; ++f) {
    fm.field_offsets.push_back(static_cast<std::uint64_t>(f) * C);
    fm.field_cardinalities.push_back(C);
  }
  fm.global_size = static_cast<std::uint64_t>(F) * C;
  fm.frequencies.assign(fm.global_size, 0);

  // One Zipf profile over local ranks, shared by all fields.
  std::vector<double> zipf(C);
  for (std::uint64_t r = 0; r < C; ++r)
    zipf[r] = 1.0 / std::pow(static_cast<double>(r + 1), spec.zipf_exponent);
  FrequencySampler zipf_sampler = FrequencySampler::from_weights(0, zipf);

  Rng rng(derive_stream(spec.seed, static_cast<std::uint64_t>(StreamTag::synth), 2));
  Dataset ds;
  ds.fmap = fm;
  ds.rows.resize(static_cast<Eigen::Index>(spec.rows), F);
  ds.labels.resize(spec.rows);

  std::vector<std::uint32_t> locals(F);
  std::vector<double> logits(spec.rows);
  std::uint64_t positives = 0;
  for (std::uint64_t i = 0; i < spec.rows; ++i) {
    for (Eigen::Index f = 0; f < F; ++f)
      locals[f] = static_cast<std::uint32_t>(zipf_sampler.draw(rng));
    for (const auto& rule : spec.rules) {
      if (spec.co_draw > 0.0 && rng.bernoulli(spec.co_draw)) {
        auto [a, b] = rule.pairs[rng.uniform_int(rule.pairs.size())];
        locals[rule.field_a] = a;
        locals[rule.field_b] = b;
      }
    }
    double logit = spec.base_logit;
    for (const auto& rule : spec.rules) {
      std::uint32_t a = locals[rule.field_a], b = locals[rule.field_b];
      for (auto [pa, pb] : rule.pairs)
        if (a == pa && b == pb) {
          logit += rule.boost;
          break;
        }
    }
    logits[i] = logit;
    std::uint8_t y = rng.bernoulli(1.0 / (1.0 + std::exp(-logit / spec.temperature))) ? 1 : 0;
    positives += y;
    ds.labels[i] = y;
    for (Eigen::Index f = 0; f < F; ++f)
      ds.rows(static_cast<Eigen::Index>(i), f) = static_cast<std::uint32_t>(fm.field_offsets[f] + locals[f]);
  }

  // Post-thresholding view: frequencies over the training split.
  for (std::uint64_t i = 0; i < spec.rows; ++i) {
    if (split_of_row(i) != Split::train) continue;
    for (Eigen::Index f = 0; f < F; ++f) ++ds.fmap.frequencies[ds.rows(static_cast<Eigen::Index>(i), f)];
  }

  SynthResult out;
  out.label_rate = static_cast<double>(positives) / static_cast<double>(spec.rows);

  // Bayes reference: score the test split with the generating logit.
  std::vector<double> test_scores;
  std::vector<std::uint8_t> test_labels;
  for (std::uint64_t i = 0; i < spec.rows; ++i) {
    if (split_of_row(i) != Split::test) continue;
    test_scores.push_back(logits[i]);
    test_labels.push_back(ds.labels[i]);
  }
  bool single_class = true;
  for (std::size_t i = 1; i < test_labels.size(); ++i)
    if (test_labels[i] != test_labels[0]) single_class = false;
  out.bayes_auc = single_class ? 0.5 : auc(test_scores, test_labels);
  ds.validate();
  out.dataset = std::move(ds);
  return out;
}

}  // namespace mapctr
