#include "mapctr/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace mapctr {

FrequencySampler FrequencySampler::from_weights(std::uint64_t begin, std::vector<double> weights) {
  FrequencySampler s;
  s.begin_ = begin;
  s.count_ = weights.size();
  s.uniform_ = false;
  if (weights.empty()) throw Error::contract("sampler: empty support");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw Error::contract("sampler: weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0) throw Error::contract("sampler: total weight is zero");
  s.total_ = total;
  s.prefix_.resize(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    s.prefix_[i] = acc;
  }

  // Vose alias construction.
  const std::size_t n = weights.size();
  s.prob_.assign(n, 1.0);
  s.alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * static_cast<double>(n) / total;
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  while (!small.empty() && !large.empty()) {
    std::uint32_t lo = small.back(), hi = large.back();
    small.pop_back();
    large.pop_back();
    s.prob_[lo] = scaled[lo];
    s.alias_[lo] = hi;
    scaled[hi] -= 1.0 - scaled[lo];
    (scaled[hi] < 1.0 ? small : large).push_back(hi);
  }
  // Leftovers are numerically == 1.
  for (std::uint32_t i : small) s.prob_[i] = 1.0;
  for (std::uint32_t i : large) s.prob_[i] = 1.0;
  s.weights_ = std::move(weights);
  return s;
}

FrequencySampler FrequencySampler::uniform_range(std::uint64_t begin, std::uint64_t count) {
  if (count == 0) throw Error::contract("sampler: empty support");
  FrequencySampler s;
  s.begin_ = begin;
  s.count_ = count;
  s.uniform_ = true;
  s.total_ = static_cast<double>(count);
  return s;
}

FrequencySampler FrequencySampler::field_frequency(const FeatureMap& fm, std::size_t field) {
  std::uint64_t off = fm.field_offsets[field], card = fm.field_cardinalities[field];
  std::vector<double> w(card);
  for (std::uint64_t i = 0; i < card; ++i) w[i] = static_cast<double>(fm.frequencies[off + i]);
  double total = 0.0;
  for (double x : w) total += x;
  if (total <= 0.0)
    // A field can lack training-split occurrences in tiny datasets; fall
    // back to uniform so the support stays drawable.
    return uniform_range(off, card);
  return from_weights(off, std::move(w));
}

FrequencySampler FrequencySampler::field_uniform(const FeatureMap& fm, std::size_t field) {
  return uniform_range(fm.field_offsets[field], fm.field_cardinalities[field]);
}

FrequencySampler FrequencySampler::global_frequency(const FeatureMap& fm) {
  std::vector<double> w(fm.global_size);
  for (std::uint64_t i = 0; i < fm.global_size; ++i) w[i] = static_cast<double>(fm.frequencies[i]);
  return from_weights(0, std::move(w));
}

FrequencySampler FrequencySampler::global_uniform(const FeatureMap& fm) {
  return uniform_range(0, fm.global_size);
}

double FrequencySampler::weight(std::uint64_t global_index) const {
  if (global_index < begin_ || global_index >= end()) return 0.0;
  return uniform_ ? 1.0 : weights_[global_index - begin_];
}

std::uint64_t FrequencySampler::draw(Rng& rng) const {
  if (uniform_) return begin_ + rng.uniform_int(count_);
  std::uint64_t i = rng.uniform_int(count_);
  if (rng.uniform() < prob_[i]) return begin_ + i;
  return begin_ + alias_[i];
}

std::uint64_t FrequencySampler::local_excluding(Rng& rng, std::uint64_t e) const {
  // Inverse CDF over the prefix sums with the excluded index's mass removed.
  double we = weights_[e];
  double rem = total_ - we;
  if (rem <= 0.0) {
    // Everything except e has zero weight; degrade to uniform over the rest.
    std::uint64_t r = rng.uniform_int(count_ - 1);
    return r >= e ? r + 1 : r;
  }
  double x = rng.uniform() * rem;
  double below_e = prefix_[e] - we;
  if (x >= below_e) x += we;
  auto it = std::upper_bound(prefix_.begin(), prefix_.end(), x);
  std::uint64_t i = it == prefix_.end() ? count_ - 1 : static_cast<std::uint64_t>(it - prefix_.begin());
  if (i == e) {
    // Rounding landed on the cut; step to the nearest weighted neighbor.
    std::uint64_t j = i + 1;
    while (j < count_ && weights_[j] <= 0.0) ++j;
    if (j < count_) return j;
    j = i;
    while (j > 0 && weights_[j - 1] <= 0.0) --j;
    if (j > 0) return j - 1;
    throw Error::contract("sampler: no drawable index besides the excluded one");
  }
  return i;
}

std::uint64_t FrequencySampler::draw_excluding(Rng& rng, std::uint64_t exclude) const {
  if (exclude < begin_ || exclude >= end()) return draw(rng);
  if (count_ <= 1) throw Error::contract("sampler: support of size 1 with exclusion");
  if (uniform_) {
    std::uint64_t e = exclude - begin_;
    std::uint64_t r = rng.uniform_int(count_ - 1);
    return begin_ + (r >= e ? r + 1 : r);
  }
  return begin_ + local_excluding(rng, exclude - begin_);
}

std::uint64_t FrequencySampler::draw_excluding_fast(Rng& rng, std::uint64_t exclude) const {
  if (exclude < begin_ || exclude >= end()) return draw(rng);
  if (count_ <= 1) throw Error::contract("sampler: support of size 1 with exclusion");
  if (uniform_) return draw_excluding(rng, exclude);
  // An alias draw conditioned on != exclude already follows the renormalized
  // law, so accepting the first miss is exact; the bounded fallback keeps
  // the worst case deterministic.
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::uint64_t v = draw(rng);
    if (v != exclude) return v;
  }
  return begin_ + local_excluding(rng, exclude - begin_);
}

std::vector<std::uint32_t> sample_noise(const FrequencySampler& sampler, std::size_t k,
                                        std::optional<std::uint64_t> exclude, Rng& rng) {
  std::vector<std::uint32_t> out(k);
  if (exclude) {
    for (std::size_t i = 0; i < k; ++i)
      out[i] = static_cast<std::uint32_t>(sampler.draw_excluding_fast(rng, *exclude));
  } else {
    for (std::size_t i = 0; i < k; ++i) out[i] = static_cast<std::uint32_t>(sampler.draw(rng));
  }
  return out;
}

}  // namespace mapctr
