#include "mapctr/featuremap.hpp"

#include <algorithm>
#include <map>

#include "mapctr/dataset.hpp"

namespace mapctr {

std::size_t FeatureMap::field_of(std::uint64_t global_index) const {
  if (global_index >= global_size)
    throw Error::contract("field_of: index " + std::to_string(global_index) + " >= M=" +
                          std::to_string(global_size));
  auto it = std::upper_bound(field_offsets.begin(), field_offsets.end(), global_index);
  return static_cast<std::size_t>(it - field_offsets.begin()) - 1;
}

std::uint32_t FeatureMap::encode(std::size_t field, const std::string& key) const {
  if (key_to_local.empty()) throw Error::contract("encode: feature map has no vocabulary");
  const auto& m = key_to_local[field];
  auto it = m.find(key);
  std::uint64_t local = it == m.end() ? 0 : it->second;
  return static_cast<std::uint32_t>(field_offsets[field] + local);
}

const std::string& FeatureMap::decode(std::size_t field, std::uint64_t local) const {
  if (vocab.empty()) throw Error::contract("decode: feature map has no vocabulary");
  return vocab[field].at(local);
}

std::uint64_t FeatureMap::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a64_u64(num_fields(), h);
  h = fnv1a64_u64(global_size, h);
  for (auto v : field_offsets) h = fnv1a64_u64(v, h);
  for (auto v : field_cardinalities) h = fnv1a64_u64(v, h);
  for (auto v : frequencies) h = fnv1a64_u64(v, h);
  return h;
}

void FeatureMap::validate() const {
  if (field_offsets.size() != field_cardinalities.size())
    throw Error::data("feature map: offsets/cardinalities size mismatch");
  std::uint64_t at = 0;
  for (std::size_t f = 0; f < field_offsets.size(); ++f) {
    if (field_offsets[f] != at)
      throw Error::data("feature map: offset of field " + std::to_string(f) + " is " +
                        std::to_string(field_offsets[f]) + ", want " + std::to_string(at));
    if (field_cardinalities[f] == 0)
      throw Error::data("feature map: field " + std::to_string(f) + " has cardinality 0");
    at += field_cardinalities[f];
  }
  if (at != global_size) throw Error::data("feature map: cardinalities do not sum to M");
  if (frequencies.size() != global_size)
    throw Error::data("feature map: frequency array size != M");
}

namespace {

struct TransformedRows {
  std::vector<std::vector<std::string>> keys;  // per row, F field keys
  std::vector<std::uint8_t> labels;
};

TransformedRows transform_all(const std::vector<std::vector<std::string>>& records,
                              const Schema& schema) {
  TransformedRows out;
  out.keys.reserve(records.size());
  out.labels.reserve(records.size());
  std::vector<std::string> keys;
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::uint8_t label = 0;
    transform_row(records[i], schema, i + 1, keys, label);
    out.keys.push_back(keys);
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace

FeatureMap build_feature_map(const std::vector<std::vector<std::string>>& records,
                             const Schema& schema, std::uint64_t min_count) {
  if (records.empty()) throw Error::data("build_feature_map: no input rows");
  if (min_count < 1) throw Error::config("build_feature_map: min_count must be >= 1");
  const std::size_t F = schema.num_fields();
  TransformedRows rows = transform_all(records, schema);

  // Pass 1: raw counts per field over all rows. std::map keeps key order
  // deterministic.
  std::vector<std::map<std::string, std::uint64_t>> counts(F);
  for (const auto& keys : rows.keys)
    for (std::size_t f = 0; f < F; ++f) ++counts[f][keys[f]];

  FeatureMap fm;
  fm.field_names = schema.field_names();
  fm.field_offsets.resize(F);
  fm.field_cardinalities.resize(F);
  fm.vocab.resize(F);
  fm.key_to_local.resize(F);
  std::uint64_t at = 0;
  for (std::size_t f = 0; f < F; ++f) {
    fm.field_offsets[f] = at;
    auto& voc = fm.vocab[f];
    voc.push_back("<Unknown>");
    for (const auto& [key, n] : counts[f]) {
      if (n < min_count) continue;
      fm.key_to_local[f].emplace(key, static_cast<std::uint32_t>(voc.size()));
      voc.push_back(key);
    }
    if (voc.size() == 1)
      throw Error::data("field '" + fm.field_names[f] + "': no category reaches min_count=" +
                        std::to_string(min_count));
    fm.field_cardinalities[f] = voc.size();
    at += voc.size();
  }
  fm.global_size = at;

  // Pass 2: post-thresholding frequencies, training split only.
  fm.frequencies.assign(fm.global_size, 0);
  for (std::size_t i = 0; i < rows.keys.size(); ++i) {
    if (split_of_row(i) != Split::train) continue;
    for (std::size_t f = 0; f < F; ++f) ++fm.frequencies[fm.encode(f, rows.keys[i][f])];
  }
  fm.validate();
  return fm;
}

Dataset encode_dataset(const std::vector<std::vector<std::string>>& records,
                       const Schema& schema, FeatureMap fmap) {
  const std::size_t F = schema.num_fields();
  TransformedRows rows = transform_all(records, schema);
  Dataset ds;
  ds.fmap = std::move(fmap);
  ds.rows.resize(static_cast<Eigen::Index>(rows.keys.size()), static_cast<Eigen::Index>(F));
  ds.labels = std::move(rows.labels);
  for (std::size_t i = 0; i < rows.keys.size(); ++i)
    for (std::size_t f = 0; f < F; ++f)
      ds.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) =
          ds.fmap.encode(f, rows.keys[i][f]);
  ds.validate();
  return ds;
}

}  // namespace mapctr
