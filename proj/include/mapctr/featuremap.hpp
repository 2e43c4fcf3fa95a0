#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mapctr/common.hpp"
#include "mapctr/schema.hpp"

namespace mapctr {

// Global indexing of all categorical features across fields. Field f owns
// the contiguous global range [field_offsets[f], field_offsets[f] +
// field_cardinalities[f]); local index 0 inside every field is the dummy
// <Unknown> feature. One shared mask slot trails the map at global index M,
// so embedding tables are sized M + 1.
struct FeatureMap {
  std::vector<std::uint64_t> field_offsets;
  std::vector<std::uint64_t> field_cardinalities;
  std::uint64_t global_size = 0;  // M
  std::vector<std::uint64_t> frequencies;  // per global index, training split only

  // In-memory only; not persisted in the binary dataset format.
  std::vector<std::string> field_names;
  std::vector<std::vector<std::string>> vocab;                       // local -> key
  std::vector<std::unordered_map<std::string, std::uint32_t>> key_to_local;

  std::size_t num_fields() const { return field_offsets.size(); }
  std::uint64_t mask_index() const { return global_size; }

  // Field owning a global index, by binary search over offsets.
  std::size_t field_of(std::uint64_t global_index) const;

  std::uint64_t global_index(std::size_t field, std::uint64_t local) const {
    return field_offsets[field] + local;
  }
  std::uint64_t local_index(std::size_t field, std::uint64_t global) const {
    return global - field_offsets[field];
  }

  // Key -> global index; unseen keys map to the field's <Unknown>.
  std::uint32_t encode(std::size_t field, const std::string& key) const;
  // Local index -> key (requires vocab).
  const std::string& decode(std::size_t field, std::uint64_t local) const;

  std::uint64_t hash() const;
  void validate() const;
};

// Builds the map from parsed CSV records (pass 1: vocabulary counting with
// min-count thresholding; pass 2: post-thresholding frequencies over the
// training split).
FeatureMap build_feature_map(const std::vector<std::vector<std::string>>& records,
                             const Schema& schema, std::uint64_t min_count);

}  // namespace mapctr
