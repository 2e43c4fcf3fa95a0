#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mapctr/featuremap.hpp"
#include "mapctr/tensor.hpp"

namespace mapctr {

enum class Split { train, val, test };

Split split_from_string(const std::string& s);
const char* split_to_string(Split s);

// Deterministic 8:1:1 assignment by hashed row index. Stable across
// commands because row order inside a dataset file is fixed.
inline Split split_of_row(std::uint64_t row_index) {
  std::uint64_t s = row_index ^ 0x8e51'ecf3'45d6'a0bdULL;
  std::uint64_t h = splitmix64(s) % 10;
  if (h < 8) return Split::train;
  return h == 8 ? Split::val : Split::test;
}

// Encoded instances plus their feature map. Rows hold global feature
// indices; the mask index never appears in stored data.
struct Dataset {
  FeatureMap fmap;
  IdxMatrix rows;                    // N x F
  std::vector<std::uint8_t> labels;  // N

  Eigen::Index num_rows() const { return rows.rows(); }
  std::vector<Eigen::Index> split_rows(Split s) const;

  void validate() const;
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);
};

// Encodes parsed CSV records against a built map. Records must match the
// schema used to build the map.
Dataset encode_dataset(const std::vector<std::vector<std::string>>& records,
                       const Schema& schema, FeatureMap fmap);

// Full preprocessing pipeline: parse, build the map, encode.
Dataset preprocess_csv(const std::string& csv_path, const Schema& schema, std::uint64_t min_count);

// Reads and parses all CSV records (header skipped when the schema says so).
std::vector<std::vector<std::string>> read_csv_records(const std::string& path, const Schema& schema);

// Materializes one batch as an index matrix plus labels for the given rows.
IdxMatrix gather_rows(const Dataset& ds, const std::vector<Eigen::Index>& row_ids,
                      std::size_t at, std::size_t count);

template <class S>
Mat<S> gather_labels(const Dataset& ds, const std::vector<Eigen::Index>& row_ids,
                     std::size_t at, std::size_t count) {
  Mat<S> out(static_cast<Eigen::Index>(count), 1);
  for (std::size_t i = 0; i < count; ++i)
    out(static_cast<Eigen::Index>(i), 0) = static_cast<S>(ds.labels[row_ids[at + i]]);
  return out;
}

}  // namespace mapctr
