#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "mapctr/featuremap.hpp"
#include "mapctr/tensor.hpp"

namespace mapctr {

struct TensorBlob {
  std::string name;
  std::vector<std::uint64_t> shape;  // rows, cols
  std::vector<float> data;
};

// Serialized model state: MAPCKPT1 magic, little-endian u64 header length,
// UTF-8 JSON header (version, stage, config echo, feature-map hash and
// snapshot, tensor directory), then raw float32 payloads in directory order.
struct Checkpoint {
  static constexpr int kVersion = 1;

  std::string stage;  // "pretrained" | "finetuned" | "scratch"
  std::uint64_t fmap_hash = 0;
  nlohmann::json config_echo;
  nlohmann::json fmap_snapshot;
  std::vector<TensorBlob> tensors;

  const TensorBlob* find(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

nlohmann::json fmap_snapshot_json(const FeatureMap& fm);

template <class S>
TensorBlob to_blob(const Parameter<S>& p) {
  TensorBlob b;
  b.name = p.name;
  b.shape = {static_cast<std::uint64_t>(p.value.rows()), static_cast<std::uint64_t>(p.value.cols())};
  b.data.resize(static_cast<std::size_t>(p.value.size()));
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) b.data[at++] = static_cast<float>(p.value(i, j));
  return b;
}

template <class S>
void from_blob(const TensorBlob& b, Parameter<S>& p) {
  if (b.shape.size() != 2 || static_cast<Eigen::Index>(b.shape[0]) != p.value.rows() ||
      static_cast<Eigen::Index>(b.shape[1]) != p.value.cols())
    throw Error::data("checkpoint tensor '" + b.name + "' has shape " +
                      std::to_string(b.shape.empty() ? 0 : b.shape[0]) + "x" +
                      std::to_string(b.shape.size() < 2 ? 0 : b.shape[1]) + ", model wants " +
                      shape_str(p.value));
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = static_cast<S>(b.data[at++]);
}

}  // namespace mapctr
