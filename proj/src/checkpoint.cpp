#include "mapctr/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace mapctr {

namespace {
constexpr char kMagic[8] = {'M', 'A', 'P', 'C', 'K', 'P', 'T', '1'};
}

nlohmann::json fmap_snapshot_json(const FeatureMap& fm) {
  nlohmann::json j;
  j["num_fields"] = fm.num_fields();
  j["global_size"] = fm.global_size;
  j["field_offsets"] = fm.field_offsets;
  j["field_cardinalities"] = fm.field_cardinalities;
  return j;
}

const TensorBlob* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json header;
  header["version"] = kVersion;
  header["stage"] = stage;
  header["fmap_hash"] = fmap_hash;
  header["fmap"] = fmap_snapshot;
  header["config"] = config_echo;
  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    nlohmann::json entry;
    entry["name"] = t.name;
    entry["shape"] = t.shape;
    entry["offset"] = offset;
    offset += static_cast<std::uint64_t>(t.data.size()) * 4;
    dir.push_back(std::move(entry));
  }
  header["tensors"] = std::move(dir);
  std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error::data("cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  std::uint64_t len = header_bytes.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
  for (const auto& t : tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * 4));
  if (!out) throw Error::data("write failure on '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot open checkpoint '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw Error::data("'" + path + "' is not a MAPCKPT1 checkpoint");
  std::uint64_t len = 0;
  if (!in.read(reinterpret_cast<char*>(&len), 8) || len == 0 || len > (64u << 20))
    throw Error::data("checkpoint header length corrupt");
  std::string header_bytes(len, '\0');
  if (!in.read(header_bytes.data(), static_cast<std::streamsize>(len)))
    throw Error::data("checkpoint truncated inside header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_bytes);
  } catch (const nlohmann::json::exception& e) {
    throw Error::data(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  Checkpoint ck;
  int version = header.at("version").get<int>();
  if (version != kVersion)
    throw Error::data("checkpoint version " + std::to_string(version) + " unsupported (want " +
                      std::to_string(kVersion) + ")");
  ck.stage = header.at("stage").get<std::string>();
  ck.fmap_hash = header.at("fmap_hash").get<std::uint64_t>();
  ck.fmap_snapshot = header.value("fmap", nlohmann::json::object());
  ck.config_echo = header.value("config", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    TensorBlob t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<std::vector<std::uint64_t>>();
    std::uint64_t count = 1;
    for (auto d : t.shape) count *= d;
    t.data.resize(count);
    ck.tensors.push_back(std::move(t));
  }
  for (auto& t : ck.tensors)
    if (!in.read(reinterpret_cast<char*>(t.data.data()),
                 static_cast<std::streamsize>(t.data.size() * 4)))
      throw Error::data("checkpoint truncated inside tensor '" + t.name + "'");
  return ck;
}

}  // namespace mapctr
