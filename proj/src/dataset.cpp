#include "mapctr/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "dataset/checkpoint formats are little-endian");

namespace mapctr {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'P', 'D', 'A', 'T', 'A', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t read_u64(std::istream& in, const char* what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 8))
    throw Error::data(std::string("dataset file truncated while reading ") + what);
  return v;
}

}  // namespace

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  throw Error::usage("unknown split '" + s + "' (want train|val|test)");
}

const char* split_to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

std::vector<Eigen::Index> Dataset::split_rows(Split s) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < num_rows(); ++i)
    if (split_of_row(static_cast<std::uint64_t>(i)) == s) out.push_back(i);
  return out;
}

void Dataset::validate() const {
  fmap.validate();
  if (static_cast<std::size_t>(rows.rows()) != labels.size())
    throw Error::data("dataset: row/label count mismatch");
  if (rows.cols() != static_cast<Eigen::Index>(fmap.num_fields()))
    throw Error::data("dataset: row width != number of fields");
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index f = 0; f < rows.cols(); ++f) {
      std::uint64_t g = rows(i, f);
      std::uint64_t lo = fmap.field_offsets[f];
      std::uint64_t hi = lo + fmap.field_cardinalities[f];
      if (g < lo || g >= hi)
        throw Error::data("dataset: row " + std::to_string(i) + " field " + std::to_string(f) +
                          " holds index " + std::to_string(g) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + ")");
    }
  for (std::uint8_t y : labels)
    if (y > 1) throw Error::data("dataset: label not in {0,1}");
}

void Dataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error::data("cannot open '" + path + "' for writing");
  out.write(kMagic, 8);
  const std::uint64_t f = fmap.num_fields();
  write_u64(out, f);
  write_u64(out, fmap.global_size);
  write_u64(out, static_cast<std::uint64_t>(num_rows()));
  for (auto v : fmap.field_offsets) write_u64(out, v);
  for (auto v : fmap.field_cardinalities) write_u64(out, v);
  for (auto v : fmap.frequencies) write_u64(out, v);
  std::vector<std::uint32_t> rowbuf(f);
  for (Eigen::Index i = 0; i < num_rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) rowbuf[j] = rows(i, j);
    out.write(reinterpret_cast<const char*>(rowbuf.data()), 4 * static_cast<std::streamsize>(f));
    out.put(static_cast<char>(labels[i]));
  }
  if (!out) throw Error::data("write failure on '" + path + "'");
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error::data("cannot open dataset '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw Error::data("'" + path + "' is not a MAPDATA1 dataset");
  Dataset ds;
  std::uint64_t f = read_u64(in, "field count");
  std::uint64_t m = read_u64(in, "feature count");
  std::uint64_t n = read_u64(in, "row count");
  if (f == 0 || f > 4096) throw Error::data("dataset: implausible field count");
  ds.fmap.global_size = m;
  ds.fmap.field_offsets.resize(f);
  ds.fmap.field_cardinalities.resize(f);
  ds.fmap.frequencies.resize(m);
  for (auto& v : ds.fmap.field_offsets) v = read_u64(in, "offsets");
  for (auto& v : ds.fmap.field_cardinalities) v = read_u64(in, "cardinalities");
  for (auto& v : ds.fmap.frequencies) v = read_u64(in, "frequencies");
  ds.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(f));
  ds.labels.resize(n);
  std::vector<std::uint32_t> rowbuf(f);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(rowbuf.data()), 4 * static_cast<std::streamsize>(f)))
      throw Error::data("dataset file truncated at row " + std::to_string(i));
    for (std::uint64_t j = 0; j < f; ++j)
      ds.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rowbuf[j];
    int y = in.get();
    if (y == EOF) throw Error::data("dataset file truncated at row " + std::to_string(i));
    ds.labels[i] = static_cast<std::uint8_t>(y);
  }
  ds.validate();
  return ds;
}

std::vector<std::vector<std::string>> read_csv_records(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error::data("cannot open input '" + path + "'");
  std::vector<std::vector<std::string>> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && schema.has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    records.push_back(split_csv_line(line, schema.delimiter));
  }
  return records;
}

Dataset preprocess_csv(const std::string& csv_path, const Schema& schema, std::uint64_t min_count) {
  auto records = read_csv_records(csv_path, schema);
  FeatureMap fm = build_feature_map(records, schema, min_count);
  return encode_dataset(records, schema, std::move(fm));
}

IdxMatrix gather_rows(const Dataset& ds, const std::vector<Eigen::Index>& row_ids,
                      std::size_t at, std::size_t count) {
  IdxMatrix out(static_cast<Eigen::Index>(count), ds.rows.cols());
  for (std::size_t i = 0; i < count; ++i)
    out.row(static_cast<Eigen::Index>(i)) = ds.rows.row(row_ids[at + i]);
  return out;
}

}  // namespace mapctr
