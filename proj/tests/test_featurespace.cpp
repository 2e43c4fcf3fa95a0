#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mapctr/dataset.hpp"
#include "mapctr/featuremap.hpp"
#include "mapctr/sampler.hpp"
#include "mapctr/schema.hpp"
#include "oracles.hpp"

using namespace mapctr;

namespace {

Schema two_field_schema() {
  return Schema::from_json_text(R"({
    "columns": [
      {"name": "y", "kind": "label"},
      {"name": "f1", "kind": "categorical"},
      {"name": "f2", "kind": "categorical"}
    ]
  })");
}

std::vector<std::string> row(std::initializer_list<const char*> cells) {
  std::vector<std::string> r;
  for (const char* c : cells) r.emplace_back(c);
  return r;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Dataset preprocess_from_records(const std::vector<std::vector<std::string>>& records) {
  Schema s = two_field_schema();
  FeatureMap fm = build_feature_map(records, s, 1);
  return encode_dataset(records, s, std::move(fm));
}

}  // namespace

TEST_CASE("feature map offsets, cardinalities and mask index") {
  // Two fields with raw vocab sizes 3 and 2, everything surviving.
  std::vector<std::vector<std::string>> records;
  const char* f1[] = {"a", "b", "c"};
  const char* f2[] = {"x", "y"};
  for (int rep = 0; rep < 2; ++rep)
    for (const char* a : f1)
      for (const char* b : f2) records.push_back(row({"0", a, b}));
  FeatureMap fm = build_feature_map(records, two_field_schema(), 2);
  CHECK(fm.num_fields() == 2);
  CHECK(fm.field_cardinalities[0] == 4);
  CHECK(fm.field_cardinalities[1] == 3);
  CHECK(fm.field_offsets[0] == 0);
  CHECK(fm.field_offsets[1] == 4);
  CHECK(fm.global_size == 7);
  CHECK(fm.mask_index() == 7);
  CHECK(fm.field_of(3) == 0);
  CHECK(fm.field_of(4) == 1);
}

TEST_CASE("min-count thresholding maps rare keys to <Unknown>") {
  std::vector<std::vector<std::string>> records;
  for (int i = 0; i < 13; ++i) records.push_back(row({"0", "a", "z"}));
  // Place the rare key on a training-split row so its count lands in the
  // frequency table.
  std::size_t train_row = 0;
  while (split_of_row(train_row) != Split::train) ++train_row;
  records[train_row][1] = "b";
  FeatureMap fm = build_feature_map(records, two_field_schema(), 2);
  CHECK(fm.field_cardinalities[0] == 2);  // <Unknown> + "a"
  CHECK(fm.encode(0, "b") == fm.global_index(0, 0));
  CHECK(fm.frequencies[fm.global_index(0, 0)] >= 1);

  // Per-field frequencies sum to the number of training rows.
  std::uint64_t train_rows = 0;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (split_of_row(i) == Split::train) ++train_rows;
  for (std::size_t f = 0; f < fm.num_fields(); ++f) {
    std::uint64_t sum = 0;
    for (std::uint64_t j = 0; j < fm.field_cardinalities[f]; ++j)
      sum += fm.frequencies[fm.global_index(f, j)];
    CHECK(sum == train_rows);
  }
}

TEST_CASE("zero surviving categories is a build error") {
  std::vector<std::vector<std::string>> records;
  records.push_back(row({"0", "only-once", "z"}));
  records.push_back(row({"1", "another-once", "z"}));
  CHECK_THROWS_AS((void)build_feature_map(records, two_field_schema(), 2), Error);
}

TEST_CASE("malformed row reports its line number") {
  std::vector<std::vector<std::string>> records;
  records.push_back(row({"0", "a", "z"}));
  records.push_back(row({"0", "a"}));  // missing a column
  try {
    (void)build_feature_map(records, two_field_schema(), 1);
    FAIL("expected data error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("numeric log discretization") {
  CHECK(discretize_numeric("") == "NA");
  CHECK(discretize_numeric("2") == "2");
  CHECK(discretize_numeric("-3") == "-3");
  CHECK(discretize_numeric("54") == "15");    // floor(ln(54)^2) = floor(15.91)
  CHECK(discretize_numeric("1000") == "47");  // floor(ln(1000)^2) = floor(47.717)
  CHECK_THROWS_AS((void)discretize_numeric("abc"), Error);
}

TEST_CASE("timestamp expansion to weekday/day/hour/weekend") {
  // 2014-10-21 (Tuesday) hour 4
  auto parts = expand_timestamp("14102104");
  CHECK(parts[0] == "2");
  CHECK(parts[1] == "21");
  CHECK(parts[2] == "4");
  CHECK(parts[3] == "0");
  // 2014-10-25 is a Saturday
  auto sat = expand_timestamp("14102523");
  CHECK(sat[0] == "6");
  CHECK(sat[3] == "1");
  CHECK_THROWS_AS((void)expand_timestamp("14133000"), Error);  // month 13
  CHECK_THROWS_AS((void)expand_timestamp("nonsense"), Error);
}

TEST_CASE("round-trip: encode then decode recovers post-thresholding keys") {
  std::vector<std::vector<std::string>> records;
  const char* keys[] = {"red", "green", "blue"};
  for (int rep = 0; rep < 4; ++rep)
    for (const char* k : keys) records.push_back(row({"1", k, "const"}));
  FeatureMap fm = build_feature_map(records, two_field_schema(), 2);
  for (const char* k : keys) {
    std::uint32_t g = fm.encode(0, k);
    CHECK(fm.decode(0, fm.local_index(0, g)) == k);
  }
  // Unseen key encodes to <Unknown> and decodes to the dummy.
  std::uint32_t u = fm.encode(0, "never-seen");
  CHECK(fm.local_index(0, u) == 0);
  CHECK(fm.decode(0, 0) == "<Unknown>");
}

TEST_CASE("frequency sampler follows its weights (binomial 3-sigma)") {
  FrequencySampler s = FrequencySampler::from_weights(0, {1.0, 3.0});
  Rng rng(123);
  const int draws = 10000;
  std::uint64_t ones = 0;
  for (int i = 0; i < draws; ++i) ones += s.draw(rng) == 1;
  CHECK(oracle::binomial_3sigma_ok(ones, draws, 0.75));
}

TEST_CASE("uniform exclusion stays inside the reduced support") {
  FrequencySampler s = FrequencySampler::uniform_range(0, 5);
  Rng rng(7);
  std::vector<std::uint64_t> counts(5, 0);
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t v = s.draw_excluding(rng, 2);
    REQUIRE(v < 5);
    REQUIRE(v != 2);
    ++counts[v];
  }
  std::vector<double> expected = {2500, 2500, 0, 2500, 2500};
  CHECK(oracle::chi_square_ok(counts, expected));
}

TEST_CASE("weighted exclusion follows the renormalized law (both code paths)") {
  FrequencySampler s = FrequencySampler::from_weights(10, {1.0, 2.0, 3.0, 4.0});
  const int draws = 30000;
  for (bool fast : {false, true}) {
    Rng rng(fast ? 311 : 171);
    std::vector<std::uint64_t> counts(4, 0);
    for (int i = 0; i < draws; ++i) {
      std::uint64_t v = fast ? s.draw_excluding_fast(rng, 11) : s.draw_excluding(rng, 11);
      REQUIRE(v >= 10);
      REQUIRE(v < 14);
      REQUIRE(v != 11);
      ++counts[v - 10];
    }
    double rem = 1.0 + 3.0 + 4.0;
    std::vector<double> expected = {draws * 1.0 / rem, 0, draws * 3.0 / rem, draws * 4.0 / rem};
    CHECK(oracle::chi_square_ok(counts, expected));
  }
}

TEST_CASE("field-scoped sampler only yields indices of its field") {
  std::vector<std::vector<std::string>> records;
  const char* f1[] = {"a", "b", "c"};
  const char* f2[] = {"x", "y"};
  for (int rep = 0; rep < 3; ++rep)
    for (const char* a : f1)
      for (const char* b : f2) records.push_back(row({"0", a, b}));
  FeatureMap fm = build_feature_map(records, two_field_schema(), 2);
  for (std::size_t f = 0; f < 2; ++f) {
    FrequencySampler s = FrequencySampler::field_frequency(fm, f);
    Rng rng(99 + f);
    for (int i = 0; i < 2000; ++i) {
      std::uint64_t v = s.draw(rng);
      CHECK(v >= fm.field_offsets[f]);
      CHECK(v < fm.field_offsets[f] + fm.field_cardinalities[f]);
    }
  }
}

TEST_CASE("sample_noise respects exclusion and support-of-one errors") {
  FrequencySampler s = FrequencySampler::uniform_range(0, 5);
  Rng rng(3);
  auto out = sample_noise(s, 64, 2, rng);
  for (auto v : out) {
    CHECK(v < 5);
    CHECK(v != 2);
  }
  FrequencySampler one = FrequencySampler::uniform_range(0, 1);
  CHECK_THROWS_AS((void)sample_noise(one, 1, 0, rng), Error);
}

TEST_CASE("dataset binary round-trip is bit-exact") {
  std::vector<std::vector<std::string>> records;
  Rng rng(5);
  const char* f1[] = {"a", "b", "c", "d"};
  const char* f2[] = {"x", "y", "z"};
  for (int i = 0; i < 200; ++i)
    records.push_back(row({rng.bernoulli(0.4) ? "1" : "0",
                           f1[rng.uniform_int(4)], f2[rng.uniform_int(3)]}));
  Dataset ds = preprocess_from_records(records);
  std::string path = temp_path("mapctr_ds_roundtrip.bin");
  ds.save(path);
  Dataset back = Dataset::load(path);
  CHECK(back.fmap.hash() == ds.fmap.hash());
  CHECK(back.rows.rows() == ds.rows.rows());
  CHECK((back.rows.array() == ds.rows.array()).all());
  CHECK(back.labels == ds.labels);

  // A second save produces identical bytes.
  std::string path2 = temp_path("mapctr_ds_roundtrip2.bin");
  back.save(path2);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("truncated dataset file is refused with a structured error") {
  std::vector<std::vector<std::string>> records;
  for (int i = 0; i < 40; ++i) records.push_back(row({"0", "a", "x"}));
  Dataset ds = preprocess_from_records(records);
  std::string path = temp_path("mapctr_ds_trunc.bin");
  ds.save(path);
  auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 3);
  CHECK_THROWS_AS((void)Dataset::load(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("preprocess_csv end to end with header and tab delimiter") {
  std::string csv = temp_path("mapctr_input.tsv");
  {
    std::ofstream out(csv);
    out << "click\tcolor\tnum\n";
    out << "1\tred\t54\n";
    out << "0\tred\t54\n";
    out << "0\tblue\t1000\n";
    out << "1\tblue\t\n";
  }
  Schema schema = Schema::from_json_text(R"({
    "delimiter": "tab",
    "has_header": true,
    "columns": [
      {"name": "click", "kind": "label"},
      {"name": "color", "kind": "categorical"},
      {"name": "num", "kind": "numeric-log-discretized"}
    ]
  })");
  Dataset ds = preprocess_csv(csv, schema, 1);
  CHECK(ds.num_rows() == 4);
  CHECK(ds.fmap.num_fields() == 2);
  // Numeric keys: 54 -> "15" (x2), 1000 -> "47", missing -> "NA".
  CHECK(ds.fmap.key_to_local[1].count("15") == 1);
  CHECK(ds.fmap.key_to_local[1].count("47") == 1);
  CHECK(ds.fmap.key_to_local[1].count("NA") == 1);
  CHECK(ds.labels == std::vector<std::uint8_t>{1, 0, 0, 1});
  std::remove(csv.c_str());
}

TEST_CASE("split assignment is deterministic and roughly 8:1:1") {
  std::size_t n = 100000, train = 0, val = 0, test = 0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (split_of_row(i)) {
      case Split::train: ++train; break;
      case Split::val: ++val; break;
      case Split::test: ++test; break;
    }
  }
  CHECK(oracle::binomial_3sigma_ok(train, n, 0.8));
  CHECK(oracle::binomial_3sigma_ok(val, n, 0.1));
  CHECK(oracle::binomial_3sigma_ok(test, n, 0.1));
}
